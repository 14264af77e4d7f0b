#include "roughvol/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "roughvol/analysis.hpp"
#include "roughvol/exact_law.hpp"
#include "roughvol/moments.hpp"
#include "roughvol/parallel.hpp"
#include "roughvol/scheme.hpp"
#include "roughvol/words.hpp"

namespace roughvol::cli {

using nlohmann::ordered_json;

std::string Table::to_csv() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += ',';
            s += cells[i];
        }
        s += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return s;
}

namespace {

std::string num(double x) { return format_number(x); }
std::string num(int x) { return std::to_string(x); }

ordered_json model_json(const ModelParams& p) {
    return {{"alpha", p.alpha}, {"kappa1", p.kappa1}, {"kappa2", p.kappa2}, {"sigma", p.sigma},
            {"rho", p.rho},     {"x0", p.x0},         {"l0", p.L0},         {"horizon", p.T}};
}

ordered_json fit_json(const RateFit& fit) {
    return {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},
            {"theoretical", fit.theoretical.to_string()},
            {"theoretical_order", fit.theoretical.order},
            {"flatness", fit.flatness},
            {"band", fit.band},
            {"pass", fit.pass}};
}

Artifacts exact_law_cmd(const RunConfig& c) {
    const ModelParams& p = c.model;
    const TimeGrid grid(c.n_list.front(), p.T);
    const VolterraOU ou(p);
    const int n = grid.n();
    std::vector<double> mean(static_cast<std::size_t>(n + 1)), var(static_cast<std::size_t>(n + 1));
    parallel_for(static_cast<std::size_t>(n + 1), [&](std::size_t k) {
        const double t = grid.time(static_cast<int>(k));
        mean[k] = ou.mean(t);
        var[k] = ou.cov(t, t);
    });
    Artifacts a;
    a.table.header = {"k", "t", "mean", "var"};
    for (int k = 0; k <= n; ++k)
        a.table.add({num(k), num(grid.time(k)), num(mean[static_cast<std::size_t>(k)]), num(var[static_cast<std::size_t>(k)])});
    a.summary["results"] = {{"mean_T", mean.back()}, {"var_T", var.back()}};
    if (p.kappa2 < 0.0) a.summary["results"]["sigma_inf_sq"] = stationary_variance(p);
    return a;
}

Artifacts scheme_law_cmd(const RunConfig& c) {
    const ModelParams& p = c.model;
    const TimeGrid grid(c.n_list.front(), p.T);
    const SchemeLaw law(grid, p, {.full_covariance = false});
    const int n = grid.n();
    std::vector<double> var(static_cast<std::size_t>(n + 1));
    parallel_for(var.size(), [&](std::size_t k) { var[k] = law.cov(static_cast<int>(k), static_cast<int>(k)); });
    Artifacts a;
    a.table.header = {"k", "t", "mean", "var"};
    for (int k = 0; k <= n; ++k)
        a.table.add({num(k), num(grid.time(k)), num(law.mean()(k)), num(var[static_cast<std::size_t>(k)])});
    a.summary["results"] = {{"mean_T", law.mean()(n)}, {"var_T", var.back()}};
    return a;
}

// per-row running mean and squared deviations, merged block by block
struct RowStats {
    double count = 0.0;
    Eigen::VectorXd mean, m2;

    void merge(const Eigen::MatrixXd& block) {
        const double m = static_cast<double>(block.cols());
        const Eigen::VectorXd bm = block.rowwise().mean();
        const Eigen::VectorXd bm2 = (block.colwise() - bm).rowwise().squaredNorm();
        if (count == 0.0) {
            count = m;
            mean = bm;
            m2 = bm2;
            return;
        }
        const double total = count + m;
        const Eigen::VectorXd d = bm - mean;
        mean += d * (m / total);
        m2 += bm2 + d.cwiseProduct(d) * (count * m / total);
        count = total;
    }
    double var(Eigen::Index k) const { return count > 1.0 ? m2(k) / (count - 1.0) : 0.0; }
};

Artifacts sample_cmd(const RunConfig& c) {
    if (c.paths == 0) throw std::invalid_argument("sample needs at least one path");
    const ModelParams& p = c.model;
    const TimeGrid grid(c.n_list.front(), p.T);
    const std::size_t blocks = (c.paths + kSampleBlock - 1) / kSampleBlock;
    std::vector<RowStats> xstat(blocks), lstat(blocks);
    simulate_scheme(grid, p, c.b, c.f, c.paths, c.seed, [&](std::size_t blk, const PathBlock& paths) {
        xstat[blk].merge(paths.X);
        lstat[blk].merge(paths.L);
    });
    RowStats X, L;
    for (std::size_t b = 0; b < blocks; ++b) {
        // merge block summaries in block order
        const auto fold = [](RowStats& into, const RowStats& s) {
            if (into.count == 0.0) {
                into = s;
                return;
            }
            const double total = into.count + s.count;
            const Eigen::VectorXd d = s.mean - into.mean;
            into.mean += d * (s.count / total);
            into.m2 += s.m2 + d.cwiseProduct(d) * (into.count * s.count / total);
            into.count = total;
        };
        fold(X, xstat[b]);
        fold(L, lstat[b]);
    }
    const int n = grid.n();
    Artifacts a;
    a.table.header = {"k", "t", "mean_X", "var_X", "mean_L", "var_L"};
    for (int k = 0; k <= n; ++k)
        a.table.add({num(k), num(grid.time(k)), num(X.mean(k)), num(X.var(k)), num(L.mean(k)), num(L.var(k))});
    const double paths = static_cast<double>(c.paths);
    a.summary["results"] = {{"mean_X_T", X.mean(n)},
                            {"var_X_T", X.var(n)},
                            {"mean_L_T", L.mean(n)},
                            {"mean_L_T_std_error", std::sqrt(L.var(n) / paths)},
                            {"var_L_T", L.var(n)}};
    return a;
}

Artifacts rate_cmd(const RunConfig& c, Quantity q) {
    const ErrorCurve curve = weak_error_curve(q, c.model.alpha, c.model, c.n_list);
    Artifacts a;
    if (q == Quantity::cubic_L)
        a.table.header = {"n", "exact", "scheme", "error", "v_n", "ratio"};
    else
        a.table.header = {"n", "error", "v_n", "ratio"};
    for (std::size_t i = 0; i < curve.n_values.size(); ++i) {
        const int n = curve.n_values[i];
        const double v = n >= 2 ? theoretical_rate(c.model.alpha, n) : std::nan("");
        std::vector<std::string> row = {num(n)};
        if (q == Quantity::cubic_L) {
            row.push_back(num(curve.exact));
            row.push_back(num(curve.scheme[i]));
        }
        row.push_back(num(curve.errors[i]));
        row.push_back(num(v));
        row.push_back(num(curve.errors[i] / v));
        a.table.add(std::move(row));
    }
    ordered_json res = {{"quantity", to_string(q)}, {"exact", curve.exact},
                        {"non_monotone_steps", curve.non_monotone_steps()}};
    try {
        RateFitOptions opt;
        opt.band = c.band;
        res["fit"] = fit_json(fit_rate(curve, opt));
    } catch (const std::exception& e) {
        res["fit"] = nullptr;
        res["fit_error"] = e.what();
    }
    a.summary["results"] = res;
    return a;
}

Artifacts strong_rate_cmd(const RunConfig& c) {
    std::vector<double> errors(c.n_list.size());
    for (std::size_t i = 0; i < c.n_list.size(); ++i)
        errors[i] = strong_error_exact(TimeGrid(c.n_list[i], c.model.T), c.model);
    Artifacts a;
    a.table.header = {"n", "strong_error"};
    for (std::size_t i = 0; i < errors.size(); ++i) a.table.add({num(c.n_list[i]), num(errors[i])});
    ordered_json res;
    const double expected = -(c.model.alpha - 0.5);
    res["expected_slope"] = expected;
    bool positive = true;
    for (double e : errors) positive = positive && e > 0.0;
    if (errors.size() >= 2 && positive) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < errors.size(); ++i) {
            x.push_back(std::log(static_cast<double>(c.n_list[i])));
            y.push_back(std::log(errors[i]));
        }
        const LineFit fit = least_squares(x, y);
        res["slope"] = fit.slope;
        res["r_squared"] = fit.r_squared;
        res["band"] = c.band;
        res["pass"] = std::abs(fit.slope - expected) <= c.band;
    } else {
        res["slope"] = nullptr;
    }
    a.summary["results"] = res;
    return a;
}

Artifacts moment_cmd(const RunConfig& c) {
    const ModelParams& p = c.model;
    if (c.order < 1 || c.order > 4) throw std::invalid_argument("key 'order': moment order must be 1..4");
    if (p.L0 != 0.0) throw std::invalid_argument("moment requires l0 = 0");
    const auto fc = affine_coefficients(c.f);
    if (fc.first != 0.0 || fc.second != 1.0) throw std::invalid_argument("moment requires f = affine:0,1");
    const TimeGrid grid(c.n_list.front(), p.T);
    const auto words = contributing_words(c.order);
    Artifacts a;
    a.table.header = {"word", "exact", "scheme"};
    double exact_total = 0.0, scheme_total = 0.0;
    for (const Word& w : words) {
        const double e = word_contribution(w, p, c.b, ExactBranch{});
        const double s = word_contribution(w, p, c.b, SchemeBranch{grid});
        exact_total += e;
        scheme_total += s;
        a.table.add({w.to_string(), num(e), num(s)});
    }
    ordered_json res = {{"order", c.order}, {"exact", exact_total}, {"scheme", scheme_total}};
    // independent engines where they apply
    const bool driftless = c.b.is_zero();
    if (c.order == 1 && c.b.degree() == 0) {
        const double ref = c.b(0.0) * p.T;
        res["reference_exact"] = ref;
        res["reference_scheme"] = ref;
    } else if (c.order == 2 && driftless) {
        res["reference_exact"] = second_moment_L(p, c.f, ExactBranch{});
        res["reference_scheme"] = second_moment_L(p, c.f, SchemeBranch{grid});
    } else if (c.order == 3 && driftless) {
        CubicOptions opt;
        opt.abs_tol = c.tol;
        res["reference_exact"] = cubic_exact(p, c.f, opt);
        res["reference_scheme"] = cubic_scheme(SchemeLaw(grid, p), p, c.f);
    }
    a.summary["results"] = res;
    return a;
}

Artifacts stationary_cmd(const RunConfig& c) {
    ModelParams p = c.model;
    if (!(p.kappa2 < 0.0)) throw std::invalid_argument("stationary requires kappa2 < 0");
    p.T = std::max(p.T, 40.0);
    const VolterraOU ou(p);
    const double s2 = stationary_variance(p);
    const double limit = -p.kappa1 / p.kappa2;
    Artifacts a;
    a.table.header = {"t", "mean", "var"};
    for (double t : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) a.table.add({num(t), num(ou.mean(t)), num(ou.cov(t, t))});
    const double v40 = ou.cov(40.0, 40.0);
    a.summary["results"] = {{"sigma_inf_sq", s2},
                            {"cov_at_t40", v40},
                            {"rel_gap", std::abs(v40 - s2) / s2},
                            {"mean_limit", limit},
                            {"mean_at_t40", ou.mean(40.0)}};
    return a;
}

Artifacts freeze_gap_cmd(const RunConfig& c) {
    Artifacts a;
    a.table.header = {"n", "gap", "asymptote", "ratio"};
    for (int n : c.n_list) {
        const FreezeGap g = kernel_freeze_gap(TimeGrid(n, c.model.T), c.model.alpha);
        a.table.add({num(n), num(g.gap), num(g.asymptote), num(g.gap / g.asymptote)});
    }
    const FreezeGap last = kernel_freeze_gap(TimeGrid(c.n_list.back(), c.model.T), c.model.alpha);
    a.summary["results"] = {{"n", c.n_list.back()}, {"gap", last.gap}, {"asymptote", last.asymptote},
                            {"ratio", last.gap / last.asymptote}};
    return a;
}

ordered_json mc_json(const MCResult& r) {
    return {{"n", r.grid.n()}, {"estimate", r.estimate}, {"std_error", r.std_error}};
}

Artifacts mc_cmd(const RunConfig& c) {
    if (c.n_list.size() > 2) throw std::invalid_argument("mc takes one grid size or a coarse,fine pair");
    const ModelParams& p = c.model;
    // deterministic reference for phi(x) = x^3 with b = 0 and affine f
    const auto cubic_phi = c.phi.polynomial_coefficients();
    const bool cubic = cubic_phi.size() == 4 && cubic_phi[0] == 0.0 && cubic_phi[1] == 0.0 && cubic_phi[2] == 0.0 &&
                       cubic_phi[3] == 1.0 && c.b.is_zero() && c.f.is_polynomial() && c.f.degree() <= 1 &&
                       p.L0 == 0.0;
    auto reference = [&](int n) {
        const TimeGrid g(n, p.T);
        return cubic_scheme(SchemeLaw(g, p), p, c.f);
    };
    Artifacts a;
    a.table.header = {"n", "estimate", "std_error"};
    ordered_json res;
    if (c.n_list.size() == 1) {
        const MCResult r = mc_expectation(c.phi, c.b, c.f, p, TimeGrid(c.n_list[0], p.T), c.paths, c.seed);
        a.table.add({num(c.n_list[0]), num(r.estimate), num(r.std_error)});
        res = mc_json(r);
        if (cubic) {
            const double ref = reference(c.n_list[0]);
            res["reference"] = ref;
            res["z_score"] = r.std_error > 0.0 ? (r.estimate - ref) / r.std_error : 0.0;
        }
    } else {
        const MCWeakError r = mc_weak_error(c.phi, c.b, c.f, p, c.n_list[0], c.n_list[1], c.paths, c.seed);
        a.table.add({num(c.n_list[0]), num(r.coarse.estimate), num(r.coarse.std_error)});
        a.table.add({num(c.n_list[1]), num(r.fine.estimate), num(r.fine.std_error)});
        res = {{"coarse", mc_json(r.coarse)},
               {"fine", mc_json(r.fine)},
               {"difference", r.difference},
               {"difference_std_error", r.std_error}};
        if (cubic) {
            const double ref = reference(c.n_list[0]) - reference(c.n_list[1]);
            res["reference_difference"] = ref;
            res["z_score"] = r.std_error > 0.0 ? (r.difference - ref) / r.std_error : 0.0;
        }
    }
    res["paths"] = c.paths;
    res["seed"] = c.seed;
    a.summary["results"] = res;
    return a;
}

void usage(std::ostream& os) {
    os << "usage: roughvol <subcommand> [--config FILE] [--out DIR] [flags]\nsubcommands:";
    for (const auto& s : subcommands()) os << ' ' << s;
    os << "\nflags:";
    for (const auto& k : known_keys()) os << " --" << k;
    os << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["command"] = c.command;
    j["model"] = model_json(c.model);
    j["n"] = c.n_list;
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    j["b"] = c.b.to_string();
    j["f"] = c.f.to_string();
    j["phi"] = c.phi.to_string();
    j["threads"] = c.threads;
    j["tol"] = c.tol;
    j["band"] = c.band;
    j["quantity"] = c.quantity;
    j["order"] = c.order;
    j["out"] = c.out;
    return j;
}

Artifacts run_command(const RunConfig& c) {
    Artifacts a;
    const std::string& cmd = c.command;
    if (cmd == "exact-law")
        a = exact_law_cmd(c);
    else if (cmd == "scheme-law")
        a = scheme_law_cmd(c);
    else if (cmd == "sample")
        a = sample_cmd(c);
    else if (cmd == "weak-rate")
        a = rate_cmd(c, parse_quantity(c.quantity));
    else if (cmd == "cubic-rate")
        a = rate_cmd(c, Quantity::cubic_L);
    else if (cmd == "strong-rate")
        a = strong_rate_cmd(c);
    else if (cmd == "moment")
        a = moment_cmd(c);
    else if (cmd == "stationary")
        a = stationary_cmd(c);
    else if (cmd == "freeze-gap")
        a = freeze_gap_cmd(c);
    else if (cmd == "mc")
        a = mc_cmd(c);
    else
        throw ConfigError("unknown subcommand '" + cmd + "'");
    ordered_json summary;
    summary["command"] = cmd;
    summary["config"] = config_json(c);
    summary["results"] = a.summary["results"];
    a.summary = std::move(summary);
    return a;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    if (argc < 2) {
        usage(err);
        return 1;
    }
    const std::string command = argv[1];
    if (command == "-h" || command == "--help") {
        usage(out);
        return 0;
    }

    RunConfig cfg;
    try {
        CLI::App app("roughvol " + command);
        std::string config_path;
        app.add_option("--config", config_path, "key = value file");
        std::map<std::string, std::optional<std::string>> flags;
        for (const auto& k : known_keys()) app.add_option("--" + k, flags[k]);
        try {
            app.parse(argc - 1, argv + 1);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            throw ConfigError(e.what());
        }
        KeyValues kv;
        if (!config_path.empty()) kv = read_config_file(config_path);
        for (const auto& [k, v] : flags)
            if (v) kv[k] = *v;
        cfg = resolve_config(command, kv);
    } catch (const std::exception& e) {
        err << "roughvol: " << e.what() << '\n';
        return 1;
    }

    if (cfg.threads > 0) set_worker_count(cfg.threads);
    Artifacts a;
    try {
        a = run_command(cfg);
    } catch (const std::invalid_argument& e) {
        err << "roughvol: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "roughvol: numerical failure: " << e.what() << '\n';
        return 2;
    }

    try {
        const std::filesystem::path dir(cfg.out);
        std::filesystem::create_directories(dir);
        write_file(dir / (command + ".csv"), a.table.to_csv());
        write_file(dir / (command + ".json"), a.summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "roughvol: " << e.what() << '\n';
        return 2;
    }
    out << "wrote " << (std::filesystem::path(cfg.out) / (command + ".csv")).string() << " and "
        << (std::filesystem::path(cfg.out) / (command + ".json")).string() << '\n';
    return 0;
}

}  // namespace roughvol::cli
