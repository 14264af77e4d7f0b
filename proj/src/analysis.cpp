#include "roughvol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roughvol/moments.hpp"
#include "roughvol/parallel.hpp"
#include "roughvol/scheme.hpp"

namespace roughvol {

namespace {

bool is_two_thirds(double alpha) { return std::abs(alpha - 2.0 / 3.0) <= 1e-12; }

void check_rate_alpha(double alpha) {
    if (!(alpha > 0.5 && alpha < 1.0)) throw std::domain_error("rate: alpha must lie in (1/2, 1)");
}

}  // namespace

std::string RateDescriptor::to_string() const {
    switch (branch) {
        case RateBranch::one_over_n:
            return "1/n";
        case RateBranch::log_over_n:
            return "log(n)/n";
        case RateBranch::power:
            break;
    }
    return "n^-" + std::to_string(order);
}

RateDescriptor rate_descriptor(double alpha) {
    check_rate_alpha(alpha);
    if (is_two_thirds(alpha)) return {RateBranch::log_over_n, 1.0};
    if (alpha > 2.0 / 3.0) return {RateBranch::one_over_n, 1.0};
    return {RateBranch::power, 3.0 * alpha - 1.0};
}

double theoretical_rate(double alpha, int n) {
    if (n < 2) throw std::invalid_argument("theoretical_rate: n must be at least 2");
    const RateDescriptor d = rate_descriptor(alpha);
    switch (d.branch) {
        case RateBranch::one_over_n:
            return 1.0 / n;
        case RateBranch::log_over_n:
            return std::log(static_cast<double>(n)) / n;
        case RateBranch::power:
            break;
    }
    return std::pow(static_cast<double>(n), -d.order);
}

Quantity parse_quantity(std::string_view name) {
    if (name == "mean_X") return Quantity::mean_X;
    if (name == "var_X") return Quantity::var_X;
    if (name == "cov_X") return Quantity::cov_X;
    if (name == "cubic_L") return Quantity::cubic_L;
    throw std::invalid_argument("unknown quantity '" + std::string(name) + "'");
}

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::mean_X:
            return "mean_X";
        case Quantity::var_X:
            return "var_X";
        case Quantity::cov_X:
            return "cov_X";
        case Quantity::cubic_L:
            break;
    }
    return "cubic_L";
}

int ErrorCurve::non_monotone_steps() const {
    int count = 0;
    for (std::size_t i = 2; i < errors.size(); ++i)
        if (errors[i] > errors[i - 1]) ++count;
    return count;
}

ErrorCurve weak_error_curve(Quantity q, double alpha, ModelParams p, const std::vector<int>& n_list) {
    p.alpha = alpha;
    p.validate();
    if (n_list.empty()) throw std::invalid_argument("weak_error_curve: empty n list");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1 || n_list[i] > 4096) throw std::invalid_argument("weak_error_curve: n must lie in 1..4096");
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw std::invalid_argument("weak_error_curve: n values must be strictly increasing");
        if (q == Quantity::cov_X && n_list[i] % 2 != 0)
            throw std::invalid_argument("weak_error_curve: cov_X needs even n");
    }
    const FunctionSpec f = FunctionSpec::affine(0.0, 1.0);
    const VolterraOU ou(p);
    const double T = p.T;

    ErrorCurve curve;
    curve.quantity = q;
    curve.alpha = alpha;
    curve.n_values = n_list;
    switch (q) {
        case Quantity::mean_X:
            curve.exact = ou.mean(T);
            break;
        case Quantity::var_X:
            curve.exact = ou.cov(T, T);
            break;
        case Quantity::cov_X:
            curve.exact = ou.cov(0.5 * T, T);
            break;
        case Quantity::cubic_L:
            curve.exact = cubic_exact(p, f);
            break;
    }
    curve.scheme.assign(n_list.size(), 0.0);
    parallel_for(n_list.size(), [&](std::size_t i) {
        const int n = n_list[i];
        const TimeGrid grid(n, T);
        const SchemeLaw law(grid, p, {.full_covariance = q == Quantity::cubic_L});
        switch (q) {
            case Quantity::mean_X:
                curve.scheme[i] = law.mean()(n);
                break;
            case Quantity::var_X:
                curve.scheme[i] = law.cov(n, n);
                break;
            case Quantity::cov_X:
                curve.scheme[i] = law.cov(n / 2, n);
                break;
            case Quantity::cubic_L:
                curve.scheme[i] = cubic_scheme(law, p, f);
                break;
        }
    });
    for (double s : curve.scheme) curve.errors.push_back(std::abs(curve.exact - s));
    return curve;
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need matching samples");
    const double m = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::domain_error("least_squares: degenerate fit, no spread in x");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

RateFit fit_rate(const std::vector<int>& n_values, const std::vector<double>& errors, double alpha,
                 const RateFitOptions& opt) {
    if (n_values.size() != errors.size()) throw std::invalid_argument("fit_rate: n and error counts differ");
    if (n_values.size() < 4) throw std::invalid_argument("fit_rate: need at least 4 points");
    const double floor = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(opt.scale);
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] < 2 || (i > 0 && n_values[i] <= n_values[i - 1]))
            throw std::invalid_argument("fit_rate: n values must be strictly increasing and >= 2");
        if (!std::isfinite(errors[i]) || !(errors[i] > floor))
            throw std::domain_error("fit_rate: error at n = " + std::to_string(n_values[i]) +
                                    " is not resolved above rounding");
    }
    RateFit out;
    out.n_values = n_values;
    out.errors = errors;
    out.theoretical = rate_descriptor(alpha);
    out.flatness = out.theoretical.branch == RateBranch::log_over_n && !opt.target;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        const double n = n_values[i];
        x.push_back(std::log(n));
        y.push_back(out.flatness ? std::log(errors[i] * n / std::log(n)) : std::log(errors[i]));
    }
    const LineFit line = least_squares(x, y);
    out.slope = -line.slope;
    out.intercept = line.intercept;
    out.r_squared = line.r_squared;
    if (out.flatness) {
        out.band = opt.flat_band;
        out.pass = std::abs(out.slope) <= opt.flat_band;
    } else {
        out.target = opt.target.value_or(out.theoretical.order);
        out.band = opt.band;
        out.pass = std::abs(out.slope - out.target) <= opt.band;
    }
    return out;
}

RateFit fit_rate(const ErrorCurve& curve, const RateFitOptions& opt) {
    RateFitOptions o = opt;
    o.scale = std::abs(curve.exact);
    for (double v : curve.scheme) o.scale = std::max(o.scale, std::abs(v));
    return fit_rate(curve.n_values, curve.errors, curve.alpha, o);
}

FreezeGap kernel_freeze_gap(const TimeGrid& grid, double alpha) {
    check_rate_alpha(alpha);
    const int n = grid.n();
    const double T = grid.horizon();
    const double s = 2.0 * alpha - 1.0;
    // compensated sum of i^{s-1}
    double sum = 0.0, comp = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double v = std::pow(static_cast<double>(i), s - 1.0);
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    sum += comp;
    const double g2 = rgamma(alpha) * rgamma(alpha);
    const double ns = std::pow(static_cast<double>(n), -s);
    FreezeGap out;
    out.gap = std::pow(T, s) * g2 * (1.0 / s - ns * sum);
    out.asymptote = -zeta(2.0 - 2.0 * alpha) * std::pow(T, s) * g2 * ns;
    return out;
}

double strong_error_exact(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl) {
    p.validate();
    check_grid_matches(grid, p);
    const int n = grid.n();
    const double a = p.alpha;
    const double T = p.T;
    const double k2 = p.kappa2;
    const VolterraOU ou(p, ctl);
    const SchemeLaw law(grid, p, {.full_covariance = false});

    // I(t) = int_0^t (t - s)^{a-1} D_s X_T ds, expanding D_s X_T in powers of kappa2
    auto integral = [&](double t) {
        const double ta = std::pow(t, a);
        double sum = 0.0;
        double kj = 1.0;
        for (int j = 0; j < ctl.max_terms; ++j) {
            const double g = a * (j + 1);
            const double scale = kj * ta * std::pow(T, g - 1.0) * rgamma(g) / a;
            if (j > 0 && (scale == 0.0 || std::abs(scale) <= 1e-17 * std::abs(sum))) return p.sigma * sum;
            sum += scale * hyp2f1(1.0 - g, 1.0, a + 1.0, t / T);
            kj *= k2;
            if (k2 == 0.0) return p.sigma * sum;
        }
        throw NumericalError("strong_error_exact: cross-term series did not converge");
    };
    std::vector<double> terms(static_cast<std::size_t>(n), 0.0);
    const Eigen::MatrixXd& w = law.w();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
        const int l = static_cast<int>(r) + 1;
        terms[r] = w(l, n) * integral(grid.time(l));
    });
    double cross = 0.0;
    for (double v : terms) cross += v;
    cross *= p.sigma * rgamma(a);

    const double exact = ou.cov(T, T);
    const double scheme = law.cov(n, n);
    const double var = exact - 2.0 * cross + scheme;
    if (!std::isfinite(var)) throw NumericalError("strong_error_exact: non-finite variance");
    if (var < 0.0) {
        if (var < -1e-10 * std::max(1.0, exact)) throw NumericalError("strong_error_exact: negative variance");
        return 0.0;
    }
    return std::sqrt(var);
}

namespace {

// mean and sum of squared deviations, merged block by block
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.count == 0.0) return;
        const double c = count + o.count;
        const double d = o.mean - mean;
        mean += d * o.count / c;
        m2 += o.m2 + d * d * count * o.count / c;
        count = c;
    }
    double std_error() const { return count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0; }
};

void check_mc_inputs(const FunctionSpec& phi, std::size_t paths) {
    if (paths == 0) throw std::invalid_argument("Monte Carlo estimate needs at least one path");
    if (!phi.is_polynomial()) throw std::invalid_argument("phi must be a polynomial");
}

}  // namespace

MCResult mc_expectation(const FunctionSpec& phi, const FunctionSpec& b, const FunctionSpec& f, const ModelParams& p,
                        const TimeGrid& grid, std::size_t paths, std::uint64_t seed) {
    check_mc_inputs(phi, paths);
    const std::size_t blocks = (paths + kSampleBlock - 1) / kSampleBlock;
    std::vector<Moments> per_block(blocks);
    simulate_scheme(grid, p, b, f, paths, seed, [&](std::size_t blk, const PathBlock& block) {
        Moments m;
        const Eigen::Index n = grid.n();
        for (Eigen::Index j = 0; j < block.L.cols(); ++j) m.add(phi(block.L(n, j)));
        per_block[blk] = m;
    });
    Moments total;
    for (const auto& m : per_block) total.merge(m);
    return {total.mean, total.std_error(), paths, seed, grid};
}

MCWeakError mc_weak_error(const FunctionSpec& phi, const FunctionSpec& b, const FunctionSpec& f, const ModelParams& p,
                          int n_coarse, int n_fine, std::size_t paths, std::uint64_t seed) {
    check_mc_inputs(phi, paths);
    p.validate();
    if (n_coarse < 1 || n_fine < n_coarse || n_fine % n_coarse != 0)
        throw std::invalid_argument("mc_weak_error: the fine grid must be a multiple of the coarse grid");
    const TimeGrid cg(n_coarse, p.T), fg(n_fine, p.T);
    const SchemeSampler coarse(cg, p), fine(fg, p);
    const int r = n_fine / n_coarse;
    const std::size_t blocks = (paths + kSampleBlock - 1) / kSampleBlock;
    struct BlockStats {
        Moments c, f, d;
    };
    std::vector<BlockStats> per_block(blocks);
    parallel_for(blocks, [&](std::size_t blk) {
        auto eng = block_engine(seed, blk);
        const auto m = static_cast<Eigen::Index>(std::min(kSampleBlock, paths - blk * kSampleBlock));
        DriverBlock df, dc;
        fine.draw(eng, m, df);
        dc.dW.setZero(n_coarse, m);
        dc.dWperp.setZero(n_coarse, m);
        dc.G.resize(n_coarse, m);
        for (int k = 0; k < n_coarse; ++k) {
            for (int j = 0; j < r; ++j) {
                dc.dW.row(k) += df.dW.row(k * r + j);
                dc.dWperp.row(k) += df.dWperp.row(k * r + j);
            }
            dc.G.row(k) = df.G.row((k + 1) * r - 1);
        }
        PathBlock pf, pc;
        fine.evolve(df, b, f, pf);
        coarse.evolve(dc, b, f, pc);
        BlockStats s;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double vc = phi(pc.L(n_coarse, j));
            const double vf = phi(pf.L(n_fine, j));
            s.c.add(vc);
            s.f.add(vf);
            s.d.add(vc - vf);
        }
        per_block[blk] = s;
    });
    BlockStats total;
    for (const auto& s : per_block) {
        total.c.merge(s.c);
        total.f.merge(s.f);
        total.d.merge(s.d);
    }
    MCWeakError out;
    out.coarse = {total.c.mean, total.c.std_error(), paths, seed, cg};
    out.fine = {total.f.mean, total.f.std_error(), paths, seed, fg};
    out.difference = total.d.mean;
    out.std_error = total.d.std_error();
    return out;
}

}  // namespace roughvol
