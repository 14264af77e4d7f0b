#include "roughvol/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "roughvol/parallel.hpp"
#include "roughvol/quadrature.hpp"

namespace roughvol {

std::pair<double, double> affine_coefficients(const FunctionSpec& f) {
    if (!f.is_polynomial() || f.degree() > 1)
        throw std::invalid_argument("moment engines support constant or affine f only");
    const auto c = f.polynomial_coefficients();
    return {c[0], c.size() > 1 ? c[1] : 0.0};
}

namespace {

double second_moment_exact(const ModelParams& p, double a, double c) {
    const VolterraOU ou(p);
    auto integrand = [&](double t) {
        const double m = a + c * ou.mean(t);
        return m * m + c * c * ou.cov(t, t);
    };
    auto run = [&](int points, int levels) {
        GradedOptions opt;
        opt.points = points;
        opt.levels_left = levels;
        return graded_rule(opt).integrate(integrand, 0.0, p.T);
    };
    const double coarse = run(16, 10);
    const double fine = run(20, 14);
    if (std::abs(fine - coarse) > 1e-9 * (1.0 + std::abs(fine)))
        throw NumericalError("second_moment_L: quadrature did not settle");
    return fine;
}

double second_moment_scheme(const ModelParams& p, const TimeGrid& grid, double a, double c) {
    const SchemeLaw law(grid, p, {.full_covariance = false});
    double acc = 0.0;
    for (int k = 0; k < grid.n(); ++k) {
        const double m = a + c * law.mean()(k);
        acc += m * m + c * c * law.cov(k, k);
    }
    return acc * grid.dt();
}

struct CubicRules {
    Rule outer;
    Rule inner;
};

CubicRules cubic_rules(double alpha, int points, int levels) {
    GradedOptions o;
    o.points = points;
    o.levels_left = levels;
    GradedOptions in;
    in.points = points;
    in.levels_left = levels / 2;
    in.levels_right = levels + 2;
    in.exp_right = alpha - 1.0;
    return {graded_rule(o), graded_rule(in)};
}

double cubic_exact_rule(const VolterraOU& ou, double a, double c, const CubicRules& rules) {
    const ModelParams& p = ou.params();
    const Rule& outer = rules.outer;
    const Rule& inner = rules.inner;
    std::vector<double> slot(outer.size(), 0.0);
    parallel_for(outer.size(), [&](std::size_t j) {
        const double t = p.T * outer.x[j];
        const double ft = a + c * ou.mean(t);
        double acc = 0.0;
        for (std::size_t q = 0; q < inner.size(); ++q) {
            const double s = t * inner.x[q];
            const double fs = a + c * ou.mean(s);
            const double phi = fs * ft + c * c * ou.cov(s, t);
            acc += inner.w[q] * phi * ou.lag_kernel(t - s);
        }
        slot[j] = outer.w[j] * acc * t;
    });
    double total = 0.0;
    for (double v : slot) total += v;
    return 6.0 * p.rho * c * total * p.T;
}

}  // namespace

double second_moment_L(const ModelParams& p, const FunctionSpec& f, const Branch& which) {
    p.validate();
    const auto [a, c] = affine_coefficients(f);
    if (const auto* s = std::get_if<SchemeBranch>(&which)) {
        check_grid_matches(s->grid, p);
        return second_moment_scheme(p, s->grid, a, c);
    }
    return second_moment_exact(p, a, c);
}

double cubic_exact(const ModelParams& p, const FunctionSpec& f, const CubicOptions& opt) {
    p.validate();
    if (!(opt.abs_tol > 0.0) || opt.max_refinements < 0) throw std::invalid_argument("cubic_exact: invalid options");
    const auto [a, c] = affine_coefficients(f);
    if (p.rho == 0.0 || c == 0.0) return 0.0;
    const VolterraOU ou(p);
    int points = 12;
    int levels = 8;
    double prev = cubic_exact_rule(ou, a, c, cubic_rules(p.alpha, points, levels));
    for (int r = 0; r <= opt.max_refinements; ++r) {
        points += 4;
        levels += 3;
        const double next = cubic_exact_rule(ou, a, c, cubic_rules(p.alpha, points, levels));
        if (std::abs(next - prev) <= opt.abs_tol) return next;
        prev = next;
    }
    throw NumericalError("cubic_exact: quadrature did not reach the requested tolerance");
}

double cubic_scheme(const SchemeLaw& law, const ModelParams& p, const FunctionSpec& f) {
    p.validate();
    const ModelParams& q = law.params();
    if (q.x0 != p.x0 || q.kappa1 != p.kappa1 || q.kappa2 != p.kappa2 || q.sigma != p.sigma || q.alpha != p.alpha ||
        q.T != p.T)
        throw std::invalid_argument("cubic_scheme: scheme law was built for different model parameters");
    const auto [a, c] = affine_coefficients(f);
    if (p.rho == 0.0 || c == 0.0) return 0.0;
    const int n = law.grid().n();
    const Eigen::MatrixXd P = law.cell_integrals();
    const Eigen::VectorXd& m = law.mean();
    std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
        const int k = static_cast<int>(r);
        const double fk = a + c * m(k);
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += ((a + c * m(i)) * fk + c * c * law.cov(i, k)) * P(i, k);
        rows[r] = acc;
    });
    double total = 0.0;
    for (double v : rows) total += v;
    return 6.0 * p.rho * c * law.grid().dt() * total;
}

}  // namespace roughvol
