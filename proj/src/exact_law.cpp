#include "roughvol/exact_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "roughvol/parallel.hpp"
#include "roughvol/quadrature.hpp"

namespace roughvol {

void ModelParams::validate() const {
    auto finite = [](double v, const char* name) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string("ModelParams: ") + name + " must be finite");
    };
    finite(x0, "x0");
    finite(kappa1, "kappa1");
    finite(kappa2, "kappa2");
    finite(L0, "L0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("ModelParams: sigma must be positive");
    if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("ModelParams: rho must lie in [-1, 1]");
    if (!(alpha > 0.5 && alpha <= 1.0)) throw std::invalid_argument("ModelParams: alpha must lie in (1/2, 1]");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("ModelParams: T must be positive");
}

void check_grid_matches(const TimeGrid& grid, const ModelParams& p) {
    if (std::abs(grid.horizon() - p.T) > 1e-12 * p.T)
        throw std::invalid_argument("grid horizon differs from the model horizon");
}

namespace {

void check_time(double t, const ModelParams& p, const char* what) {
    if (!(t >= 0.0 && t <= p.T * (1.0 + 1e-12)))
        throw std::domain_error(std::string(what) + ": time outside [0, T]");
}

}  // namespace

VolterraOU::VolterraOU(const ModelParams& p, SeriesControl ctl)
    : p_(p),
      ctl_(ctl),
      e1_(p.alpha, 1.0, ctl),
      ea1_(p.alpha, p.alpha + 1.0, ctl),
      eaa_(p.alpha, p.alpha, ctl) {
    p_.validate();
    const double a = p_.alpha;
    rg0_.push_back(0.0);
    rg1_.push_back(1.0);
    fmax_.push_back(1.0);
    for (int i = 1; i <= ctl_.max_terms && i * a + 1.0 <= 171.0; ++i) {
        rg0_.push_back(rgamma(i * a));
        rg1_.push_back(rgamma(i * a + 1.0));
        // Gauss value at z = 1 of 2F1(1 - alpha, 1; i alpha + 1; z), its maximum
        fmax_.push_back(i * a / (i * a + a - 1.0));
    }
}

double VolterraOU::mean(double t) const {
    check_time(t, p_, "mean_exact");
    const double ta = std::pow(t, p_.alpha);
    if (std::abs(p_.kappa2) < 1e-12) return p_.x0 + p_.kappa1 * ta * rg1_[1];
    const double z = p_.kappa2 * ta;
    // (E_alpha(z) - 1) / z = E_{alpha, alpha+1}(z) avoids the division by kappa2
    return p_.x0 * e1_(z) + p_.kappa1 * ta * ea1_(z);
}

double VolterraOU::lag_kernel(double u) const {
    if (!(u > 0.0)) return 0.0;
    const double ua = std::pow(u, p_.alpha);
    return p_.sigma * ua / u * eaa_(p_.kappa2 * ua);
}

double VolterraOU::malliavin(double s, double t) const {
    check_time(s, p_, "malliavin_exact");
    check_time(t, p_, "malliavin_exact");
    if (s >= t) return 0.0;
    return lag_kernel(t - s);
}

double VolterraOU::cov_series(double t, double T2, bool& well_conditioned) const {
    const double a = p_.alpha;
    const double k = p_.kappa2;
    const double ak = std::abs(k);
    const double z = t / T2;
    const int imax = static_cast<int>(rg0_.size()) - 1;

    // t^{i a}, T2^{i a}, kappa^d tables built on demand
    std::vector<double> tp{1.0}, Tp{1.0}, kp{1.0}, akp{1.0};
    const double ta = std::pow(t, a), Ta = std::pow(T2, a);
    auto ensure = [&](int d) {
        while (static_cast<int>(tp.size()) <= d) {
            tp.push_back(tp.back() * ta);
            Tp.push_back(Tp.back() * Ta);
            kp.push_back(kp.back() * k);
            akp.push_back(akp.back() * ak);
        }
    };
    auto magnitude = [&](int i1, int i2) { return akp[i1 + i2 - 2] * tp[i1] * Tp[i2] / T2 * rg1_[i1] * rg0_[i2]; };
    auto diag_bound = [&](int d) {
        ensure(d);
        double b = 0.0;
        for (int i1 = 1; i1 < d; ++i1) {
            const int i2 = d - i1;
            if (i1 > imax || i2 > imax) continue;
            b += magnitude(i1, i2) * (i2 == 1 ? fmax_[i1] : 1.0);
        }
        return b;
    };

    double sum = 0.0;
    double abs_sum = 0.0;
    double bound = diag_bound(2);
    const int dmax = std::min(ctl_.max_terms, 2 * imax);
    for (int d = 2; d <= dmax; ++d) {
        ensure(d);
        for (int i1 = 1; i1 < d; ++i1) {
            const int i2 = d - i1;
            if (i1 > imax || i2 > imax) continue;
            const double coef = kp[d - 2] * tp[i1] * Tp[i2] / T2 * rg1_[i1] * rg0_[i2];
            if (coef == 0.0) continue;
            const double term = coef * hyp2f1(1.0 - i2 * a, 1.0, i1 * a + 1.0, z);
            sum += term;
            abs_sum += std::abs(term);
        }
        const double next = diag_bound(d + 1);
        if (next == 0.0) {
            well_conditioned = abs_sum <= 1e5 * std::abs(sum);
            return p_.sigma * p_.sigma * sum;
        }
        const double r = next / bound;
        if (r < 1.0 && next / (1.0 - r) < ctl_.rel_tol * std::abs(sum)) {
            well_conditioned = abs_sum <= 1e5 * std::abs(sum);
            return p_.sigma * p_.sigma * sum;
        }
        bound = next;
    }
    throw NumericalError("cov_exact: double series did not meet its tail bound within the term budget");
}

double VolterraOU::cov_quadrature(double t, double T2) const {
    const double g = T2 - t;
    GradedOptions opt;
    opt.points = 16;
    opt.ratio = 0.2;
    opt.levels_right = 0;
    if (g <= 0.0) {
        opt.exp_left = 2.0 * p_.alpha - 2.0;
        opt.levels_left = 14;
    } else {
        opt.exp_left = p_.alpha - 1.0;
        const double target = g / (4.0 * 0.5 * t);
        int levels = target < 1.0 ? static_cast<int>(std::ceil(std::log(target) / std::log(opt.ratio))) : 0;
        opt.levels_left = std::clamp(levels + 2, 8, 40);
    }
    const Rule rule = graded_rule(opt);
    return rule.integrate([&](double v) { return lag_kernel(v) * lag_kernel(v + g); }, 0.0, t);
}

double VolterraOU::cov(double t, double T2) const {
    check_time(t, p_, "cov_exact");
    check_time(T2, p_, "cov_exact");
    if (t > T2) std::swap(t, T2);
    if (t == 0.0) return 0.0;
    const bool cancelling = p_.kappa2 < 0.0 && -p_.kappa2 * std::pow(T2, p_.alpha) > 6.0;
    if (!cancelling) {
        bool ok = false;
        const double v = cov_series(t, T2, ok);
        if (ok) return v;
    }
    return cov_quadrature(t, T2);
}

double mean_exact(double t, const ModelParams& p, const SeriesControl& ctl) { return VolterraOU(p, ctl).mean(t); }

double cov_exact(double t, double T2, const ModelParams& p, const SeriesControl& ctl) {
    return VolterraOU(p, ctl).cov(t, T2);
}

double malliavin_exact(double s, double t, const ModelParams& p, const SeriesControl& ctl) {
    return VolterraOU(p, ctl).malliavin(s, t);
}

double stationary_variance(const ModelParams& p) {
    p.validate();
    if (!(p.kappa2 < 0.0)) throw std::domain_error("stationary_variance: requires kappa2 < 0");
    ModelParams q = p;
    q.T = 1.0;
    const VolterraOU ou(q);
    auto f = [&](double s) {
        const double k = ou.lag_kernel(s);
        return k * k;
    };
    GradedOptions opt;
    opt.points = 16;
    opt.levels_left = 14;
    opt.exp_left = 2.0 * p.alpha - 2.0;
    double total = graded_rule(opt).integrate(f, 0.0, 1.0);
    const Rule gl = gauss_legendre(16);
    for (int m = 0; m < 200; ++m) {
        const double lo = std::ldexp(1.0, m);
        const double panel = gl.integrate(f, lo, 2.0 * lo);
        total += panel;
        if (std::abs(panel) < 1e-12 && std::abs(panel) < 1e-12 * std::abs(total)) return total;
    }
    throw NumericalError("stationary_variance: tail panels did not decay");
}

GaussianLaw grid_law_exact(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl) {
    p.validate();
    check_grid_matches(grid, p);
    const VolterraOU ou(p, ctl);
    const int n = grid.n();
    GaussianLaw law;
    law.mean.resize(n);
    law.cov.resize(n, n);
    for (int k = 1; k <= n; ++k) law.labels.push_back("X(t" + std::to_string(k) + ")");
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
        const int j = static_cast<int>(r) + 1;
        law.mean(j - 1) = ou.mean(grid.time(j));
        for (int k = j; k <= n; ++k) law.cov(j - 1, k - 1) = ou.cov(grid.time(j), grid.time(k));
    });
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) law.cov(k, j) = law.cov(j, k);
    return law;
}

GaussianLaw driver_law(const TimeGrid& grid, const ModelParams& p) {
    p.validate();
    check_grid_matches(grid, p);
    const int n = grid.n();
    const double a = p.alpha;
    const double rg2 = rgamma(a) * rgamma(a);
    GaussianLaw law;
    law.mean = Eigen::VectorXd::Zero(2 * n);
    law.cov = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) law.labels.push_back("dW" + std::to_string(j));
    for (int k = 1; k <= n; ++k) law.labels.push_back("G" + std::to_string(k));
    for (int j = 0; j < n; ++j) law.cov(j, j) = grid.dt();
    for (int k = 1; k <= n; ++k) {
        for (int j = 0; j < k; ++j) law.cov(j, n + k - 1) = law.cov(n + k - 1, j) = c_weight(j, k, grid, a);
        for (int j = 1; j <= k; ++j) {
            const double v = cross_kernel_integral(grid.time(j), grid.time(k), grid.time(j), a) * rg2;
            law.cov(n + j - 1, n + k - 1) = law.cov(n + k - 1, n + j - 1) = v;
        }
    }
    return law;
}

}  // namespace roughvol
