#include "roughvol/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "roughvol/quadrature.hpp"
#include "roughvol/specfun.hpp"

namespace roughvol {

TimeGrid::TimeGrid(int n, double horizon) : n_(n), T_(horizon) {
    if (n < 1) throw std::invalid_argument("TimeGrid: n must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("TimeGrid: horizon must be positive");
}

double TimeGrid::time(int k) const {
    if (k < 0 || k > n_) throw std::out_of_range("TimeGrid: index out of range");
    if (k == n_) return T_;
    return k * T_ / n_;
}

int TimeGrid::eta_index(double s) const {
    if (!(s >= 0.0 && s <= T_)) throw std::out_of_range("TimeGrid: time outside [0, T]");
    int k = static_cast<int>(std::floor(s * n_ / T_));
    if (k > n_) k = n_;
    // guard against rounding at cell boundaries
    while (k > 0 && time(k) > s) --k;
    while (k < n_ && time(k + 1) <= s) ++k;
    return k;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.5 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (1/2, 1]");
}

double power_difference(double d, double a) {
    if (d == 1.0) return 1.0;
    return -std::pow(d, a) * std::expm1(a * std::log1p(-1.0 / d));
}

double c_weight_unit(int lag, double alpha) { return power_difference(lag, alpha) * rgamma(alpha + 1.0); }

double c_weight(int i, int k, const TimeGrid& grid, double alpha) {
    check_alpha(alpha);
    if (!(0 <= i && i < k && k <= grid.n()))
        throw std::out_of_range("c_weight: requires 0 <= i < k <= n, got i=" + std::to_string(i) +
                                " k=" + std::to_string(k));
    if (alpha == 1.0) return grid.dt();
    return std::pow(grid.dt(), alpha) * c_weight_unit(k - i, alpha);
}

double shifted_kernel_integral(double e, double d, double alpha) {
    if (!(e > 0.0) || !(d >= 0.0)) throw std::domain_error("shifted_kernel_integral: requires e > 0, d >= 0");
    if (alpha == 1.0) return e;
    if (d == 0.0) return std::pow(e, 2.0 * alpha - 1.0) / (2.0 * alpha - 1.0);
    const double s = e + d;
    return std::pow(e, alpha) * std::pow(s, alpha - 1.0) / alpha * hyp2f1(1.0 - alpha, 1.0, alpha + 1.0, e / s);
}

double cross_kernel_integral(double a, double b, double c, double alpha) {
    check_alpha(alpha);
    if (!(0.0 < c && c <= a && a <= b))
        throw std::domain_error("cross_kernel_integral: requires 0 < c <= a <= b");
    if (alpha == 1.0) return c;
    if (c == a) return shifted_kernel_integral(a, b - a, alpha);
    if (c <= 0.5 * a) {
        static const Rule gl = gauss_legendre(24);
        return gl.integrate([&](double s) { return std::pow((a - s) * (b - s), alpha - 1.0); }, 0.0, c);
    }
    return shifted_kernel_integral(a, b - a, alpha) - shifted_kernel_integral(a - c, b - a, alpha);
}

double beta_convolution(double s, double t, double alpha, double beta) {
    if (!(s >= 0.0) || !(s < t)) throw std::domain_error("beta_convolution: requires 0 <= s < t");
    if (!(alpha > 0.0 && beta > 0.0)) throw std::domain_error("beta_convolution: exponents must be positive");
    return std::pow(t - s, alpha + beta - 1.0) * rgamma(alpha + beta);
}

}  // namespace roughvol
