#include "roughvol/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace roughvol {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
constexpr double kLanczosG = 7.0;

double lanczos(double x) {
    // x >= 0.5
    x -= 1.0;
    double a = kLanczos[0];
    const double t = x + kLanczosG + 0.5;
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i);
    // split the power to delay overflow
    const double p = std::pow(t, 0.5 * (x + 0.5));
    return std::sqrt(2.0 * kPi) * p * (p * std::exp(-t)) * a;
}

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::nearbyint(x); }

double cospi(double x) { return sinpi(x + 0.5); }

double hyp_series(double a, double b, double c, double z) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 200000; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if (term == 0.0) return sum;
        const bool tail_shrinks = std::abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0)) * z) < 1.0;
        if (tail_shrinks && std::abs(term) <= 0.25 * kEps * std::abs(sum)) return sum;
    }
    throw NumericalError("hyp2f1: power series did not converge");
}

// 1 - z linear transformation, c - a - b not an integer.
double hyp_reflect(double a, double b, double c, double z) {
    const double m = c - a - b;
    const double w = 1.0 - z;
    const double gc = gamma(c);
    const double t1 = gc * gamma_signed(m) * rgamma(c - a) * rgamma(c - b) * hyp_series(a, b, 1.0 - m, w);
    const double t2 = std::pow(w, m) * gc * gamma_signed(-m) * rgamma(a) * rgamma(b) *
                      hyp_series(c - a, c - b, 1.0 + m, w);
    return t1 + t2;
}

}  // namespace

void SeriesControl::validate() const {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-6)) throw std::invalid_argument("SeriesControl: rel_tol must lie in (0, 1e-6]");
    if (max_terms < 50) throw std::invalid_argument("SeriesControl: max_terms must be at least 50");
}

double gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma: argument must be positive");
    if (x == std::nearbyint(x) && x <= 21.0) {
        double f = 1.0;
        for (int i = 2; i < static_cast<int>(x); ++i) f *= i;
        return f;
    }
    if (x < 0.5) return kPi / (sinpi(x) * lanczos(1.0 - x));
    return lanczos(x);
}

double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    if (x >= 0.5) {
        if (x > 171.6) return 0.0;
        return 1.0 / gamma(x);
    }
    if (1.0 - x > 171.6) return 0.0;
    return sinpi(x) * gamma(1.0 - x) / kPi;
}

double gamma_signed(double x) {
    if (x > 0.0) return gamma(x);
    if (is_nonpositive_integer(x)) throw std::domain_error("gamma: pole at non-positive integer");
    return kPi / (sinpi(x) * gamma(1.0 - x));
}

double sinpi(double x) {
    double y = std::fmod(x, 2.0);
    if (y < 0.0) y += 2.0;
    double sign = 1.0;
    if (y >= 1.0) {
        y -= 1.0;
        sign = -1.0;
    }
    if (y == 0.0) return 0.0;
    if (y > 0.5) y = 1.0 - y;
    return sign * std::sin(kPi * y);
}

double digamma(double x) {
    if (is_nonpositive_integer(x)) throw std::domain_error("digamma: pole at non-positive integer");
    if (x <= 0.0) return digamma(1.0 - x) - kPi * cospi(x) / sinpi(x);
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    const double poly =
        r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
    return acc + std::log(x) - 0.5 / x - poly;
}

double hyp2f1(double a, double b, double c, double z) {
    if (!(z >= 0.0 && z <= 1.0)) throw std::domain_error("hyp2f1: z must lie in [0,1]");
    if (!(b > 0.0) || !(c > b)) throw std::domain_error("hyp2f1: requires b > 0 and c > b");
    if (z == 0.0) return 1.0;
    const double m = c - a - b;
    if (z == 1.0) {
        if (!(m > 0.0)) throw std::domain_error("hyp2f1: divergent at z = 1 unless c - a - b > 0");
        return gamma(c) * gamma(m) * rgamma(c - a) * rgamma(c - b);
    }
    if (is_nonpositive_integer(a) || z <= 0.9) return hyp_series(a, b, c, z);

    const double m0 = std::nearbyint(m);
    constexpr double h = 2e-3;
    if (std::abs(m - m0) >= h) return hyp_reflect(a, b, c, z);

    // c - a - b close to an integer: both reflected terms blow up and cancel.
    // F is analytic in c, so interpolate from nodes that keep their distance.
    const double c0 = a + b + m0;
    const double delta = c - c0;
    constexpr std::array<double, 6> nodes = {-3 * h, -2 * h, -h, h, 2 * h, 3 * h};
    double out = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double li = 1.0;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (j != i) li *= (delta - nodes[j]) / (nodes[i] - nodes[j]);
        const double ci = c0 + nodes[i];
        if (!(ci > b)) throw std::domain_error("hyp2f1: parameters too close to c = b for the degenerate branch");
        out += li * hyp_reflect(a, b, ci, z);
    }
    return out;
}

double zeta(double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::domain_error("zeta: argument must lie in (0,1)");
    // alternating eta series with Borwein's acceleration weights
    constexpr int n = 40;
    std::array<double, n + 1> d{};
    double term = 1.0 / n;  // (n+i-1)! 4^i / ((n-i)! (2i)!) at i = 0
    double acc = term;
    d[0] = n * acc;
    for (int i = 1; i <= n; ++i) {
        term *= 4.0 * (n + i - 1.0) * (n - i + 1.0) / ((2.0 * i - 1.0) * (2.0 * i));
        acc += term;
        d[i] = n * acc;
    }
    double eta = 0.0;
    for (int k = 0; k < n; ++k) {
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        eta += sgn * (d[k] - d[n]) / std::pow(k + 1.0, s);
    }
    eta = -eta / d[n];
    return eta / (1.0 - std::pow(2.0, 1.0 - s));
}

MittagLeffler::MittagLeffler(double alpha, double beta, SeriesControl ctl) : alpha_(alpha), beta_(beta), ctl_(ctl) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("mittag_leffler: alpha must lie in (0,1]");
    if (!(beta > 0.0)) throw std::domain_error("mittag_leffler: beta must be positive");
    ctl_.validate();
    coef_.reserve(static_cast<std::size_t>(ctl_.max_terms));
    for (int k = 0; k < ctl_.max_terms; ++k) {
        const double arg = alpha * k + beta;
        if (arg > 171.6) break;
        coef_.push_back(rgamma(arg));
    }
}

double MittagLeffler::series(double z) const {
    double sum = 0.0;
    double zk = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < coef_.size(); ++k) {
        const double term = coef_[k] * zk;
        sum += term;
        const double at = std::abs(term);
        if (k > 0 && at < prev) {
            const double r = (k + 1 < coef_.size()) ? std::abs(z) * coef_[k + 1] / coef_[k] : 1.0;
            if (at < 1e-300 || (r < 0.5 && at <= ctl_.rel_tol * std::abs(sum))) return sum;
        }
        prev = at;
        zk *= z;
        if (!std::isfinite(zk)) break;
    }
    throw NumericalError("mittag_leffler: series did not converge within max_terms");
}

// Real integral representation for z < 0 and alpha < 1, valid for beta < 1 + alpha:
//   E(z) = int_0^inf r^((1-beta)/alpha) exp(-r^(1/alpha))
//          * (r sin(pi(1-beta)) - z sin(pi(1-beta+alpha))) / (r^2 - 2 r z cos(pi alpha) + z^2) dr / (pi alpha)
// Larger beta is reduced with E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z.
double MittagLeffler::integral(double z) const {
    const double a = alpha_;
    int shifts = 0;
    double b = beta_;
    while (b >= 1.0 + a) {
        b -= a;
        ++shifts;
    }
    const double s1 = std::sin(kPi * (1.0 - b));
    const double s2 = std::sin(kPi * (1.0 - b + a));
    const double ca = std::cos(kPi * a);
    const double pw = (1.0 - b) / a;
    auto g = [&](double r) {
        if (r <= 0.0) return pw == 0.0 ? -z * s2 / (z * z) / (kPi * a) : 0.0;
        const double e = std::exp(-std::pow(r, 1.0 / a));
        if (e == 0.0) return 0.0;
        const double den = r * r - 2.0 * r * z * ca + z * z;
        return std::pow(r, pw) * e * (r * s1 - z * s2) / den / (kPi * a);
    };
    // the denominator peaks sharply near r = |z| |cos(pi alpha)| when alpha is close to 1
    const double x = -z;
    const double peak = x * std::abs(ca);
    const double width = std::max(x * std::sin(kPi * a), 1e-300);
    std::vector<double> cuts{0.0};
    for (double m : {-8.0, -1.0, 0.0, 1.0, 8.0}) {
        const double c = peak + m * width;
        if (c > cuts.back()) cuts.push_back(c);
    }
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += GK::integrate(g, cuts[i], cuts[i + 1], 8, 1e-13);
    sum += GK::integrate(g, cuts.back(), std::numeric_limits<double>::infinity(), 8, 1e-13);
    for (int j = shifts; j > 0; --j) sum = (sum - rgamma(beta_ - j * a)) / z;
    return sum;
}

double MittagLeffler::asymptotic(double z, bool& ok) const {
    ok = false;
    double sum = 0.0;
    double zk = 1.0;
    // |1/Gamma(x)| <= Gamma(1 - x) / pi for x < 1 bounds the terms, including
    // those that vanish at the poles of Gamma
    double prev = std::numeric_limits<double>::infinity();
    double azk = 1.0;
    for (int k = 1; k < 200; ++k) {
        zk /= z;
        azk /= -z;
        sum += -zk * rgamma(beta_ - alpha_ * k);
        const double x = 1.0 - beta_ + alpha_ * k;
        const double envelope = x > 0.0 ? azk * gamma(x) / kPi : azk;
        if (!(envelope < prev)) return sum;
        prev = envelope;
        if (envelope <= 1e-17 * std::abs(sum)) {
            ok = true;
            return sum;
        }
    }
    return sum;
}

double MittagLeffler::operator()(double z) const {
    if (!std::isfinite(z)) throw std::domain_error("mittag_leffler: argument must be finite");
    if (z == 0.0) return coef_.empty() ? 0.0 : coef_[0];
    if (alpha_ == 1.0 && beta_ == 1.0) return std::exp(z);
    if (alpha_ == 1.0 && beta_ == 2.0) return std::expm1(z) / z;
    if (z > 0.0 || alpha_ == 1.0) return series(z);
    const double scale = std::pow(-z, 1.0 / alpha_);
    if (scale <= 2.5) return series(z);
    if (-z >= 25.0) {
        bool ok = false;
        const double v = asymptotic(z, ok);
        if (ok) return v;
    }
    return integral(z);
}

double mittag_leffler(double alpha, double beta, double z, const SeriesControl& ctl) {
    return MittagLeffler(alpha, beta, ctl)(z);
}

}  // namespace roughvol
