#include "roughvol/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "roughvol/specfun.hpp"

namespace roughvol {

Rule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = 0.5 * (1.0 - x);
        r.x[n - 1 - i] = 0.5 * (1.0 + x);
        r.w[i] = 0.5 * w;
        r.w[n - 1 - i] = 0.5 * w;
    }
    return r;
}

Rule gauss_jacobi(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_jacobi: need at least one node");
    if (!(a > -1.0 && b > -1.0)) throw std::domain_error("gauss_jacobi: exponents must exceed -1");
    if (a == 0.0 && b == 0.0) return gauss_legendre(n);
    const double ab = a + b;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        J(k, k) = (k == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (k >= 1) {
            const double ratio = (k == 1) ? 1.0 : (k + ab) / (s - 1.0);
            const double v = 4.0 * k * (k + a) * (k + b) * ratio / (s * s * (s + 1.0));
            J(k, k - 1) = J(k - 1, k) = std::sqrt(v);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    // mass of (1-x)^a (1+x)^b on [-1,1], mapped to [0,1]
    const double mu0 = gamma(a + 1.0) * gamma(b + 1.0) * rgamma(ab + 2.0);
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        const double y = 0.5 * (1.0 + x);
        r.x[i] = y;
        r.w[i] = mu0 * v0 * v0 / (std::pow(1.0 - y, a) * std::pow(y, b));
    }
    return r;
}

namespace {

void append(Rule& out, const Rule& base, double lo, double hi) {
    const double len = hi - lo;
    for (std::size_t i = 0; i < base.size(); ++i) {
        out.x.push_back(lo + len * base.x[i]);
        out.w.push_back(len * base.w[i]);
    }
}

}  // namespace

Rule graded_rule(const GradedOptions& opt) {
    if (opt.points < 1 || opt.levels_left < 0 || opt.levels_right < 0 || !(opt.ratio > 0.0 && opt.ratio < 1.0) ||
        !(opt.split > 0.0 && opt.split < 1.0))
        throw std::invalid_argument("graded_rule: invalid options");
    const Rule gl = gauss_legendre(opt.points);
    const Rule jl = gauss_jacobi(opt.points, 0.0, opt.exp_left);
    const Rule jr = gauss_jacobi(opt.points, opt.exp_right, 0.0);
    Rule out;
    // left half, innermost panel first
    {
        const double s = opt.split;
        double edge = s * std::pow(opt.ratio, opt.levels_left);
        append(out, opt.exp_left != 0.0 ? jl : gl, 0.0, edge);
        for (int j = opt.levels_left - 1; j >= 0; --j) {
            const double next = s * std::pow(opt.ratio, j);
            append(out, gl, edge, next);
            edge = next;
        }
    }
    {
        const double s = 1.0 - opt.split;
        double edge = opt.split;
        for (int j = 0; j < opt.levels_right; ++j) {
            const double next = 1.0 - s * std::pow(opt.ratio, j + 1);
            append(out, gl, edge, next);
            edge = next;
        }
        append(out, opt.exp_right != 0.0 ? jr : gl, edge, 1.0);
    }
    return out;
}

}  // namespace roughvol
