#pragma once

// Independent reference computations used by several test programs. None of
// them call the engines under test.

#include <Eigen/Dense>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_pFq.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "roughvol/exact_law.hpp"

namespace oracle {

using real = long double;

// Power-series form of the exact law:
//   m(t) = sum_j mu_j t^{alpha j},  D_s X_t = sum_i d_i (t - s)^{alpha (i + 1) - 1}.
struct SeriesLaw {
    double alpha;
    std::vector<real> mu;
    std::vector<real> d;

    SeriesLaw(const roughvol::ModelParams& p, int terms = 80) : alpha(p.alpha) {
        using boost::math::tgamma;
        mu.push_back(p.x0);
        real k = 1.0L;  // kappa2^{j-1}
        for (int j = 1; j < terms; ++j) {
            const real g = tgamma(static_cast<real>(alpha) * j + 1.0L);
            mu.push_back((p.x0 * k * p.kappa2 + p.kappa1 * k) / g);
            k *= p.kappa2;
        }
        real ki = 1.0L;
        for (int i = 0; i < terms; ++i) {
            d.push_back(p.sigma * ki / tgamma(static_cast<real>(alpha) * (i + 1)));
            ki *= p.kappa2;
        }
    }

    real a(int i) const { return static_cast<real>(alpha) * (i + 1); }

    real mean(real t) const {
        real s = 0.0L;
        for (std::size_t j = 0; j < mu.size(); ++j) s += mu[j] * std::pow(t, static_cast<real>(alpha) * j);
        return s;
    }
    real var(real t) const {
        real s = 0.0L;
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t k = 0; k < d.size(); ++k) {
                const real e = a(static_cast<int>(i)) + a(static_cast<int>(k)) - 1.0L;
                s += d[i] * d[k] * std::pow(t, e) / e;
            }
        return s;
    }
};

// int_0^T E[(a + c X_t)^2] dt
inline real second_moment(const SeriesLaw& law, real T, real a, real c) {
    const std::size_t J = law.mu.size();
    std::vector<real> phi(J);
    for (std::size_t j = 0; j < J; ++j) phi[j] = c * law.mu[j];
    phi[0] += a;
    real s = 0.0L;
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < J; ++k) {
            const real e = static_cast<real>(law.alpha) * static_cast<real>(j + k) + 1.0L;
            s += phi[j] * phi[k] * std::pow(T, e) / e;
        }
    for (std::size_t i = 0; i < law.d.size(); ++i)
        for (std::size_t k = 0; k < law.d.size(); ++k) {
            const real e = law.a(static_cast<int>(i)) + law.a(static_cast<int>(k));
            s += c * c * law.d[i] * law.d[k] * std::pow(T, e) / (e * (e - 1.0L));
        }
    return s;
}

// 6 rho c int int_{s<t} E[(a + c X_s)(a + c X_t)] D_s X_t ds dt
inline real cubic(const SeriesLaw& law, real T, real rho, real a, real c, int cov_terms = 30) {
    using boost::math::beta;
    const real al = law.alpha;
    const std::size_t J = law.mu.size();
    std::vector<real> phi(J);
    for (std::size_t j = 0; j < J; ++j) phi[j] = c * law.mu[j];
    phi[0] += a;
    real mean_part = 0.0L;
    for (std::size_t i = 0; i < law.d.size(); ++i) {
        const real g = law.a(static_cast<int>(i));
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t k = 0; k < J; ++k) {
                const real e = al * static_cast<real>(j + k) + g + 1.0L;
                mean_part += law.d[i] * phi[j] * phi[k] * beta(al * static_cast<real>(j) + 1.0L, g) * std::pow(T, e) / e;
            }
    }
    // int int int_{v<s<t} D(s-v) D(t-v) D(t-s)
    real cov_part = 0.0L;
    for (int i1 = 0; i1 < cov_terms; ++i1)
        for (int i2 = 0; i2 < cov_terms; ++i2)
            for (int i3 = 0; i3 < cov_terms; ++i3) {
                const real a1 = law.a(i1), a2 = law.a(i2), a3 = law.a(i3);
                const real S = a1 + a2 + a3;
                cov_part += law.d[i1] * law.d[i2] * law.d[i3] * beta(a3, a1) * std::pow(T, S) / (S * (S - 1.0L));
            }
    return 6.0L * rho * c * (mean_part + c * c * cov_part);
}

// E[prod_k Z_{idx_k}] for centred Gaussian Z by summing over pairings.
inline double isserlis(std::vector<int> idx, const Eigen::MatrixXd& cov) {
    if (idx.empty()) return 1.0;
    if (idx.size() % 2) return 0.0;
    const int first = idx.back();
    idx.pop_back();
    double acc = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const double c = cov(first, idx[j]);
        if (c == 0.0) continue;
        std::vector<int> rest = idx;
        rest.erase(rest.begin() + static_cast<long>(j));
        acc += c * isserlis(rest, cov);
    }
    return acc;
}

// E[prod_k (m_{idx_k} + Y_{idx_k})] by expanding over subsets.
inline double gaussian_product(const std::vector<int>& idx, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const std::size_t n = idx.size();
    double acc = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double w = 1.0;
        std::vector<int> centred;
        for (std::size_t k = 0; k < n; ++k) {
            if (mask & (1u << k))
                centred.push_back(idx[k]);
            else
                w *= mean(idx[k]);
        }
        if (w != 0.0) acc += w * isserlis(centred, cov);
    }
    return acc;
}

// Linear structure of the scheme: X_k = m_k + sigma sum_l W(l, k) G_l, from
// X_k = x0 + sum_{i<k} c(i,k) (kappa1 + kappa2 X_i) + sigma G_k.
struct SchemeLinear {
    Eigen::VectorXd m;  // k = 0..n
    Eigen::MatrixXd W;  // (n+1) x (n+1), row l = 1..n, column k
    Eigen::MatrixXd D;  // joint covariance of (dW_0..dW_{n-1}, G_1..G_n)
    Eigen::MatrixXd Cw; // c(i, k)
    // cov(X_j, X_k)
    double cov(int j, int k, double sigma) const {
        const int n = static_cast<int>(m.size()) - 1;
        double s = 0.0;
        for (int l = 1; l <= n; ++l)
            for (int q = 1; q <= n; ++q) s += W(l, j) * W(q, k) * D(n + l - 1, n + q - 1);
        return sigma * sigma * s;
    }
};

inline SchemeLinear scheme_linear(const roughvol::ModelParams& p, int n) {
    const roughvol::TimeGrid grid(n, p.T);
    const double dt = grid.dt();
    const double a = p.alpha;
    SchemeLinear out;
    out.Cw = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 1; k <= n; ++k)
        for (int i = 0; i < k; ++i) {
            const double tk = grid.time(k);
            out.Cw(i, k) = (std::pow(tk - grid.time(i), a) - std::pow(tk - grid.time(i + 1), a)) / std::tgamma(a + 1.0);
        }
    out.W = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.m = Eigen::VectorXd::Zero(n + 1);
    out.m(0) = p.x0;
    for (int k = 1; k <= n; ++k) {
        out.m(k) = p.x0;
        out.W(k, k) = 1.0;
        for (int i = 0; i < k; ++i) {
            out.m(k) += out.Cw(i, k) * (p.kappa1 + p.kappa2 * out.m(i));
            out.W.col(k) += p.kappa2 * out.Cw(i, k) * out.W.col(i);
        }
    }
    const double rg2 = 1.0 / (std::tgamma(a) * std::tgamma(a));
    out.D = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) out.D(j, j) = dt;
    for (int k = 1; k <= n; ++k) {
        for (int j = 0; j < k; ++j) out.D(j, n + k - 1) = out.D(n + k - 1, j) = out.Cw(j, k);
        for (int j = 1; j <= k; ++j) {
            const double tj = grid.time(j), tk = grid.time(k);
            // int_0^{t_j} (t_j - s)^{a-1} (t_k - s)^{a-1} ds by the Euler integral
            const double v = j == k ? std::pow(tj, 2.0 * a - 1.0) / (2.0 * a - 1.0) * rg2
                                    : std::pow(tj, a) * std::pow(tk, a - 1.0) / a *
                                          boost::math::hypergeometric_pFq({1.0 - a, 1.0}, {a + 1.0}, tj / tk) * rg2;
            out.D(n + j - 1, n + k - 1) = out.D(n + k - 1, n + j - 1) = v;
        }
    }
    return out;
}

// E[(L^n_T - L0)^N] for the scheme with f(x) = x and polynomial b, by brute
// expansion of (sum_k b(X_k) dt + X_k dB_k)^N over the joint Gaussian law of
// (X_0..X_{n-1}, dW_0.., dWperp_0..).
inline double scheme_power_moment(int N, const roughvol::ModelParams& p, const std::vector<double>& b, int n) {
    const double dt = p.T / n;
    const SchemeLinear lin = scheme_linear(p, n);
    const Eigen::MatrixXd& W = lin.W;
    const Eigen::MatrixXd& D = lin.D;
    const Eigen::VectorXd& m = lin.m;
    // variables: X_0..X_{n-1} (index k), dW_k (n + k), dWperp_k (2n + k)
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3 * n, 2 * n);  // Z = L * (dW, G) except dWperp
    for (int k = 1; k < n; ++k)
        for (int l = 1; l <= k; ++l) L(k, n + l - 1) = p.sigma * W(l, k);
    for (int k = 0; k < n; ++k) L(n + k, k) = 1.0;
    Eigen::MatrixXd cov = L * D * L.transpose();
    for (int k = 0; k < n; ++k) cov(2 * n + k, 2 * n + k) = dt;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3 * n);
    for (int k = 0; k < n; ++k) mean(k) = m(k);

    const double rho_perp = std::sqrt(1.0 - p.rho * p.rho);
    // one factor a_k is a list of (coef, variable list)
    struct Term {
        double coef;
        std::vector<int> vars;
    };
    std::vector<std::vector<Term>> factor(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        auto& f = factor[static_cast<std::size_t>(k)];
        for (std::size_t d = 0; d < b.size(); ++d)
            if (b[d] != 0.0) f.push_back({b[d] * dt, std::vector<int>(d, k)});
        if (p.rho != 0.0) f.push_back({p.rho, {k, n + k}});
        if (rho_perp != 0.0) f.push_back({rho_perp, {k, 2 * n + k}});
    }
    double total = 0.0;
    std::function<void(int, double, std::vector<int>&)> rec = [&](int depth, double coef, std::vector<int>& vars) {
        if (depth == N) {
            total += coef * gaussian_product(vars, mean, cov);
            return;
        }
        for (int k = 0; k < n; ++k)
            for (const Term& t : factor[static_cast<std::size_t>(k)]) {
                const std::size_t old = vars.size();
                vars.insert(vars.end(), t.vars.begin(), t.vars.end());
                rec(depth + 1, coef * t.coef, vars);
                vars.resize(old);
            }
    };
    std::vector<int> vars;
    rec(0, 1.0, vars);
    return total;
}

}  // namespace oracle
