#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

#include "oracles.hpp"
#include "roughvol/analysis.hpp"
#include "roughvol/moments.hpp"
#include "roughvol/scheme.hpp"

using namespace roughvol;

namespace {

ModelParams params(double alpha, double k1, double k2, double rho = 0.6) {
    ModelParams p;
    p.alpha = alpha;
    p.kappa1 = k1;
    p.kappa2 = k2;
    p.x0 = 0.2;
    p.sigma = 1.0;
    p.rho = rho;
    p.T = 1.0;
    return p;
}

std::vector<double> synthetic(const std::vector<int>& ns, const std::function<double(double)>& law) {
    std::vector<double> e;
    for (int n : ns) e.push_back(law(n));
    return e;
}

// Var(X_T - X^n_T) = int_0^T (D_s X_T - D_s X^n_T)^2 ds, cell by cell, with the
// variable v = t_{i+1} - s so the kernel singularities sit on endpoints.
double strong_error_quadrature(int n, const ModelParams& p) {
    const oracle::SchemeLinear lin = oracle::scheme_linear(p, n);
    const VolterraOU ou(p);
    const TimeGrid g(n, p.T);
    const double rg = 1.0 / std::tgamma(p.alpha);
    boost::math::quadrature::tanh_sinh<double> q;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double right = g.time(i + 1);
        total += q.integrate(
            [&](double v) {
                if (v <= 0.0) return 0.0;
                double ds = 0.0;
                for (int l = i + 1; l <= n; ++l)
                    ds += p.sigma * lin.W(l, n) * std::pow(g.time(l) - right + v, p.alpha - 1.0) * rg;
                const double d = ou.lag_kernel(p.T - right + v) - ds;
                return d * d;
            },
            0.0, g.dt());
    }
    return std::sqrt(total);
}

}  // namespace

TEST(Rates, Descriptor) {
    EXPECT_EQ(rate_descriptor(0.8).branch, RateBranch::one_over_n);
    EXPECT_EQ(rate_descriptor(2.0 / 3.0).branch, RateBranch::log_over_n);
    EXPECT_EQ(rate_descriptor(0.6).branch, RateBranch::power);
    EXPECT_NEAR(rate_descriptor(0.6).order, 0.8, 1e-15);
    EXPECT_DOUBLE_EQ(theoretical_rate(0.9, 100), 0.01);
    EXPECT_DOUBLE_EQ(theoretical_rate(2.0 / 3.0, 100), std::log(100.0) / 100.0);
    EXPECT_NEAR(theoretical_rate(0.6, 100), std::pow(100.0, -0.8), 1e-16);
    EXPECT_THROW(rate_descriptor(0.5), std::domain_error);
    EXPECT_THROW(rate_descriptor(1.0), std::domain_error);
    EXPECT_THROW(theoretical_rate(0.7, 1), std::invalid_argument);
    EXPECT_FALSE(rate_descriptor(0.7).to_string().empty());
}

TEST(Rates, ContinuityAcrossTwoThirds) {
    const double lo = theoretical_rate(2.0 / 3.0 - 1e-3, 10000);
    const double hi = theoretical_rate(2.0 / 3.0 + 1e-3, 10000);
    EXPECT_NEAR(lo / hi, 1.0, 0.05);
}

TEST(Rates, QuantityNames) {
    for (Quantity q : {Quantity::mean_X, Quantity::var_X, Quantity::cov_X, Quantity::cubic_L})
        EXPECT_EQ(parse_quantity(to_string(q)), q);
    EXPECT_THROW(parse_quantity("mean"), std::invalid_argument);
}

TEST(Fit, LeastSquares) {
    const LineFit f = least_squares({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    EXPECT_DOUBLE_EQ(f.slope, 2.0);
    EXPECT_DOUBLE_EQ(f.intercept, 1.0);
    EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
    EXPECT_THROW(least_squares({1.0, 1.0}, {0.0, 1.0}), std::domain_error);
    EXPECT_THROW(least_squares({1.0}, {0.0}), std::invalid_argument);
}

TEST(Fit, SyntheticPowerLaws) {
    const std::vector<int> ns = {16, 32, 64, 128, 256};
    const RateFit a = fit_rate(ns, synthetic(ns, [](double n) { return 3.0 * std::pow(n, -0.8); }), 0.6);
    EXPECT_NEAR(a.slope, 0.8, 1e-9);
    EXPECT_NEAR(a.r_squared, 1.0, 1e-12);
    EXPECT_NEAR(a.target, 0.8, 1e-15);
    EXPECT_TRUE(a.pass);
    const RateFit b = fit_rate(ns, synthetic(ns, [](double n) { return 0.5 / n; }), 0.9);
    EXPECT_NEAR(b.slope, 1.0, 1e-9);
    EXPECT_TRUE(b.pass);
    const RateFit c = fit_rate(ns, synthetic(ns, [](double n) { return std::pow(n, -0.5); }), 0.9);
    EXPECT_FALSE(c.pass);
}

TEST(Fit, FlatnessAtTwoThirds) {
    const std::vector<int> ns = {64, 128, 256, 512, 1024};
    const RateFit f = fit_rate(ns, synthetic(ns, [](double n) { return 2.0 * std::log(n) / n; }), 2.0 / 3.0);
    EXPECT_TRUE(f.flatness);
    EXPECT_NEAR(f.slope, 0.0, 1e-9);
    EXPECT_TRUE(f.pass);
    RateFitOptions o;
    o.target = 1.0;
    const RateFit g = fit_rate(ns, synthetic(ns, [](double n) { return 1.0 / n; }), 2.0 / 3.0, o);
    EXPECT_FALSE(g.flatness);
    EXPECT_NEAR(g.slope, 1.0, 1e-9);
    EXPECT_TRUE(g.pass);
}

TEST(Fit, RejectsUnresolvedOrMalformedInput) {
    EXPECT_THROW(fit_rate({8, 16, 32}, {1e-2, 5e-3, 2e-3}, 0.8), std::invalid_argument);
    EXPECT_THROW(fit_rate({8, 16, 16, 32}, {1e-2, 5e-3, 4e-3, 2e-3}, 0.8), std::invalid_argument);
    EXPECT_THROW(fit_rate({8, 16, 32, 64}, {1e-2, 5e-3, 0.0, 2e-3}, 0.8), std::domain_error);
    EXPECT_THROW(fit_rate({8, 16, 32, 64}, {1e-2, 5e-3, 2e-3}, 0.8), std::invalid_argument);
}

TEST(ErrorCurves, DriftFreeMeanIsExact) {
    const ErrorCurve c = weak_error_curve(Quantity::mean_X, 0.7, params(0.7, 0.5, 0.0), {8, 16, 32, 64});
    for (double e : c.errors) EXPECT_LT(e, 1e-14);
    EXPECT_THROW(fit_rate(c), std::domain_error);
}

TEST(ErrorCurves, MeanRateAboveTwoThirds) {
    const ErrorCurve c = weak_error_curve(Quantity::mean_X, 0.8, params(0.8, 0.5, -1.0), {32, 64, 128, 256, 512});
    EXPECT_EQ(c.non_monotone_steps(), 0);
    const RateFit f = fit_rate(c);
    EXPECT_TRUE(f.pass) << f.slope;
}

TEST(ErrorCurves, CovarianceDecays) {
    const ErrorCurve c = weak_error_curve(Quantity::cov_X, 0.75, params(0.75, 0.0, -1.0), {64, 512});
    EXPECT_GE(c.errors[0] / c.errors[1], 5.0);
    EXPECT_THROW(weak_error_curve(Quantity::cov_X, 0.75, params(0.75, 0.0, -1.0), {63, 128}), std::invalid_argument);
    EXPECT_THROW(weak_error_curve(Quantity::var_X, 0.75, params(0.75, 0.0, -1.0), {64, 32}), std::invalid_argument);
    EXPECT_THROW(weak_error_curve(Quantity::var_X, 0.75, params(0.75, 0.0, -1.0), {8192}), std::invalid_argument);
}

TEST(ErrorCurves, NonMonotoneCount) {
    ErrorCurve c;
    c.errors = {1.0, 2.0, 1.0, 1.5, 0.5};
    EXPECT_EQ(c.non_monotone_steps(), 1);
}

TEST(ErrorCurves, CubicRateBelowTwoThirds) {
    const ErrorCurve c =
        weak_error_curve(Quantity::cubic_L, 0.6, params(0.6, 0.3, -1.0), {32, 64, 128, 256, 512});
    const RateFit f = fit_rate(c);
    EXPECT_TRUE(f.pass) << f.slope;
}

TEST(FreezeGap, AgainstDirectSum) {
    for (double alpha : {0.6, 0.75, 0.9})
        for (int n : {10, 1000}) {
            const double T = 2.0;
            const TimeGrid g(n, T);
            const long double dt = static_cast<long double>(T) / n;
            long double frozen = 0.0L;
            for (int i = 0; i < n; ++i) frozen += dt * std::pow(T - i * dt, 2.0L * alpha - 2.0L);
            const long double exact = std::pow(static_cast<long double>(T), 2.0L * alpha - 1.0L) / (2.0L * alpha - 1.0L);
            const double gr = std::tgamma(alpha);
            const double ref = static_cast<double>(exact - frozen) / (gr * gr);
            const FreezeGap f = kernel_freeze_gap(g, alpha);
            EXPECT_NEAR(f.gap / ref, 1.0, 1e-9) << alpha << ' ' << n;
            EXPECT_GT(f.gap, 0.0);
            EXPECT_GT(f.asymptote, 0.0);
        }
}

TEST(FreezeGap, AsymptoteRatioApproachesOne) {
    double prev = 1e300;
    for (int n : {64, 512, 4096}) {
        const FreezeGap f = kernel_freeze_gap(TimeGrid(n, 1.0), 0.75);
        const double dev = std::abs(f.gap / f.asymptote - 1.0);
        EXPECT_LT(dev, prev);
        prev = dev;
    }
    EXPECT_LT(prev, 0.02);
}

TEST(StrongError, DriftFreeSchemeHasNoStrongError) {
    EXPECT_LT(strong_error_exact(TimeGrid(16, 1.0), params(0.7, 0.4, 0.0)), 1e-6);
}

TEST(StrongError, AgainstCellQuadrature) {
    for (double alpha : {0.6, 0.8})
        for (int n : {4, 16}) {
            const ModelParams p = params(alpha, 0.2, -1.3);
            const double ref = strong_error_quadrature(n, p);
            EXPECT_NEAR(strong_error_exact(TimeGrid(n, p.T), p) / ref, 1.0, 1e-6) << alpha << ' ' << n;
        }
}

TEST(MonteCarlo, InputChecks) {
    const ModelParams p = params(0.7, 0.0, -1.0);
    const FunctionSpec x = FunctionSpec::affine(0.0, 1.0);
    EXPECT_THROW(mc_expectation(x, FunctionSpec(), x, p, TimeGrid(8, 1.0), 0, 1), std::invalid_argument);
    EXPECT_THROW(mc_weak_error(x, FunctionSpec(), x, p, 8, 12, 100, 1), std::invalid_argument);
    EXPECT_THROW(mc_expectation(FunctionSpec::exp_affine(1, 1), FunctionSpec(), x, p, TimeGrid(8, 1.0), 10, 1),
                 std::invalid_argument);
}

TEST(MonteCarlo, MeanOfLIsZeroWithoutDrift) {
    const ModelParams p = params(0.7, 0.3, -1.0);
    const FunctionSpec x = FunctionSpec::affine(0.0, 1.0);
    const MCResult r = mc_expectation(x, FunctionSpec(), x, p, TimeGrid(16, 1.0), 20000, 3);
    EXPECT_NEAR(r.estimate, 0.0, 4.0 * r.std_error);
    EXPECT_GT(r.std_error, 0.0);
    EXPECT_EQ(r.paths, 20000u);
    const MCResult again = mc_expectation(x, FunctionSpec(), x, p, TimeGrid(16, 1.0), 20000, 3);
    EXPECT_EQ(again.estimate, r.estimate);
}

TEST(MonteCarlo, EqualGridsGiveZeroDifference) {
    const ModelParams p = params(0.7, 0.3, -1.0);
    const FunctionSpec x = FunctionSpec::affine(0.0, 1.0);
    const MCWeakError w = mc_weak_error(FunctionSpec::polynomial({0, 0, 0, 1}), FunctionSpec(), x, p, 8, 8, 3000, 5);
    EXPECT_EQ(w.difference, 0.0);
    EXPECT_EQ(w.coarse.estimate, w.fine.estimate);
}

TEST(MonteCarlo, CubicDifferenceMatchesDeterministicValue) {
    const ModelParams p = params(0.75, 0.3, -1.0, 0.7);
    const FunctionSpec x = FunctionSpec::affine(0.0, 1.0);
    const MCWeakError w = mc_weak_error(FunctionSpec::polynomial({0, 0, 0, 1}), FunctionSpec(), x, p, 4, 16, 40000, 17);
    const double ref = cubic_scheme(SchemeLaw(TimeGrid(4, 1.0), p), p, x) - cubic_scheme(SchemeLaw(TimeGrid(16, 1.0), p), p, x);
    EXPECT_NEAR(w.difference, ref, 3.5 * w.std_error);
    // common random numbers: well below the error of two independent runs
    EXPECT_LT(w.std_error, 0.6 * std::hypot(w.coarse.std_error, w.fine.std_error));
    EXPECT_NEAR(w.fine.estimate, cubic_scheme(SchemeLaw(TimeGrid(16, 1.0), p), p, x), 3.5 * w.fine.std_error);
}
