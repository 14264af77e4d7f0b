#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roughvol/exact_law.hpp"
#include "roughvol/function_spec.hpp"
#include "roughvol/kernels.hpp"
#include "roughvol/specfun.hpp"

namespace roughvol {

enum class RateBranch { power, log_over_n, one_over_n };

struct RateDescriptor {
    RateBranch branch = RateBranch::one_over_n;
    double order = 1.0;  // min(3 alpha - 1, 1)

    std::string to_string() const;
};

RateDescriptor rate_descriptor(double alpha);
// v_n(alpha): 1/n above 2/3, log(n)/n at 2/3 (within 1e-12), n^{-(3 alpha - 1)} below.
double theoretical_rate(double alpha, int n);

enum class Quantity { mean_X, var_X, cov_X, cubic_L };

Quantity parse_quantity(std::string_view name);
std::string to_string(Quantity q);

struct ErrorCurve {
    Quantity quantity = Quantity::mean_X;
    double alpha = 0.0;
    std::vector<int> n_values;
    double exact = 0.0;          // model value
    std::vector<double> scheme;  // scheme value per n
    std::vector<double> errors;  // |exact - scheme|
    // steps where the error grows after the first doubling
    int non_monotone_steps() const;
};

// Deterministic weak-error curve; cubic_L uses f(x) = x, b = 0 and p.rho.
// n strictly increasing and <= 4096; cov_X pairs X_{T/2} with X_T and needs even n.
ErrorCurve weak_error_curve(Quantity q, double alpha, ModelParams p, const std::vector<int>& n_list);

struct RateFit {
    std::vector<int> n_values;
    std::vector<double> errors;
    double slope = 0.0;  // decay order: minus the log-log OLS slope
    double intercept = 0.0;
    double r_squared = 0.0;
    RateDescriptor theoretical;
    bool flatness = false;  // fitted error n / log n instead of error
    double target = 0.0;
    double band = 0.0;
    bool pass = false;
};

struct RateFitOptions {
    double band = 0.15;
    double flat_band = 0.1;
    double scale = 1.0;  // magnitude of the quantity, for the resolution check
    // order to test against instead of min(3 alpha - 1, 1)
    std::optional<double> target;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares of y on x.
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

RateFit fit_rate(const std::vector<int>& n_values, const std::vector<double>& errors, double alpha,
                 const RateFitOptions& opt = {});
RateFit fit_rate(const ErrorCurve& curve, const RateFitOptions& opt = {});

struct FreezeGap {
    double gap = 0.0;
    double asymptote = 0.0;
};

// Variance gap of the kernel-freezing scheme for the driftless fractional
// integral, and its leading-order asymptote -zeta(2 - 2 alpha) T^{2a-1} / (Gamma(a)^2 n^{2a-1}).
FreezeGap kernel_freeze_gap(const TimeGrid& grid, double alpha);

// sqrt(Var(X_T - X^n_T)) with both processes driven by the same Brownian motion.
double strong_error_exact(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl = {});

struct MCResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    TimeGrid grid{1, 1.0};
};

// Plain Monte Carlo estimate of E[phi(L^n_T)].
MCResult mc_expectation(const FunctionSpec& phi, const FunctionSpec& b, const FunctionSpec& f, const ModelParams& p,
                        const TimeGrid& grid, std::size_t paths, std::uint64_t seed);

struct MCWeakError {
    MCResult coarse;
    MCResult fine;
    double difference = 0.0;  // E phi(L coarse) - E phi(L fine)
    double std_error = 0.0;   // of the paired difference
};

// Common random numbers: every path draws the fine driver once; the coarse
// driver is the summed increments and the sub-vector of G.
MCWeakError mc_weak_error(const FunctionSpec& phi, const FunctionSpec& b, const FunctionSpec& f, const ModelParams& p,
                          int n_coarse, int n_fine, std::size_t paths, std::uint64_t seed);

}  // namespace roughvol
