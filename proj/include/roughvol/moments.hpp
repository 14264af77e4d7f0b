#pragma once

#include <variant>

#include "roughvol/exact_law.hpp"
#include "roughvol/function_spec.hpp"
#include "roughvol/kernels.hpp"
#include "roughvol/scheme.hpp"

namespace roughvol {

struct ExactBranch {};
struct SchemeBranch {
    TimeGrid grid;
};
using Branch = std::variant<ExactBranch, SchemeBranch>;

// E[L_T^2] - L0^2 contribution of the martingale part for b = 0, f affine:
// int_0^T E[f(X_t)^2] dt, or its grid sum for the scheme.
double second_moment_L(const ModelParams& p, const FunctionSpec& f, const Branch& which);

struct CubicOptions {
    double abs_tol = 1e-9;
    int max_refinements = 3;
};

// E[(int_0^T f(X_t) dB_t)^3] for affine f.
double cubic_exact(const ModelParams& p, const FunctionSpec& f, const CubicOptions& opt = {});
// Same quantity for the scheme, as an exact double sum over grid cells.
double cubic_scheme(const SchemeLaw& law, const ModelParams& p, const FunctionSpec& f);

// (a, c) with f(x) = a + c x; throws std::invalid_argument for other kinds.
std::pair<double, double> affine_coefficients(const FunctionSpec& f);

}  // namespace roughvol
