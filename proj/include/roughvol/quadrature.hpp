#pragma once

#include <functional>
#include <vector>

namespace roughvol {

// Nodes and weights on [0, 1]. Weights are for the plain integrand: any
// Jacobi weight function has been divided out already.
struct Rule {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const { return x.size(); }

    template <class F>
    double integrate(F&& f, double lo, double hi) const {
        const double len = hi - lo;
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(lo + len * x[i]);
        return acc * len;
    }
};

Rule gauss_legendre(int n);

// Rule for int_0^1 (1-y)^a y^b g(y) dy, returned with the weight divided out,
// so that sum w_i f(x_i) approximates int_0^1 f for f ~ (1-y)^a y^b g.
Rule gauss_jacobi(int n, double a, double b);

// Composite rule on [0,1] with panels shrinking geometrically towards the
// ends that carry algebraic behaviour y^exp_left and (1-y)^exp_right.
struct GradedOptions {
    int points = 12;
    int levels_left = 0;
    int levels_right = 0;
    double ratio = 0.2;
    double exp_left = 0.0;
    double exp_right = 0.0;
    double split = 0.5;
};

Rule graded_rule(const GradedOptions& opt);

}  // namespace roughvol
