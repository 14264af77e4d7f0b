#pragma once

#include <cstddef>

namespace roughvol {

// Uniform grid t_k = k T / n.
class TimeGrid {
public:
    TimeGrid(int n, double horizon);

    int n() const { return n_; }
    double horizon() const { return T_; }
    double dt() const { return T_ / n_; }
    double time(int k) const;

    // index k with t_k <= s < t_{k+1}; the horizon maps to n
    int eta_index(double s) const;
    double eta(double s) const { return time(eta_index(s)); }

    bool operator==(const TimeGrid&) const = default;

private:
    int n_;
    double T_;
};

// int_{t_i}^{t_{i+1}} (t_k - u)^(alpha-1) / Gamma(alpha) du
double c_weight(int i, int k, const TimeGrid& grid, double alpha);

// Same quantity for a grid with unit spacing and lag d = k - i >= 1.
double c_weight_unit(int lag, double alpha);

// (d^a - (d-1)^a) computed without cancellation, d >= 1
double power_difference(double d, double a);

// int_0^c (a-s)^(alpha-1) (b-s)^(alpha-1) ds, 0 < c <= a <= b
double cross_kernel_integral(double a, double b, double c, double alpha);

// int_0^e u^(alpha-1) (d+u)^(alpha-1) du, e > 0, d >= 0
double shifted_kernel_integral(double e, double d, double alpha);

// int_s^t (u-s)^(alpha-1)/Gamma(alpha) (t-u)^(beta-1)/Gamma(beta) du
double beta_convolution(double s, double t, double alpha, double beta);

void check_alpha(double alpha);

}  // namespace roughvol
