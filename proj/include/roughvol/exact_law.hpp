#pragma once

#include <vector>

#include "roughvol/gaussian_law.hpp"
#include "roughvol/kernels.hpp"
#include "roughvol/specfun.hpp"

namespace roughvol {

struct ModelParams {
    double x0 = 0.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double sigma = 1.0;
    double rho = 0.0;
    double alpha = 0.75;
    double T = 1.0;
    double L0 = 0.0;

    void validate() const;
};

// Exact Gaussian law of the Volterra OU process for fixed parameters. Keeps
// the gamma tables and Mittag-Leffler evaluators needed by repeated calls.
class VolterraOU {
public:
    explicit VolterraOU(const ModelParams& p, SeriesControl ctl = {});

    const ModelParams& params() const { return p_; }

    double mean(double t) const;
    double cov(double t, double T2) const;
    // D_s X_t
    double malliavin(double s, double t) const;
    // D_{t-u} X_t as a function of the lag u > 0
    double lag_kernel(double u) const;

    // cov by the double series, and by quadrature of the Malliavin kernels
    double cov_series(double t, double T2, bool& well_conditioned) const;
    double cov_quadrature(double t, double T2) const;

private:
    ModelParams p_;
    SeriesControl ctl_;
    MittagLeffler e1_;    // E_{alpha,1}
    MittagLeffler ea1_;   // E_{alpha,alpha+1}
    MittagLeffler eaa_;   // E_{alpha,alpha}
    std::vector<double> rg0_;  // 1/Gamma(i alpha), i >= 1
    std::vector<double> rg1_;  // 1/Gamma(i alpha + 1)
    std::vector<double> fmax_;  // sup over [0,1] of 2F1(1 - alpha, 1; i alpha + 1; .)
};

double mean_exact(double t, const ModelParams& p, const SeriesControl& ctl = {});
double cov_exact(double t, double T2, const ModelParams& p, const SeriesControl& ctl = {});
double malliavin_exact(double s, double t, const ModelParams& p, const SeriesControl& ctl = {});
double stationary_variance(const ModelParams& p);

// law of (X_{t_1}, ..., X_{t_n})
GaussianLaw grid_law_exact(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl = {});

// zero-mean law of (dW_0, ..., dW_{n-1}, G_1, ..., G_n)
GaussianLaw driver_law(const TimeGrid& grid, const ModelParams& p);

void check_grid_matches(const TimeGrid& grid, const ModelParams& p);

}  // namespace roughvol
