#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace roughvol {

// Raised when an iterative evaluation cannot reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SeriesControl {
    double rel_tol = 1e-15;
    int max_terms = 2000;

    void validate() const;
};

double gamma(double x);

// 1/Gamma(x) for any real x, zero at the poles.
double rgamma(double x);

// Gamma(x) for real x away from the poles.
double gamma_signed(double x);

double digamma(double x);

// sin(pi x) with exact zeros at the integers.
double sinpi(double x);

// E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta).
double mittag_leffler(double alpha, double beta, double z, const SeriesControl& ctl = {});

// Gauss hypergeometric 2F1(a, b; c; z) for z in [0, 1].
double hyp2f1(double a, double b, double c, double z);

// Riemann zeta for s in (0, 1).
double zeta(double s);

// Repeated evaluation of E_{alpha,beta} for fixed (alpha, beta); caches the
// reciprocal gamma coefficients used by the power series.
class MittagLeffler {
public:
    MittagLeffler(double alpha, double beta, SeriesControl ctl = {});

    double operator()(double z) const;

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

private:
    double series(double z) const;
    double integral(double z) const;
    double asymptotic(double z, bool& ok) const;

    double alpha_;
    double beta_;
    SeriesControl ctl_;
    std::vector<double> coef_;  // 1/Gamma(alpha k + beta)
};

}  // namespace roughvol
