#pragma once

#include <Eigen/Dense>

#include <vector>

#include "roughvol/gaussian_law.hpp"

namespace roughvol {

inline constexpr int kMaxMomentDegree = 8;
inline constexpr int kMaxMomentDim = 8;

struct Monomial {
    double coef = 1.0;
    std::vector<int> powers;  // one exponent per coordinate

    int degree() const;
};

struct MultiPolynomial {
    std::vector<Monomial> terms;
};

// E[prod_i Z_i^{p_i}] for Z ~ N(mean, cov).
double gaussian_moment(const std::vector<int>& powers, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

double gaussian_moment(const Monomial& m, const GaussianLaw& law);
double gaussian_moment(const MultiPolynomial& poly, const GaussianLaw& law);

// All raw moments E[prod Z_i^{k_i}] with k_i <= max_powers[i], filled by the
// recursion E[Z_i Z^k] = m_i E[Z^k] + sum_j k_j cov_ij E[Z^{k - e_j}].
// The covariance may be singular (repeated coordinates are fine).
class MomentTable {
public:
    MomentTable(const std::vector<int>& max_powers, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

    double operator()(const std::vector<int>& powers) const;

private:
    std::vector<int> max_;
    std::vector<std::size_t> stride_;
    std::vector<double> values_;
};

}  // namespace roughvol
