#include "roughvol/gaussian_moment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roughvol {

namespace {

// E[prod Y_i^{k_i}] for centred Y by Isserlis: pair the first factor with each
// remaining one.
double central_moment(std::vector<int>& k, int total, const Eigen::MatrixXd& cov) {
    if (total == 0) return 1.0;
    if (total % 2 != 0) return 0.0;
    std::size_t i = 0;
    while (k[i] == 0) ++i;
    --k[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) {
        if (k[j] == 0 || cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0) continue;
        const int kj = k[j];
        --k[j];
        acc += kj * cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * central_moment(k, total - 2, cov);
        ++k[j];
    }
    ++k[i];
    return acc;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

}  // namespace

int Monomial::degree() const {
    int d = 0;
    for (int p : powers) d += p;
    return d;
}

double gaussian_moment(const std::vector<int>& powers, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const auto dim = static_cast<Eigen::Index>(powers.size());
    if (dim != mean.size() || cov.rows() != dim || cov.cols() != dim)
        throw std::invalid_argument("gaussian_moment: monomial and law dimensions differ");
    if (dim > kMaxMomentDim) throw std::invalid_argument("gaussian_moment: dimension above the supported cap of 8");
    int degree = 0;
    for (int p : powers) {
        if (p < 0) throw std::invalid_argument("gaussian_moment: negative exponent");
        degree += p;
    }
    if (degree > kMaxMomentDegree) throw std::invalid_argument("gaussian_moment: degree above the supported cap of 8");

    // expand prod (m_i + Y_i)^{p_i} and take central moments of each piece
    std::vector<int> s(powers.size(), 0);
    double acc = 0.0;
    while (true) {
        int total = 0;
        double weight = 1.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            total += s[i];
            const int rest = powers[i] - s[i];
            if (rest > 0) weight *= binomial(powers[i], s[i]) * std::pow(mean(static_cast<Eigen::Index>(i)), rest);
        }
        if (weight != 0.0 && total % 2 == 0) {
            std::vector<int> k = s;
            acc += weight * central_moment(k, total, cov);
        }
        std::size_t i = 0;
        while (i < s.size() && s[i] == powers[i]) s[i++] = 0;
        if (i == s.size()) break;
        ++s[i];
    }
    return acc;
}

MomentTable::MomentTable(const std::vector<int>& max_powers, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov)
    : max_(max_powers) {
    const std::size_t d = max_.size();
    if (static_cast<Eigen::Index>(d) != mean.size() || cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("MomentTable: dimensions differ");
    stride_.assign(d, 1);
    std::size_t size = 1;
    for (std::size_t i = 0; i < d; ++i) {
        if (max_[i] < 0) throw std::invalid_argument("MomentTable: negative exponent");
        stride_[i] = size;
        size *= static_cast<std::size_t>(max_[i]) + 1;
    }
    values_.assign(size, 0.0);
    values_[0] = 1.0;
    std::vector<int> k(d, 0);
    for (std::size_t idx = 1; idx < size; ++idx) {
        // advance the multi-index to match idx
        std::size_t c = 0;
        while (k[c] == max_[c]) k[c++] = 0;
        ++k[c];
        std::size_t i = 0;
        while (k[i] == 0) ++i;
        const std::size_t base = idx - stride_[i];  // k - e_i
        double v = mean(static_cast<Eigen::Index>(i)) * values_[base];
        for (std::size_t j = 0; j < d; ++j) {
            const int kj = k[j] - (j == i ? 1 : 0);
            if (kj > 0) v += kj * cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * values_[base - stride_[j]];
        }
        values_[idx] = v;
    }
}

double MomentTable::operator()(const std::vector<int>& powers) const {
    if (powers.size() != max_.size()) throw std::invalid_argument("MomentTable: wrong number of exponents");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (powers[i] < 0 || powers[i] > max_[i]) throw std::out_of_range("MomentTable: exponent outside the table");
        idx += stride_[i] * static_cast<std::size_t>(powers[i]);
    }
    return values_[idx];
}

double gaussian_moment(const Monomial& m, const GaussianLaw& law) {
    law.validate();
    return m.coef * gaussian_moment(m.powers, law.mean, law.cov);
}

double gaussian_moment(const MultiPolynomial& poly, const GaussianLaw& law) {
    law.validate();
    int degree = 0;
    for (const auto& t : poly.terms) degree = std::max(degree, t.degree());
    if (degree > kMaxMomentDegree) throw std::invalid_argument("gaussian_moment: degree above the supported cap of 8");
    double acc = 0.0;
    for (const auto& t : poly.terms) acc += t.coef * gaussian_moment(t.powers, law.mean, law.cov);
    return acc;
}

}  // namespace roughvol
