#include "roughvol/gaussian_law.hpp"

#include <cmath>
#include <stdexcept>

#include "roughvol/parallel.hpp"
#include "roughvol/specfun.hpp"

namespace roughvol {

void GaussianLaw::validate() const {
    if (cov.rows() != cov.cols()) throw std::invalid_argument("GaussianLaw: covariance must be square");
    if (cov.rows() != mean.size()) throw std::invalid_argument("GaussianLaw: mean and covariance dimensions differ");
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != mean.size())
        throw std::invalid_argument("GaussianLaw: label count differs from dimension");
    if (!mean.allFinite() || !cov.allFinite()) throw std::invalid_argument("GaussianLaw: non-finite entries");
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("GaussianLaw: covariance is not symmetric");
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    if (n == 0) return Eigen::MatrixXd(0, 0);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double level = cov.trace() / static_cast<double>(n);
    for (double eps : {1e-12, 1e-10}) {
        Eigen::MatrixXd jittered = cov;
        jittered.diagonal().array() += eps * level;
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw NumericalError("covariance factorization failed after jitter");
}

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd sample(const GaussianLaw& law, std::size_t count, std::uint64_t seed) {
    law.validate();
    const Eigen::Index d = law.dim();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), d);
    if (count == 0 || d == 0) return out;
    const Eigen::MatrixXd L = psd_factor(law.cov);
    const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
    parallel_for(blocks, [&](std::size_t b) {
        auto eng = block_engine(seed, b);
        std::normal_distribution<double> normal;
        const std::size_t first = b * kSampleBlock;
        const std::size_t rows = std::min(kSampleBlock, count - first);
        Eigen::MatrixXd z(d, static_cast<Eigen::Index>(rows));
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            for (Eigen::Index i = 0; i < d; ++i) z(i, j) = normal(eng);
        Eigen::MatrixXd x = L.triangularView<Eigen::Lower>() * z;
        x.colwise() += law.mean;
        out.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(rows)) = x.transpose();
    });
    return out;
}

}  // namespace roughvol
