#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace roughvol {

struct GaussianLaw {
    std::vector<std::string> labels;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    Eigen::Index dim() const { return mean.size(); }
    // dimensions, finiteness and symmetry (1e-12 relative)
    void validate() const;
};

// Lower-triangular L with L L^T = cov, adding at most two jitter passes
// (1e-12 then 1e-10 times trace/n on the diagonal) before giving up.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov);

// Paths are processed in fixed blocks; block b draws from its own engine
// seeded from (seed, b), so output is independent of the worker count.
inline constexpr std::size_t kSampleBlock = 1024;

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block, std::uint64_t stream = 0);

// count x dim matrix, one draw per row.
Eigen::MatrixXd sample(const GaussianLaw& law, std::size_t count, std::uint64_t seed);

}  // namespace roughvol
