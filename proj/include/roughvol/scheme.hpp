#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "roughvol/exact_law.hpp"
#include "roughvol/function_spec.hpp"
#include "roughvol/kernels.hpp"
#include "roughvol/specfun.hpp"

namespace roughvol {

// int_0^{min} (t_i - s)^(alpha-1) (t_j - s)^(alpha-1) ds for grid points
// i, j = 1..n (stored at index i-1). Depends on (n, T, alpha) only; shared.
std::shared_ptr<const Eigen::MatrixXd> kernel_gram(const TimeGrid& grid, double alpha);

struct SchemeBuildOptions {
    bool full_covariance = true;
};

// Deterministic law of the integrated-kernel Euler scheme on a uniform grid.
// Indices run over grid points k = 0..n.
class SchemeLaw {
public:
    SchemeLaw(const TimeGrid& grid, const ModelParams& p, SchemeBuildOptions opt = {});

    const TimeGrid& grid() const { return grid_; }
    const ModelParams& params() const { return p_; }

    // c_{i,k} for i < k
    double c(int i, int k) const;
    const std::vector<double>& c_lag() const { return c_lag_; }
    // w(i, k) for i <= k, zero below
    const Eigen::MatrixXd& w() const { return w_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    bool has_full_covariance() const { return cov_.size() > 0; }
    // full (n+1) x (n+1) matrix; requires full_covariance
    const Eigen::MatrixXd& cov() const;
    // single entry, available in both build modes
    double cov(int j, int k) const;

    // D_s X_{t_k}
    double malliavin(double s, int k) const;
    // int_{t_i}^{t_{i+1}} D_s X_{t_k} ds
    double cell_integral(int i, int k) const;
    // (n+1) x (n+1) matrix of cell integrals, entry (i, k)
    Eigen::MatrixXd cell_integrals() const;

private:
    TimeGrid grid_;
    ModelParams p_;
    std::vector<double> c_lag_;  // c_lag_[d] = c_{k-d,k}
    Eigen::MatrixXd w_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    std::shared_ptr<const Eigen::MatrixXd> gram_;
};

SchemeLaw build_scheme_law(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl = {});

double malliavin_scheme(double s, int k, const SchemeLaw& law);

// Driver draws for a block of m paths, one column per path.
struct DriverBlock {
    Eigen::MatrixXd dW;     // n x m
    Eigen::MatrixXd dWperp; // n x m
    Eigen::MatrixXd G;      // n x m, row k-1 holds G_k
};

// One column per path, rows k = 0..n.
struct PathBlock {
    Eigen::MatrixXd X;
    Eigen::MatrixXd L;
};

class SchemeSampler {
public:
    SchemeSampler(const TimeGrid& grid, const ModelParams& p);

    const TimeGrid& grid() const { return grid_; }

    void draw(std::mt19937_64& eng, Eigen::Index m, DriverBlock& out) const;
    void evolve(const DriverBlock& drivers, const FunctionSpec& b, const FunctionSpec& f, PathBlock& out) const;

private:
    TimeGrid grid_;
    ModelParams p_;
    std::vector<double> c_lag_;
    Eigen::MatrixXd A_;        // conditional mean of G given dW, n x n lower
    Eigen::MatrixXd S_factor_; // factor of the conditional covariance of G
    Eigen::MatrixXd X_system_; // (I - kappa2 C), (n+1) x (n+1) unit lower
    Eigen::VectorXd X_shift_;  // x0 + kappa1 t_k^alpha / Gamma(alpha+1)
};

struct SchemePaths {
    Eigen::MatrixXd X;  // count x (n+1)
    Eigen::MatrixXd L;  // count x (n+1)
};

SchemePaths sample_scheme_paths(const TimeGrid& grid, const ModelParams& p, const FunctionSpec& b,
                                const FunctionSpec& f, std::size_t count, std::uint64_t seed);

// Streaming variant: visit(block, paths) is called once per block of
// kSampleBlock paths (possibly concurrently); callers store per-block results
// and reduce them in block order.
void simulate_scheme(const TimeGrid& grid, const ModelParams& p, const FunctionSpec& b, const FunctionSpec& f,
                     std::size_t count, std::uint64_t seed,
                     const std::function<void(std::size_t, const PathBlock&)>& visit);

}  // namespace roughvol
