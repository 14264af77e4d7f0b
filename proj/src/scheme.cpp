#include "roughvol/scheme.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "roughvol/gaussian_law.hpp"
#include "roughvol/parallel.hpp"

namespace roughvol {

namespace {

struct GramEntry {
    int n;
    double T;
    double alpha;
    std::shared_ptr<const Eigen::MatrixXd> gram;
};

std::vector<double> make_c_lag(const TimeGrid& grid, double alpha) {
    std::vector<double> c(static_cast<std::size_t>(grid.n()) + 1, 0.0);
    for (int d = 1; d <= grid.n(); ++d) c[d] = c_weight(0, d, grid, alpha);
    return c;
}

}  // namespace

std::shared_ptr<const Eigen::MatrixXd> kernel_gram(const TimeGrid& grid, double alpha) {
    check_alpha(alpha);
    static std::mutex mutex;
    static std::vector<GramEntry> cache;
    {
        std::lock_guard lock(mutex);
        for (const auto& e : cache)
            if (e.n == grid.n() && e.T == grid.horizon() && e.alpha == alpha) return e.gram;
    }
    const int n = grid.n();
    auto gram = std::make_shared<Eigen::MatrixXd>(n, n);
    const double scale = std::pow(grid.dt(), 2.0 * alpha - 1.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
        const int i = static_cast<int>(r) + 1;
        for (int j = i; j <= n; ++j) {
            const double v = scale * shifted_kernel_integral(i, j - i, alpha);
            (*gram)(i - 1, j - 1) = v;
            (*gram)(j - 1, i - 1) = v;
        }
    });
    std::lock_guard lock(mutex);
    if (cache.size() >= 4) cache.erase(cache.begin());
    cache.push_back({n, grid.horizon(), alpha, gram});
    return gram;
}

SchemeLaw::SchemeLaw(const TimeGrid& grid, const ModelParams& p, SchemeBuildOptions opt) : grid_(grid), p_(p) {
    p_.validate();
    check_grid_matches(grid_, p_);
    const int n = grid_.n();
    c_lag_ = make_c_lag(grid_, p_.alpha);

    const double k2 = p_.kappa2;
    w_ = Eigen::MatrixXd::Identity(n + 1, n + 1);
    if (k2 != 0.0) {
        Eigen::VectorXd v(n);
        for (int k = 1; k <= n; ++k) {
            for (int j = 0; j < k; ++j) v(j) = c_lag_[k - j];
            w_.col(k).head(k).noalias() = w_.topLeftCorner(k, k).triangularView<Eigen::Upper>() * v.head(k);
            w_.col(k).head(k) *= k2;
        }
    }

    mean_.resize(n + 1);
    mean_(0) = p_.x0;
    for (int k = 1; k <= n; ++k) {
        double acc = p_.x0;
        for (int i = 0; i < k; ++i) acc += (p_.kappa1 + k2 * mean_(i)) * c_lag_[k - i];
        mean_(k) = acc;
    }

    gram_ = kernel_gram(grid_, p_.alpha);
    if (opt.full_covariance) {
        const double sg = p_.sigma * rgamma(p_.alpha);
        const Eigen::MatrixXd W = w_.bottomRightCorner(n, n);
        const Eigen::MatrixXd MW = (*gram_) * W.triangularView<Eigen::Upper>();
        Eigen::MatrixXd C = W.transpose().triangularView<Eigen::Lower>() * MW;
        C = 0.5 * (C + C.transpose()).eval();
        cov_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
        cov_.bottomRightCorner(n, n) = sg * sg * C;
    }
}

double SchemeLaw::c(int i, int k) const {
    if (!(0 <= i && i < k && k <= grid_.n())) throw std::out_of_range("SchemeLaw::c: requires 0 <= i < k <= n");
    return c_lag_[k - i];
}

const Eigen::MatrixXd& SchemeLaw::cov() const {
    if (!has_full_covariance()) throw std::logic_error("SchemeLaw: built without the full covariance");
    return cov_;
}

double SchemeLaw::cov(int j, int k) const {
    const int n = grid_.n();
    if (j < 0 || k < 0 || j > n || k > n) throw std::out_of_range("SchemeLaw::cov: index out of range");
    if (has_full_covariance()) return cov_(j, k);
    if (j == 0 || k == 0) return 0.0;
    const double sg = p_.sigma * rgamma(p_.alpha);
    const Eigen::VectorXd vj = w_.col(j).segment(1, j);
    const Eigen::VectorXd vk = w_.col(k).segment(1, k);
    return sg * sg * vj.dot(gram_->topLeftCorner(j, k) * vk);
}

double SchemeLaw::malliavin(double s, int k) const {
    if (k < 0 || k > grid_.n()) throw std::out_of_range("malliavin_scheme: index out of range");
    const double tk = grid_.time(k);
    if (!(s >= 0.0 && s < tk)) throw std::domain_error("malliavin_scheme: requires 0 <= s < t_k");
    const double a = p_.alpha;
    double acc = 0.0;
    for (int i = k; i >= 1; --i) {
        const double ti = grid_.time(i);
        if (!(ti > s)) break;
        acc += w_(i, k) * std::pow(ti - s, a - 1.0);
    }
    return p_.sigma * rgamma(a) * acc;
}

double SchemeLaw::cell_integral(int i, int k) const {
    if (i < 0 || i >= grid_.n() || k < 0 || k > grid_.n()) throw std::out_of_range("cell_integral: index out of range");
    double acc = 0.0;
    for (int l = i + 1; l <= k; ++l) acc += w_(l, k) * c_lag_[l - i];
    return p_.sigma * acc;
}

Eigen::MatrixXd SchemeLaw::cell_integrals() const {
    const int n = grid_.n();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int l = 1; l <= n; ++l)
        for (int i = 0; i < l; ++i) C(l, i) = c_lag_[l - i];
    Eigen::MatrixXd P = C.transpose().triangularView<Eigen::StrictlyUpper>() * w_;
    return p_.sigma * P;
}

SchemeLaw build_scheme_law(const TimeGrid& grid, const ModelParams& p, const SeriesControl& ctl) {
    ctl.validate();
    return SchemeLaw(grid, p);
}

double malliavin_scheme(double s, int k, const SchemeLaw& law) { return law.malliavin(s, k); }

SchemeSampler::SchemeSampler(const TimeGrid& grid, const ModelParams& p) : grid_(grid), p_(p) {
    p_.validate();
    check_grid_matches(grid_, p_);
    const int n = grid_.n();
    const double dt = grid_.dt();
    c_lag_ = make_c_lag(grid_, p_.alpha);

    A_ = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j <= r; ++j) A_(r, j) = c_lag_[r + 1 - j] / dt;
    const double rg = rgamma(p_.alpha);
    Eigen::MatrixXd S = (*kernel_gram(grid_, p_.alpha)) * (rg * rg);
    S.noalias() -= dt * A_ * A_.transpose();
    S = 0.5 * (S + S.transpose()).eval();
    S_factor_ = psd_factor(S);

    X_system_ = Eigen::MatrixXd::Identity(n + 1, n + 1);
    for (int k = 1; k <= n; ++k)
        for (int i = 0; i < k; ++i) X_system_(k, i) = -p_.kappa2 * c_lag_[k - i];
    X_shift_.resize(n + 1);
    double acc = 0.0;
    X_shift_(0) = p_.x0;
    for (int k = 1; k <= n; ++k) {
        acc += c_lag_[k];
        X_shift_(k) = p_.x0 + p_.kappa1 * acc;
    }
}

void SchemeSampler::draw(std::mt19937_64& eng, Eigen::Index m, DriverBlock& out) const {
    const Eigen::Index n = grid_.n();
    const double sdt = std::sqrt(grid_.dt());
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z1(n, m), z2(n, m);
    out.dWperp.resize(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) z1(i, j) = normal(eng);
        for (Eigen::Index i = 0; i < n; ++i) z2(i, j) = normal(eng);
        for (Eigen::Index i = 0; i < n; ++i) out.dWperp(i, j) = sdt * normal(eng);
    }
    out.dW = sdt * z1;
    out.G.noalias() = A_.triangularView<Eigen::Lower>() * out.dW;
    out.G.noalias() += S_factor_.triangularView<Eigen::Lower>() * z2;
}

void SchemeSampler::evolve(const DriverBlock& drivers, const FunctionSpec& b, const FunctionSpec& f,
                           PathBlock& out) const {
    const Eigen::Index n = grid_.n();
    const Eigen::Index m = drivers.dW.cols();
    if (drivers.dW.rows() != n || drivers.G.rows() != n || drivers.dWperp.rows() != n)
        throw std::invalid_argument("SchemeSampler: driver block does not match the grid");
    out.X.resize(n + 1, m);
    out.X.row(0).setConstant(p_.x0);
    out.X.bottomRows(n) = p_.sigma * drivers.G;
    out.X.colwise() += X_shift_;
    out.X.row(0).setConstant(p_.x0);
    X_system_.triangularView<Eigen::UnitLower>().solveInPlace(out.X);

    const double dt = grid_.dt();
    const double rho = p_.rho;
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    out.L.resize(n + 1, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double l = p_.L0;
        out.L(0, j) = l;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = out.X(k, j);
            const double dB = rho * drivers.dW(k, j) + rho_perp * drivers.dWperp(k, j);
            l += b(x) * dt + f(x) * dB;
            out.L(k + 1, j) = l;
        }
    }
    if (!out.X.allFinite() || !out.L.allFinite()) throw NumericalError("scheme path produced non-finite values");
}

void simulate_scheme(const TimeGrid& grid, const ModelParams& p, const FunctionSpec& b, const FunctionSpec& f,
                     std::size_t count, std::uint64_t seed,
                     const std::function<void(std::size_t, const PathBlock&)>& visit) {
    if (count == 0) return;
    const SchemeSampler sampler(grid, p);
    const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        auto eng = block_engine(seed, blk);
        const auto m = static_cast<Eigen::Index>(std::min(kSampleBlock, count - blk * kSampleBlock));
        DriverBlock drivers;
        PathBlock paths;
        sampler.draw(eng, m, drivers);
        sampler.evolve(drivers, b, f, paths);
        visit(blk, paths);
    });
}

SchemePaths sample_scheme_paths(const TimeGrid& grid, const ModelParams& p, const FunctionSpec& b,
                                const FunctionSpec& f, std::size_t count, std::uint64_t seed) {
    SchemePaths out;
    const Eigen::Index cols = grid.n() + 1;
    out.X.resize(static_cast<Eigen::Index>(count), cols);
    out.L.resize(static_cast<Eigen::Index>(count), cols);
    simulate_scheme(grid, p, b, f, count, seed, [&](std::size_t blk, const PathBlock& paths) {
        const auto first = static_cast<Eigen::Index>(blk * kSampleBlock);
        out.X.middleRows(first, paths.X.cols()) = paths.X.transpose();
        out.L.middleRows(first, paths.L.cols()) = paths.L.transpose();
    });
    return out;
}

}  // namespace roughvol
