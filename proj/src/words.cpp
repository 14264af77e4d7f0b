#include "roughvol/words.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "roughvol/parallel.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/scheme.hpp"

namespace roughvol {

Word Word::parse(std::string_view text) {
    Word w;
    for (char ch : text) {
        if (ch != 'I' && ch != 'J' && ch != 'K') throw std::invalid_argument("word letters must be I, J or K");
        w.letters.push_back(static_cast<Letter>(ch));
    }
    return w;
}

int Word::weight() const {
    int l = 0;
    for (Letter c : letters) l += c == Letter::J ? 2 : 1;
    return l;
}

int Word::count(Letter c) const { return static_cast<int>(std::count(letters.begin(), letters.end(), c)); }

std::string Word::to_string() const {
    std::string s;
    for (Letter c : letters) s += static_cast<char>(c);
    return s;
}

namespace {

void extend(Word& w, int remaining, std::vector<Word>& out) {
    if (remaining == 0) {
        out.push_back(w);
        return;
    }
    for (Letter c : {Letter::I, Letter::J, Letter::K}) {
        const int l = c == Letter::J ? 2 : 1;
        if (l > remaining) continue;
        w.letters.push_back(c);
        extend(w, remaining - l, out);
        w.letters.pop_back();
    }
}

}  // namespace

std::vector<Word> enumerate_words(int weight) {
    if (weight < 1) throw std::invalid_argument("enumerate_words: weight must be positive");
    std::vector<Word> out;
    Word w;
    extend(w, weight, out);
    std::stable_sort(out.begin(), out.end(), [](const Word& a, const Word& b) { return a.length() < b.length(); });
    return out;
}

std::vector<Word> contributing_words(int weight) {
    std::vector<Word> out;
    for (auto& w : enumerate_words(weight))
        if (w.letters.back() != Letter::I) out.push_back(std::move(w));
    return out;
}

double word_constant(const Word& w, double rho) {
    double factorial = 1.0;
    for (int j = 2; j <= w.weight(); ++j) factorial *= j;
    return std::ldexp(1.0, -w.count(Letter::J)) * std::pow(rho, w.count(Letter::I)) * factorial;
}

namespace {

using Poly = std::map<std::vector<int>, double>;

Poly multiply(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            std::vector<int> e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            out[e] += ca * cb;
        }
    return out;
}

Poly differentiate(const Poly& a, int var) {
    Poly out;
    for (const auto& [e, c] : a) {
        if (e[static_cast<std::size_t>(var)] == 0 || c == 0.0) continue;
        std::vector<int> d = e;
        const int k = d[static_cast<std::size_t>(var)]--;
        out[d] += c * k;
    }
    return out;
}

Poly coordinate_factor(int m, int c, Letter letter, const std::vector<double>& b) {
    Poly out;
    std::vector<int> e(static_cast<std::size_t>(m), 0);
    switch (letter) {
        case Letter::I:
            e[static_cast<std::size_t>(c)] = 1;
            out[e] = 1.0;
            break;
        case Letter::J:
            e[static_cast<std::size_t>(c)] = 2;
            out[e] = 1.0;
            break;
        case Letter::K:
            for (std::size_t d = 0; d < b.size(); ++d) {
                if (b[d] == 0.0) continue;
                e[static_cast<std::size_t>(c)] = static_cast<int>(d);
                out[e] = b[d];
            }
            break;
    }
    return out;
}

// letter of coordinate c (the last letter is coordinate 0)
Letter letter_at(const Word& w, int c) { return w.letters[static_cast<std::size_t>(w.length() - 1 - c)]; }

std::vector<double> drift_coefficients(const FunctionSpec& b) {
    if (!b.is_polynomial() || b.degree() > 2)
        throw std::invalid_argument("word expansion needs b polynomial of degree <= 2");
    return b.polynomial_coefficients();
}

}  // namespace

WordTerm expand_word(const Word& w, double rho, const FunctionSpec& b) {
    if (w.letters.empty()) throw std::invalid_argument("expand_word: empty word");
    const auto bc = drift_coefficients(b);
    WordTerm term;
    term.word = w;
    term.constant = word_constant(w, rho);
    if (w.letters.back() == Letter::I) return term;
    const int m = w.length();
    Poly prod;
    prod[std::vector<int>(static_cast<std::size_t>(m), 0)] = 1.0;
    for (int c = 0; c < m; ++c) prod = multiply(prod, coordinate_factor(m, c, letter_at(w, c), bc));
    if (prod.empty()) return term;

    std::vector<int> target(static_cast<std::size_t>(m), -1);
    std::vector<int> icoords;
    for (int c = 1; c < m; ++c)
        if (letter_at(w, c) == Letter::I) icoords.push_back(c);
    // odometer over targets l in [0, c) for each I coordinate
    for (int c : icoords) target[static_cast<std::size_t>(c)] = 0;
    while (true) {
        Poly d = prod;
        for (int c : icoords) d = differentiate(d, target[static_cast<std::size_t>(c)]);
        WordPairing pairing;
        pairing.target = target;
        for (const auto& [e, coef] : d)
            if (coef != 0.0) pairing.poly.terms.push_back({coef, e});
        if (!pairing.poly.terms.empty()) term.pairings.push_back(std::move(pairing));
        std::size_t j = 0;
        while (j < icoords.size()) {
            int& t = target[static_cast<std::size_t>(icoords[j])];
            if (++t < icoords[j]) break;
            t = 0;
            ++j;
        }
        if (j == icoords.size()) break;
    }
    return term;
}

namespace {

std::vector<int> max_powers(const WordTerm& term, int m) {
    std::vector<int> mp(static_cast<std::size_t>(m), 0);
    for (const auto& pr : term.pairings)
        for (const auto& mono : pr.poly.terms)
            for (std::size_t i = 0; i < mp.size(); ++i) mp[i] = std::max(mp[i], mono.powers[i]);
    return mp;
}

double poly_expectation(const MultiPolynomial& poly, const MomentTable& table) {
    double acc = 0.0;
    for (const auto& mono : poly.terms) acc += mono.coef * table(mono.powers);
    return acc;
}

// ---------------------------------------------------------------- exact branch

class ExactWordIntegral {
public:
    ExactWordIntegral(const WordTerm& term, const ModelParams& p, const WordOptions& opt)
        : term_(term), ou_(p), m_(term.word.length()) {
        const auto idx = static_cast<std::size_t>(m_ - 1);
        if (idx >= opt.points.size() || idx >= opt.levels_left.size() || idx >= opt.levels_right.size())
            throw std::invalid_argument("WordOptions: no rule configured for this word length");
        for (int c = 0; c < m_; ++c) {
            GradedOptions g;
            g.points = opt.points[idx];
            g.levels_left = opt.levels_left[idx];
            g.levels_right = c == 0 ? 0 : opt.levels_right[idx];
            g.exp_right = (c > 0 && letter_at(term.word, c) == Letter::I) ? p.alpha - 1.0 : 0.0;
            rules_.push_back(graded_rule(g));
        }
        maxp_ = max_powers(term_, m_);
    }

    double run() const {
        const Rule& top = rules_[0];
        std::vector<double> slot(top.size(), 0.0);
        parallel_for(top.size(), [&](std::size_t q) {
            State st(m_);
            slot[q] = top.w[q] * level(st, 0, ou_.params().T * top.x[q]);
        });
        double total = 0.0;
        for (double v : slot) total += v;
        return term_.constant * total * ou_.params().T;
    }

private:
    struct State {
        explicit State(int m) : r(m), mean(m), cov(m, m) {}
        std::vector<double> r;
        Eigen::VectorXd mean;
        Eigen::MatrixXd cov;
    };

    // value of the integrand integrated over coordinates c+1.. with r_c fixed
    double level(State& st, int c, double rc) const {
        st.r[static_cast<std::size_t>(c)] = rc;
        st.mean(c) = ou_.mean(rc);
        st.cov(c, c) = ou_.cov(rc, rc);
        for (int a = 0; a < c; ++a) st.cov(a, c) = st.cov(c, a) = ou_.cov(rc, st.r[static_cast<std::size_t>(a)]);
        if (c + 1 == m_) return leaf(st);
        const Rule& rule = rules_[static_cast<std::size_t>(c + 1)];
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) acc += rule.w[q] * level(st, c + 1, rc * rule.x[q]);
        return acc * rc;
    }

    double leaf(const State& st) const {
        const MomentTable table(maxp_, st.mean, st.cov);
        double acc = 0.0;
        for (const auto& pr : term_.pairings) {
            double d = 1.0;
            for (int c = 0; c < m_; ++c) {
                const int l = pr.target[static_cast<std::size_t>(c)];
                if (l >= 0) d *= ou_.lag_kernel(st.r[static_cast<std::size_t>(l)] - st.r[static_cast<std::size_t>(c)]);
            }
            acc += d * poly_expectation(pr.poly, table);
        }
        return acc;
    }

    const WordTerm& term_;
    VolterraOU ou_;
    int m_;
    std::vector<Rule> rules_;
    std::vector<int> maxp_;
};

// ---------------------------------------------------------------- scheme branch

// Inside cell i the scheme Malliavin derivative D_r X_{t_k}, r = t_i + x dt,
// equals sigma/Gamma(alpha) dt^(alpha-1) [a_0 (1-x)^(alpha-1) + smooth(x)].
// The smooth part is stored by its values at Chebyshev nodes, so ordered
// integrals over several points of one cell reduce to fixed tensors.
constexpr int kNodes = 16;
constexpr int kBasis = kNodes + 1;

std::vector<double> chebyshev_nodes() {
    std::vector<double> x(kNodes);
    for (int q = 0; q < kNodes; ++q) x[static_cast<std::size_t>(q)] = 0.5 - 0.5 * std::cos(M_PI * (q + 0.5) / kNodes);
    return x;
}

double lagrange(const std::vector<double>& nodes, int b, double x) {
    double v = 1.0;
    const double xb = nodes[static_cast<std::size_t>(b)];
    for (int q = 0; q < kNodes; ++q)
        if (q != b) v *= (x - nodes[static_cast<std::size_t>(q)]) / (xb - nodes[static_cast<std::size_t>(q)]);
    return v;
}

double factorial(int k) {
    double f = 1.0;
    for (int j = 2; j <= k; ++j) f *= j;
    return f;
}

// int over 1 > x_0 > ... > x_{j-1} > 0 of prod_q basis_{b_q}(x_{slot_q}), for
// every basis tuple; basis 0 is (1-x)^(alpha-1), basis 1+q the Lagrange
// polynomial of node q.
std::vector<double> block_tensor(int j, const std::vector<int>& slots, double alpha) {
    const int r = static_cast<int>(slots.size());
    const auto nodes = chebyshev_nodes();
    std::size_t size = 1;
    for (int q = 0; q < r; ++q) size *= kBasis;
    std::vector<double> out(size, 0.0);
    constexpr int npts = 32;

    for (int flags = 0; flags < (1 << r); ++flags) {
        auto singular = [&](int q) { return (flags >> q) & 1; };
        // u_q = 1 - x_{slot_q}; v = u_{r-1}, u_q = u_{q+1} y_q
        int nsing = 0;
        for (int q = 0; q < r; ++q) nsing += singular(q);
        std::vector<Rule> rules;
        rules.push_back(gauss_jacobi(npts, 0.0, (alpha - 1.0) * nsing + (r - 1)));
        for (int p = 0; p + 1 < r; ++p) {
            int below = 0;
            for (int q = 0; q <= p; ++q) below += singular(q);
            rules.push_back(gauss_jacobi(npts, 0.0, (alpha - 1.0) * below + p));
        }
        std::vector<int> idx(static_cast<std::size_t>(r), 0);
        std::vector<double> u(static_cast<std::size_t>(r));
        std::vector<std::vector<double>> vals(static_cast<std::size_t>(r));
        while (true) {
            double w = rules[0].w[static_cast<std::size_t>(idx[0])];
            u[static_cast<std::size_t>(r - 1)] = rules[0].x[static_cast<std::size_t>(idx[0])];
            for (int q = r - 2; q >= 0; --q) {
                const Rule& ry = rules[static_cast<std::size_t>(q + 1)];
                const auto yi = static_cast<std::size_t>(idx[static_cast<std::size_t>(q + 1)]);
                u[static_cast<std::size_t>(q)] = u[static_cast<std::size_t>(q + 1)] * ry.x[yi];
                w *= ry.w[yi] * u[static_cast<std::size_t>(q + 1)];  // Jacobian
            }
            // free slots above, between and below the marked ones
            const int s0 = slots[0];
            double vol = std::pow(u[0], s0) / factorial(s0);
            for (int q = 0; q + 1 < r; ++q) {
                const int g = slots[static_cast<std::size_t>(q + 1)] - slots[static_cast<std::size_t>(q)] - 1;
                vol *= std::pow(u[static_cast<std::size_t>(q + 1)] - u[static_cast<std::size_t>(q)], g) / factorial(g);
            }
            const int tail = j - 1 - slots[static_cast<std::size_t>(r - 1)];
            vol *= std::pow(1.0 - u[static_cast<std::size_t>(r - 1)], tail) / factorial(tail);
            w *= vol;
            for (int q = 0; q < r; ++q) {
                auto& vq = vals[static_cast<std::size_t>(q)];
                vq.assign(kBasis, 0.0);
                const double uq = u[static_cast<std::size_t>(q)];
                if (singular(q))
                    vq[0] = std::pow(uq, alpha - 1.0);
                else
                    for (int b = 0; b < kNodes; ++b) vq[static_cast<std::size_t>(b + 1)] = lagrange(nodes, b, 1.0 - uq);
            }
            // accumulate the outer product
            std::vector<int> b(static_cast<std::size_t>(r));
            for (int q = 0; q < r; ++q) b[static_cast<std::size_t>(q)] = singular(q) ? 0 : 1;
            while (true) {
                double v = w;
                std::size_t flat = 0;
                for (int q = 0; q < r; ++q) {
                    v *= vals[static_cast<std::size_t>(q)][static_cast<std::size_t>(b[static_cast<std::size_t>(q)])];
                    flat = flat * kBasis + static_cast<std::size_t>(b[static_cast<std::size_t>(q)]);
                }
                out[flat] += v;
                int q = r - 1;
                while (q >= 0) {
                    auto& bq = b[static_cast<std::size_t>(q)];
                    if (singular(q)) {
                        --q;
                        continue;
                    }
                    if (++bq <= kNodes) break;
                    bq = 1;
                    --q;
                }
                if (q < 0) break;
            }
            int q = 0;
            while (q < r && ++idx[static_cast<std::size_t>(q)] == npts) idx[static_cast<std::size_t>(q++)] = 0;
            if (q == r) break;
        }
    }
    return out;
}

class SchemeWordSum {
public:
    SchemeWordSum(const WordTerm& term, const ModelParams& p, const TimeGrid& grid)
        : term_(term), law_(grid, p), m_(term.word.length()), n_(grid.n()) {
        P_ = law_.cell_integrals();
        maxp_ = max_powers(term_, m_);
        const double a = p.alpha;
        dt_ = grid.dt();
        phi_scale_ = p.sigma * rgamma(a) * std::pow(dt_, a - 1.0) * dt_;
        // patterns of consecutive coordinates that may share a cell
        bool need_coef = false;
        for (int lo = 0; lo < m_; ++lo)
            for (int hi = lo + 1; hi < m_; ++hi) {
                std::vector<int> slots;
                for (int c = lo; c <= hi; ++c)
                    if (letter_at(term.word, c) == Letter::I) slots.push_back(c - lo);
                if (slots.empty()) continue;
                tensors_[{lo, hi}] = block_tensor(hi - lo + 1, slots, a);
                need_coef = true;
            }
        if (need_coef) build_coefficients();
    }

    double run() const {
        std::vector<double> slot(static_cast<std::size_t>(n_), 0.0);
        parallel_for(static_cast<std::size_t>(n_), [&](std::size_t k0) {
            std::vector<int> cells(static_cast<std::size_t>(m_));
            cells[0] = static_cast<int>(k0);
            slot[k0] = descend(cells, 1);
        });
        double total = 0.0;
        for (double v : slot) total += v;
        return term_.constant * total;
    }

private:
    double descend(std::vector<int>& cells, int c) const {
        if (c == m_) return evaluate(cells);
        double acc = 0.0;
        for (int k = cells[static_cast<std::size_t>(c - 1)]; k >= 0; --k) {
            cells[static_cast<std::size_t>(c)] = k;
            acc += descend(cells, c + 1);
        }
        return acc;
    }

    double evaluate(const std::vector<int>& cells) const {
        // blocks of equal cells
        std::vector<int> block_start(static_cast<std::size_t>(m_));
        for (int c = 0; c < m_; ++c)
            block_start[static_cast<std::size_t>(c)] =
                (c > 0 && cells[static_cast<std::size_t>(c)] == cells[static_cast<std::size_t>(c - 1)])
                    ? block_start[static_cast<std::size_t>(c - 1)]
                    : c;
        const Eigen::VectorXd& mean = law_.mean();
        const Eigen::MatrixXd& cov = law_.cov();
        Eigen::VectorXd mu(m_);
        Eigen::MatrixXd S(m_, m_);
        for (int a = 0; a < m_; ++a) {
            const int ka = cells[static_cast<std::size_t>(a)];
            mu(a) = mean(ka);
            for (int b = 0; b < m_; ++b) S(a, b) = cov(ka, cells[static_cast<std::size_t>(b)]);
        }
        const MomentTable table(maxp_, mu, S);
        double acc = 0.0;
        for (const auto& pr : term_.pairings) {
            double weight = 1.0;
            int c = 0;
            while (c < m_ && weight != 0.0) {
                int end = c;
                while (end + 1 < m_ && block_start[static_cast<std::size_t>(end + 1)] == c) ++end;
                weight *= block_weight(pr, cells, c, end);
                c = end + 1;
            }
            if (weight != 0.0) acc += weight * poly_expectation(pr.poly, table);
        }
        return acc;
    }

    double block_weight(const WordPairing& pr, const std::vector<int>& cells, int lo, int hi) const {
        const int i = cells[static_cast<std::size_t>(lo)];
        std::vector<int> targets;
        for (int c = lo; c <= hi; ++c) {
            const int l = pr.target[static_cast<std::size_t>(c)];
            if (l < 0) continue;
            if (l >= lo) return 0.0;  // D_r X_{t_i} vanishes for r >= t_i
            targets.push_back(cells[static_cast<std::size_t>(l)]);
        }
        const int j = hi - lo + 1;
        if (targets.empty()) return std::pow(dt_, j) / factorial(j);
        if (j == 1) return P_(i, targets[0]);
        const auto& J = tensors_.at({lo, hi});
        const int r = static_cast<int>(targets.size());
        std::vector<const double*> coef;
        for (int k : targets) coef.push_back(&coef_[(static_cast<std::size_t>(i) * (n_ + 1) + k) * kBasis]);
        double acc = 0.0;
        if (r == 1) {
            for (int b = 0; b < kBasis; ++b) acc += J[static_cast<std::size_t>(b)] * coef[0][b];
        } else if (r == 2) {
            for (int b0 = 0; b0 < kBasis; ++b0) {
                double inner = 0.0;
                for (int b1 = 0; b1 < kBasis; ++b1) inner += J[static_cast<std::size_t>(b0 * kBasis + b1)] * coef[1][b1];
                acc += coef[0][b0] * inner;
            }
        } else {
            for (int b0 = 0; b0 < kBasis; ++b0)
                for (int b1 = 0; b1 < kBasis; ++b1) {
                    double inner = 0.0;
                    const std::size_t base = static_cast<std::size_t>((b0 * kBasis + b1) * kBasis);
                    for (int b2 = 0; b2 < kBasis; ++b2) inner += J[base + static_cast<std::size_t>(b2)] * coef[2][b2];
                    acc += coef[0][b0] * coef[1][b1] * inner;
                }
        }
        return std::pow(dt_, j - r) * std::pow(phi_scale_, r) * acc;
    }

    void build_coefficients() {
        const int n = n_;
        const double a = law_.params().alpha;
        const Eigen::MatrixXd& W = law_.w();
        const auto nodes = chebyshev_nodes();
        coef_.assign(static_cast<std::size_t>(n + 1) * (n + 1) * kBasis, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k <= n; ++k)
                coef_[(static_cast<std::size_t>(i) * (n + 1) + k) * kBasis] = W(i + 1, k);
        for (int q = 0; q < kNodes; ++q) {
            // E(i, l) = (l - i - x_q)^(alpha-1) for l >= i + 2
            std::vector<double> lag(static_cast<std::size_t>(n + 1), 0.0);
            for (int d = 2; d <= n; ++d) lag[static_cast<std::size_t>(d)] = std::pow(d - nodes[static_cast<std::size_t>(q)], a - 1.0);
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n + 1, n + 1);
            for (int i = 0; i <= n; ++i)
                for (int l = i + 2; l <= n; ++l) E(i, l) = lag[static_cast<std::size_t>(l - i)];
            const Eigen::MatrixXd R = E * W.triangularView<Eigen::Upper>();
            for (int i = 0; i < n; ++i)
                for (int k = i + 1; k <= n; ++k)
                    coef_[(static_cast<std::size_t>(i) * (n + 1) + k) * kBasis + 1 + q] = R(i, k);
        }
    }

    const WordTerm& term_;
    SchemeLaw law_;
    int m_;
    int n_;
    double dt_ = 0.0;
    double phi_scale_ = 0.0;
    Eigen::MatrixXd P_;
    std::vector<int> maxp_;
    std::map<std::pair<int, int>, std::vector<double>> tensors_;
    std::vector<double> coef_;
};

void check_word_inputs(const ModelParams& p, const FunctionSpec& b) {
    p.validate();
    if (p.L0 != 0.0) throw std::invalid_argument("moment_via_words requires L0 = 0");
    drift_coefficients(b);
}

}  // namespace

double word_contribution(const Word& w, const ModelParams& p, const FunctionSpec& b, const Branch& which,
                         const WordOptions& opt) {
    check_word_inputs(p, b);
    const WordTerm term = expand_word(w, p.rho, b);
    if (term.pairings.empty() || term.constant == 0.0) return 0.0;
    if (const auto* s = std::get_if<SchemeBranch>(&which)) {
        check_grid_matches(s->grid, p);
        return SchemeWordSum(term, p, s->grid).run();
    }
    return ExactWordIntegral(term, p, opt).run();
}

double moment_via_words(int N, const ModelParams& p, const FunctionSpec& b, const Branch& which,
                        const WordOptions& opt) {
    if (N < 1 || N > 4) throw std::invalid_argument("moment_via_words supports N = 1..4");
    check_word_inputs(p, b);
    double total = 0.0;
    for (const Word& w : contributing_words(N)) total += word_contribution(w, p, b, which, opt);
    return total;
}

}  // namespace roughvol
