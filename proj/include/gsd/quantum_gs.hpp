// Copyright 2026 The gsdlab Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#pragma once

// Zero-temperature adiabatic ground-state distribution over a degenerate
// classical ground manifold.
//
// H(s) = (1-s) H_d + s H_p is minimized by Rayleigh-Ritz over the global-flip
// symmetric subspace V_k^S: level 1 spans the classical ground states, level 2
// adds every basis state one driver term away from them. States are stored as
// packed bit strings (bit v set = spin v is -1); each symmetric vector
// (|phi> + |phi-bar>)/sqrt(2) is represented by the member with spin 0 up.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsd/distribution.hpp"
#include "gsd/enumerator.hpp"
#include "gsd/errors.hpp"
#include "gsd/instances.hpp"
#include "gsd/rng.hpp"

namespace gsd {

// ---- drivers ------------------------------------------------------------------

enum class DriverKind { TransverseField, NonStoquastic };

/// One off-diagonal driver term: flips spin `a` (and `b` when b >= 0).
struct DriverMove {
    Vertex a;
    Vertex b;
    double weight;
};

/// H_d = -sum_i X_i  (+ sum_<ij> Jt_ij X_i X_j for the non-stoquastic driver).
struct Driver {
    DriverKind kind = DriverKind::TransverseField;
    std::vector<Coupling> xx;  // Jt_ij
    std::uint64_t sign_seed = 0;
    int sign = 1;  // global sign applied to |J_ij|-matched couplings

    std::vector<DriverMove> moves(int spins) const {
        std::vector<DriverMove> out;
        out.reserve(spins + xx.size());
        for (Vertex v = 0; v < spins; ++v) out.push_back({v, -1, -1.0});
        for (const auto& c : xx)
            if (c.value != 0) out.push_back({c.i, c.j, static_cast<double>(c.value)});
        return out;
    }
};

inline Driver transverse_field() { return {}; }

/// XX couplings equal to the problem's ZZ couplings up to a sign drawn from
/// `sign_seed`: one global sign, or an independent sign per edge.
inline Driver non_stoquastic(const IsingInstance& inst, std::uint64_t sign_seed, bool per_edge_sign = false) {
    Driver d;
    d.kind = DriverKind::NonStoquastic;
    d.sign_seed = sign_seed;
    Rng rng = make_stream(sign_seed, {0x4e53});
    d.sign = (rng() >> 63) ? 1 : -1;
    for (const auto& c : inst.couplings()) {
        const int sign = per_edge_sign ? ((rng() >> 63) ? 1 : -1) : d.sign;
        d.xx.push_back({c.i, c.j, sign * c.value});
    }
    return d;
}

// ---- packed computational states ---------------------------------------------

class StateTable {
public:
    explicit StateTable(int spins = 0) : spins_(spins), words_(std::max(1, (spins + 63) / 64)) {}

    int spins() const { return spins_; }
    int words() const { return words_; }
    std::size_t size() const { return data_.size() / words_; }

    std::span<const std::uint64_t> state(std::size_t i) const { return {data_.data() + i * words_, std::size_t(words_)}; }

    int find(std::span<const std::uint64_t> s) const {
        auto it = index_.find(key(s));
        return it == index_.end() ? -1 : it->second;
    }

    /// Index of `s`, inserting it if new. Second member tells whether it was added.
    std::pair<int, bool> insert(std::span<const std::uint64_t> s) {
        auto [it, added] = index_.try_emplace(key(s), static_cast<int>(size()));
        if (added) data_.insert(data_.end(), s.begin(), s.end());
        return {it->second, added};
    }

    /// Canonical member of {s, complement(s)}: the one with spin 0 up.
    void canonicalize(std::span<std::uint64_t> s) const {
        if (!(s[0] & 1)) return;
        for (auto& w : s) w = ~w;
        if (spins_ % 64) s.back() &= (std::uint64_t{1} << (spins_ % 64)) - 1;
    }

    std::vector<std::uint64_t> pack(const SpinConfig& config) const {
        std::vector<std::uint64_t> s(words_, 0);
        for (int v = 0; v < spins_; ++v)
            if (config[v] < 0) s[v / 64] |= std::uint64_t{1} << (v % 64);
        return s;
    }

    static int spin(std::span<const std::uint64_t> s, Vertex v) { return (s[v / 64] >> (v % 64)) & 1 ? -1 : 1; }
    static void flip(std::span<std::uint64_t> s, Vertex v) { s[v / 64] ^= std::uint64_t{1} << (v % 64); }

private:
    static std::string key(std::span<const std::uint64_t> s) {
        return {reinterpret_cast<const char*>(s.data()), s.size() * sizeof(std::uint64_t)};
    }

    int spins_;
    int words_;
    std::vector<std::uint64_t> data_;
    std::unordered_map<std::string, int> index_;
};

// ---- perturbative subspaces -----------------------------------------------------

struct SubspaceBasis {
    enum class Origin { GroundState, ExcitedReachable };

    int level = 1;
    StateTable states;
    std::vector<Origin> origin;
    /// For each ground basis vector, the indices of phi and phi-bar in the SolutionSet.
    std::vector<std::pair<int, int>> pair_solutions;

    std::size_t dimension() const { return states.size(); }
    std::size_t ground_count() const { return pair_solutions.size(); }
};

struct SubspaceOptions {
    std::size_t dimension_cap = 1'000'000;
};

inline Energy state_energy(const IsingInstance& inst, std::span<const std::uint64_t> s) {
    Energy e = 0;
    for (const auto& c : inst.couplings()) e += Energy{c.value} * StateTable::spin(s, c.i) * StateTable::spin(s, c.j);
    return e;
}

inline void check_quantum_inputs(const IsingInstance& inst, const SolutionSet& solutions) {
    if (inst.has_fields()) throw InputError("quantum ground state needs h = 0 (global flip symmetry)");
    if (solutions.truncated) throw InputError("quantum ground state needs a complete solution set");
    if (solutions.solutions.empty()) throw InputError("empty solution set");
    for (const auto& s : solutions.solutions) check_length(inst, s);
}

/// V_1^S (level 1) or V_2^S (level 2) for the given driver.
inline SubspaceBasis build_subspace(const IsingInstance& inst, const SolutionSet& solutions, const Driver& driver,
                                    int level, const SubspaceOptions& opts = {}) {
    if (level != 1 && level != 2) throw InputError("subspace level must be 1 or 2");
    check_quantum_inputs(inst, solutions);
    const int n = inst.size();
    SubspaceBasis basis;
    basis.level = level;
    basis.states = StateTable(n);
    std::vector<int> partner_of;  // per ground vector, solution index of the second member seen
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        auto s = basis.states.pack(solutions.solutions[i]);
        const bool flipped = s[0] & 1;
        basis.states.canonicalize(s);
        auto [idx, added] = basis.states.insert(s);
        if (added) {
            basis.origin.push_back(SubspaceBasis::Origin::GroundState);
            basis.pair_solutions.push_back({-1, -1});
        }
        auto& slot = flipped ? basis.pair_solutions[idx].second : basis.pair_solutions[idx].first;
        if (slot >= 0) throw InputError("duplicate configuration in solution set");
        slot = static_cast<int>(i);
    }
    for (const auto& [a, b] : basis.pair_solutions)
        if (a < 0 || b < 0) throw IntegrityError("solution set is not closed under global spin flip");
    if (level == 2) {
        const auto moves = driver.moves(n);
        const std::size_t ground = basis.ground_count();
        std::vector<std::uint64_t> t(basis.states.words());
        for (std::size_t g = 0; g < ground; ++g) {
            for (const auto& m : moves) {
                auto src = basis.states.state(g);
                std::copy(src.begin(), src.end(), t.begin());
                StateTable::flip(t, m.a);
                if (m.b >= 0) StateTable::flip(t, m.b);
                basis.states.canonicalize(t);
                if (basis.states.insert(t).second) {
                    basis.origin.push_back(SubspaceBasis::Origin::ExcitedReachable);
                    if (basis.states.size() > opts.dimension_cap)
                        throw ResourceError("subspace dimension exceeds cap of " + std::to_string(opts.dimension_cap));
                }
            }
        }
    }
    return basis;
}

// ---- restricted Hamiltonian ------------------------------------------------------

/// H(s) = (1-s) D + s diag(E) in the symmetric basis, with D the projected
/// driver in compressed-row form. Basis vectors 0..ground_count-1 are the
/// classical ground states.
struct RestrictedHamiltonian {
    std::size_t dimension = 0;
    std::size_t ground_count = 0;
    std::vector<double> diag;  // H_p eigenvalue of each basis vector
    std::vector<std::size_t> row_ptr{0};
    std::vector<int> cols;
    std::vector<double> vals;
    double s = 0.1;

    double diag_min() const { return diag.empty() ? 0.0 : *std::min_element(diag.begin(), diag.end()); }

    /// y = D x
    void apply_driver(std::span<const double> x, std::span<double> y) const {
        for (std::size_t r = 0; r < dimension; ++r) {
            double acc = 0;
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[cols[k]];
            y[r] = acc;
        }
    }

    /// y = H(s) x
    void apply(std::span<const double> x, std::span<double> y) const {
        apply_driver(x, y);
        for (std::size_t r = 0; r < dimension; ++r) y[r] = (1 - s) * y[r] + s * diag[r] * x[r];
    }

    double driver_entry(std::size_t r, std::size_t c) const {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (static_cast<std::size_t>(cols[k]) == c) return vals[k];
        return 0.0;
    }

    /// Dense H(s), for small problems and tests.
    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dimension, dimension);
        for (std::size_t r = 0; r < dimension; ++r) {
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, cols[k]) += (1 - s) * vals[k];
            m(r, r) += s * diag[r];
        }
        return m;
    }

    /// Plain symmetric matrix (ground_count = 0, s = 0.5, D = 2A - diag).
    static RestrictedHamiltonian from_dense(const Eigen::MatrixXd& a);
};

inline RestrictedHamiltonian RestrictedHamiltonian::from_dense(const Eigen::MatrixXd& a) {
    RestrictedHamiltonian h;
    h.dimension = static_cast<std::size_t>(a.rows());
    h.s = 0.5;
    h.diag.resize(h.dimension);
    for (std::size_t r = 0; r < h.dimension; ++r) {
        h.diag[r] = 2 * a(r, r);
        for (std::size_t c = 0; c < h.dimension; ++c) {
            if (c == r || a(r, c) == 0) continue;
            h.cols.push_back(static_cast<int>(c));
            h.vals.push_back(2 * a(r, c));
        }
        h.row_ptr.push_back(h.cols.size());
    }
    return h;
}

/// Matrix elements <B|H_d|A> = sum over moves t of w_t [rep(t a) = b]; this
/// picks up the sqrt(2) pair factors, including moves that land on a's own
/// complement (which then sit on the diagonal).
inline RestrictedHamiltonian restrict_hamiltonian(const IsingInstance& inst, const Driver& driver,
                                                  const SubspaceBasis& basis, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("interpolation parameter s must lie in [0, 1]");
    RestrictedHamiltonian h;
    h.dimension = basis.dimension();
    h.ground_count = basis.ground_count();
    h.s = s;
    h.diag.resize(h.dimension);
    const auto moves = driver.moves(inst.size());
    std::vector<std::uint64_t> t(basis.states.words());
    std::vector<std::pair<int, double>> row;
    for (std::size_t r = 0; r < h.dimension; ++r) {
        auto src = basis.states.state(r);
        h.diag[r] = static_cast<double>(state_energy(inst, src));
        row.clear();
        for (const auto& m : moves) {
            std::copy(src.begin(), src.end(), t.begin());
            StateTable::flip(t, m.a);
            if (m.b >= 0) StateTable::flip(t, m.b);
            basis.states.canonicalize(t);
            const int c = basis.states.find(t);
            if (c >= 0) row.emplace_back(c, m.weight);
        }
        std::sort(row.begin(), row.end());
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k > 0 && row[k].first == row[k - 1].first) {
                h.vals.back() += row[k].second;
                continue;
            }
            h.cols.push_back(row[k].first);
            h.vals.push_back(row[k].second);
        }
        h.row_ptr.push_back(h.cols.size());
    }
    return h;
}

// ---- Rayleigh quotient minimization ----------------------------------------------

struct RayleighOptions {
    double tol = 0;  // gradient-norm threshold; 0 means 1e-12 * dimension
    int max_iterations = 100'000;
    std::optional<std::vector<double>> start;
    bool record_history = false;
    bool ground_block_preconditioner = true;  // else Jacobi
};

struct RayleighResult {
    std::vector<double> vector;  // unit norm
    double value = 0;             // <x|H(s)|x>
    double gradient_norm = 0;     // of the scaled quotient at exit
    int iterations = 0;
    std::vector<double> history;  // scaled quotient per iteration
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline std::vector<double> random_unit(std::size_t n, Rng& rng) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        x[i] = r * std::cos(2 * M_PI * u2);
        if (i + 1 < n) x[i + 1] = r * std::sin(2 * M_PI * u2);
    }
    const double nx = norm(x);
    for (auto& v : x) v /= nx;
    return x;
}

/// The quotient is minimized for the affinely rescaled operator
///   K = D + mu (diag - min diag),  mu = s / (1 - s),
/// which has the same eigenvectors as H(s) but keeps the ground cluster at
/// O(1) scale as s -> 1. At s = 1 it is the diagonal alone.
class ScaledOperator {
public:
    explicit ScaledOperator(const RestrictedHamiltonian& h) : h_(h), shift_(h.diag_min()) {
        pure_diagonal_ = h.s >= 1.0;
        mu_ = pure_diagonal_ ? 1.0 : h.s / (1.0 - h.s);
        kdiag_.resize(h.dimension);
        for (std::size_t r = 0; r < h.dimension; ++r)
            kdiag_[r] = (pure_diagonal_ ? 0.0 : h.driver_entry(r, r)) + mu_ * (h.diag[r] - shift_);
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        if (pure_diagonal_) {
            for (std::size_t r = 0; r < x.size(); ++r) y[r] = (h_.diag[r] - shift_) * x[r];
            return;
        }
        h_.apply_driver(x, y);
        for (std::size_t r = 0; r < x.size(); ++r) y[r] += mu_ * (h_.diag[r] - shift_) * x[r];
    }

    /// <x|H(s)|x> from the scaled quotient.
    double unscale(double q) const {
        if (pure_diagonal_) return q + shift_;
        return (1.0 - h_.s) * q + h_.s * shift_;
    }

    const std::vector<double>& diagonal() const { return kdiag_; }
    double mu() const { return mu_; }
    bool pure_diagonal() const { return pure_diagonal_; }
    const RestrictedHamiltonian& hamiltonian() const { return h_; }

private:
    const RestrictedHamiltonian& h_;
    double shift_;
    double mu_ = 1.0;
    bool pure_diagonal_ = false;
    std::vector<double> kdiag_;
};

/// Approximate inverse of (K - theta) used to precondition the residual.
///
/// With ground vectors present it is a block factorization that keeps the
/// ground block exact and replaces the excited block by its diagonal: the
/// ground-block Schur complement S = D_PP - D_PQ A^-1 D_QP is diagonalized once,
/// so near-degenerate ground clusters split by higher orders are resolved in a
/// few iterations. Without ground vectors it is Jacobi.
class Preconditioner {
public:
    Preconditioner(const ScaledOperator& k, bool ground_block) : k_(k) {
        const auto& h = k.hamiltonian();
        ground_ = ground_block ? h.ground_count : 0;
        const std::size_t n = h.dimension;
        if (ground_ == 0 || k.pure_diagonal()) {
            ground_ = 0;
            return;
        }
        Eigen::MatrixXd dpp = Eigen::MatrixXd::Zero(ground_, ground_);
        for (std::size_t r = 0; r < ground_; ++r)
            for (std::size_t t = h.row_ptr[r]; t < h.row_ptr[r + 1]; ++t)
                if (static_cast<std::size_t>(h.cols[t]) < ground_) dpp(r, h.cols[t]) += h.vals[t];
        const double theta0 = ground_ > 0 ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dpp, Eigen::EigenvaluesOnly).eigenvalues()(0) : 0.0;
        inv_excited_.assign(n, 0.0);
        for (std::size_t q = ground_; q < n; ++q) inv_excited_[q] = 1.0 / std::max(k.diagonal()[q] - theta0, 1e-3);
        // coupling lists P -> Q
        coupling_.assign(ground_, {});
        for (std::size_t r = 0; r < ground_; ++r)
            for (std::size_t t = h.row_ptr[r]; t < h.row_ptr[r + 1]; ++t)
                if (static_cast<std::size_t>(h.cols[t]) >= ground_) coupling_[r].emplace_back(h.cols[t], h.vals[t]);
        Eigen::MatrixXd schur = dpp;
        for (std::size_t r = 0; r < ground_; ++r) schur(r, r) += k.diagonal()[r] - h.driver_entry(r, r);
        // sum over excited q of D_pq D_qp' / a_q, grouped by q
        std::unordered_map<int, std::vector<std::pair<int, double>>> by_excited;
        for (std::size_t r = 0; r < ground_; ++r)
            for (auto [q, w] : coupling_[r]) by_excited[q].emplace_back(static_cast<int>(r), w);
        for (const auto& [q, list] : by_excited)
            for (auto [p1, w1] : list)
                for (auto [p2, w2] : list) schur(p1, p2) -= w1 * w2 * inv_excited_[q];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur);
        const auto& e = eig.eigenvalues();
        const double gap = ground_ > 1 ? e(1) - e(0) : 1.0;
        const double spread = ground_ > 1 ? e(ground_ - 1) - e(0) : 1.0;
        const double delta = std::max(0.5 * gap, 1e-8 * (1.0 + spread + std::abs(e(0))));
        Eigen::VectorXd inv = (e.array() - e(0) + delta).inverse();
        // The lowest mode is essentially x itself near convergence; amplifying
        // it would only cost digits when the correction is orthogonalized.
        if (ground_ > 1) inv(0) = inv(1);
        ground_inverse_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    }

    void jacobi(std::span<const double> r, std::span<double> z, double theta) const {
        const auto& d = k_.diagonal();
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / (std::max(d[i] - theta, 0.0) + 1.0);
    }

    bool has_ground_block() const { return ground_ > 0; }

    void ground_block(std::span<const double> r, std::span<double> z) const {
        const std::size_t n = r.size();
        Eigen::VectorXd y(ground_);
        for (std::size_t p = 0; p < ground_; ++p) {
            double acc = r[p];
            for (auto [q, w] : coupling_[p]) acc -= w * inv_excited_[q] * r[q];
            y(p) = acc;
        }
        const Eigen::VectorXd zp = ground_inverse_ * y;
        for (std::size_t p = 0; p < ground_; ++p) z[p] = zp(p);
        for (std::size_t q = ground_; q < n; ++q) z[q] = r[q];
        for (std::size_t p = 0; p < ground_; ++p)
            for (auto [q, w] : coupling_[p]) z[q] -= w * zp(p);
        for (std::size_t q = ground_; q < n; ++q) z[q] *= inv_excited_[q];
    }

private:
    const ScaledOperator& k_;
    std::size_t ground_ = 0;
    std::vector<double> inv_excited_;
    std::vector<std::vector<std::pair<int, double>>> coupling_;
    Eigen::MatrixXd ground_inverse_;
};

/// Lowest eigenvector of a small symmetric matrix by cyclic Jacobi rotations.
/// Unlike QR with deflation, this keeps tiny couplings next to huge diagonal
/// entries, which carry the final corrections of the minimization.
inline Eigen::VectorXd lowest_eigenvector(Eigen::MatrixXd a) {
    const Eigen::Index m = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(m, m);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (Eigen::Index p = 0; p < m; ++p)
            for (Eigen::Index q = p + 1; q < m; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off == 0) break;
        for (Eigen::Index p = 0; p < m; ++p)
            for (Eigen::Index q = p + 1; q < m; ++q) {
                if (a(p, q) == 0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (Eigen::Index k = 0; k < m; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < m; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0;
                for (Eigen::Index k = 0; k < m; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < m; ++k)
        if (a(k, k) < a(best, best)) best = k;
    return v.col(best);
}

}  // namespace detail

/// Minimizes <x|H(s)|x> / <x|x> with a locally optimal preconditioned
/// conjugate-gradient iteration: each step is a Rayleigh-Ritz solve on
/// span{x, preconditioned residual, previous step}, so the quotient never
/// increases. Converged when |grad| = 2 |Kx - (x.Kx) x| < tol for the scaled
/// operator K.
inline RayleighResult minimize_rayleigh(const RestrictedHamiltonian& h, std::uint64_t seed,
                                        const RayleighOptions& opts = {}) {
    const std::size_t n = h.dimension;
    if (n == 0) throw InputError("cannot minimize over an empty subspace");
    const double tol = opts.tol > 0 ? opts.tol : 1e-12 * static_cast<double>(n);
    const detail::ScaledOperator k(h);
    const detail::Preconditioner precond(k, opts.ground_block_preconditioner);

    std::vector<double> x;
    if (opts.start) {
        x = *opts.start;
        if (x.size() != n) throw InputError("start vector has wrong dimension");
        const double nx = detail::norm(x);
        if (!(nx > 0)) throw InputError("start vector is zero");
        for (auto& v : x) v /= nx;
    } else {
        Rng rng = make_stream(seed, {0x5252});
        x = detail::random_unit(n, rng);
    }

    RayleighResult out;
    std::vector<double> kx(n), w(n), p, r(n);
    k.apply(x, kx);
    for (int it = 0;; ++it) {
        const double rho = detail::dot(x, kx);
        for (std::size_t i = 0; i < n; ++i) r[i] = kx[i] - rho * x[i];
        const double grad = 2 * detail::norm(r);
        if (opts.record_history) out.history.push_back(rho);
        out.value = k.unscale(rho);
        out.gradient_norm = grad;
        out.iterations = it;
        if (grad < tol || n == 1) break;
        if (it >= opts.max_iterations)
            throw NumericalError("Rayleigh minimization did not converge in " + std::to_string(opts.max_iterations) +
                                 " iterations (gradient norm " + ([&] { char b[32]; std::snprintf(b, sizeof b, "%.3g", grad); return std::string(b); })() + ", dimension " +
                                 std::to_string(n) + ")");

        // Orthonormal basis of span{x, preconditioned residuals, p} with images under K.
        std::vector<std::vector<double>> basis{x}, images{kx};
        auto add = [&](std::vector<double> v) {
            const double n0 = detail::norm(v);
            if (!(n0 > 0)) return;
            for (auto& e : v) e /= n0;
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : basis) {
                    const double c = detail::dot(b, v);
                    for (std::size_t i = 0; i < n; ++i) v[i] -= c * b[i];
                }
            const double nv = detail::norm(v);
            if (!(nv > 1e-14)) return;
            for (auto& e : v) e /= nv;
            std::vector<double> kv(n);
            k.apply(v, kv);
            basis.push_back(std::move(v));
            images.push_back(std::move(kv));
        };
        if (precond.has_ground_block()) {
            precond.ground_block(r, w);
            add(w);
        }
        precond.jacobi(r, w, rho);
        add(w);
        if (!p.empty()) add(p);
        const std::size_t m = basis.size();
        if (m == 1) break;  // residual numerically in span{x}
        Eigen::MatrixXd g(m, m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) g(a, b) = g(b, a) = detail::dot(basis[a], images[b]);
        Eigen::VectorXd c = detail::lowest_eigenvector(g);
        if (c(0) < 0) c = -c;
        std::vector<double> xn(n, 0.0), kxn(n, 0.0);
        p.assign(n, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t i = 0; i < n; ++i) {
                xn[i] += c(a) * basis[a][i];
                kxn[i] += c(a) * images[a][i];
                if (a > 0) p[i] += c(a) * basis[a][i];
            }
        const double nx = detail::norm(xn);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = xn[i] / nx;
            kx[i] = kxn[i] / nx;
        }
        k.apply(x, kx);
    }
    out.vector = std::move(x);
    return out;
}

struct DegeneracyCheck {
    bool degenerate = false;
    double overlap = 1;
    RayleighResult first;
    RayleighResult second;
};

inline constexpr double kOverlapDeficit = 1e-8;

/// Two minimizations from independent (mutually orthogonal) random starts;
/// the ground state is unique iff they agree up to sign.
inline DegeneracyCheck detect_degeneracy(const RestrictedHamiltonian& h, std::uint64_t seed,
                                         const RayleighOptions& base = {}) {
    DegeneracyCheck out;
    const std::size_t n = h.dimension;
    if (n == 0) throw InputError("cannot test degeneracy of an empty subspace");
    Rng rng = make_stream(seed, {0x4444});
    auto a = detail::random_unit(n, rng);
    auto b = detail::random_unit(n, rng);
    if (n > 1) {
        const double c = detail::dot(a, b);
        for (std::size_t i = 0; i < n; ++i) b[i] -= c * a[i];
        const double nb = detail::norm(b);
        for (auto& v : b) v /= nb;
    }
    RayleighOptions oa = base, ob = base;
    oa.start = std::move(a);
    ob.start = std::move(b);
    out.first = minimize_rayleigh(h, seed, oa);
    out.second = minimize_rayleigh(h, seed, ob);
    out.overlap = std::abs(detail::dot(out.first.vector, out.second.vector));
    out.degenerate = !(out.overlap > 1.0 - kOverlapDeficit);
    return out;
}

// ---- full pipeline ------------------------------------------------------------------

struct QuantumConfig {
    double s_star = 0.1;
    double eps = 1e-6;             // anneal ends at s = 1 - eps
    int steps_per_decade = 4;      // geometric grid in (1 - s)
    bool force_level2 = false;     // skip the level-1 shortcut
    std::uint64_t seed = 0;
    SubspaceOptions subspace;
    RayleighOptions rayleigh;
};

/// Probabilities below this are reported as exact zeros.
inline constexpr double kZeroProbability = 1e-12;

namespace detail {

inline std::vector<double> pair_weights(std::span<const double> x, std::size_t ground) {
    std::vector<double> w(ground);
    double total = 0;
    for (std::size_t g = 0; g < ground; ++g) total += w[g] = x[g] * x[g];
    for (auto& v : w) v /= total;
    return w;
}

inline Gsd distribute(const SubspaceBasis& basis, std::vector<double> pair_prob, std::size_t solution_count) {
    for (auto& v : pair_prob) v = std::max(v, 0.0);
    const double total = std::accumulate(pair_prob.begin(), pair_prob.end(), 0.0);
    std::vector<double> p(solution_count, 0.0);
    for (std::size_t g = 0; g < basis.ground_count(); ++g) {
        double v = pair_prob[g] / total / 2;
        if (v < kZeroProbability) v = 0;
        p[basis.pair_solutions[g].first] = v;
        p[basis.pair_solutions[g].second] = v;
    }
    return Gsd::exact(std::move(p));
}

}  // namespace detail

/// Ground-state distribution of the s -> 1 adiabatic ground state.
///
/// 1. Minimize over V_1^S at s*; if two random starts agree the state is
///    unique and, since H_p is constant on V_1, already the s -> 1 limit.
/// 2. Otherwise anneal over V_2^S from s* to 1 - eps on a grid geometric in
///    1 - s, warm-starting each minimization, and extrapolate the pair
///    probabilities linearly in 1 - s to s = 1.
/// Each symmetric pair's weight is split evenly between phi and phi-bar.
inline Gsd quantum_gsd(const IsingInstance& inst, const SolutionSet& solutions, const Driver& driver,
                       const QuantumConfig& cfg = {}) {
    if (!(cfg.s_star > 0 && cfg.s_star < 1)) throw InputError("s* must lie in (0, 1)");
    if (!(cfg.eps > 0 && cfg.eps < 1 - cfg.s_star)) throw InputError("eps must lie in (0, 1 - s*)");
    const SubspaceBasis v1 = build_subspace(inst, solutions, driver, 1, cfg.subspace);
    if (v1.dimension() == 1) {
        Gsd g = detail::distribute(v1, {1.0}, solutions.size());
        g.level = 1;
        g.s_used = cfg.s_star;
        return g;
    }
    if (!cfg.force_level2) {
        const auto h1 = restrict_hamiltonian(inst, driver, v1, cfg.s_star);
        const auto check = detect_degeneracy(h1, derive_seed(cfg.seed, {1}), cfg.rayleigh);
        if (!check.degenerate) {
            Gsd g = detail::distribute(v1, detail::pair_weights(check.first.vector, v1.ground_count()),
                                       solutions.size());
            g.level = 1;
            g.s_used = cfg.s_star;
            g.gradient_norm = std::max(check.first.gradient_norm, check.second.gradient_norm);
            return g;
        }
    }

    const SubspaceBasis v2 = build_subspace(inst, solutions, driver, 2, cfg.subspace);
    auto h = restrict_hamiltonian(inst, driver, v2, cfg.s_star);
    RayleighOptions ro = cfg.rayleigh;
    RayleighResult state = minimize_rayleigh(h, derive_seed(cfg.seed, {2}), ro);

    const double top = 1 - cfg.s_star;
    const int steps = std::max(1, static_cast<int>(std::ceil(cfg.steps_per_decade * std::log10(top / cfg.eps))));
    std::vector<double> gaps;  // 1 - s at each grid point
    for (int k = 1; k <= steps; ++k) gaps.push_back(top * std::pow(cfg.eps / top, static_cast<double>(k) / steps));
    gaps.back() = cfg.eps;
    std::vector<std::vector<double>> weights;
    for (double gap : gaps) {
        h.s = 1 - gap;
        ro.start = state.vector;
        state = minimize_rayleigh(h, derive_seed(cfg.seed, {3}), ro);
        weights.push_back(detail::pair_weights(state.vector, v2.ground_count()));
    }
    const auto check = detect_degeneracy(h, derive_seed(cfg.seed, {4}), cfg.rayleigh);
    if (check.degenerate)
        throw UnresolvedDegeneracy("ground state still degenerate in the level-2 subspace (overlap " +
                                   std::to_string(check.overlap) + ")");

    std::vector<double> limit = weights.back();
    if (weights.size() >= 2) {
        const double x1 = gaps[gaps.size() - 2], x2 = gaps.back();
        const auto& w1 = weights[weights.size() - 2];
        const auto& w2 = weights.back();
        for (std::size_t g = 0; g < limit.size(); ++g) limit[g] = w2[g] - (w1[g] - w2[g]) * x2 / (x1 - x2);
    }
    Gsd g = detail::distribute(v2, std::move(limit), solutions.size());
    g.level = 2;
    g.s_used = 1.0;
    g.gradient_norm = state.gradient_norm;
    return g;
}

}  // namespace gsd
