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

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <set>

#include "ed_oracle.hpp"
#include "gsd/quantum_gs.hpp"
#include "gsd/topology.hpp"
#include "oracles.hpp"

namespace gsd {
namespace {

SolutionSet solutions_from_masks(const IsingInstance& inst, const oracle::BruteForceResult& bf) {
    SolutionSet out;
    out.ground_energy = bf.ground_energy;
    for (auto m : bf.ground_masks) out.solutions.push_back(oracle::config_from_mask(m, inst.size()));
    return out;
}

IsingInstance ferromagnet() { return IsingInstance(Graph(2, {{0, 1}}), {{0, 1, -1}}); }

Graph fourteen_spin_graph() { return remove_vertices(build_chimera({2, 2, 2, {}}), std::vector<Vertex>{3, 12}); }

// Dense H(s) on the full 2^N space.
Eigen::MatrixXd full_hamiltonian(const IsingInstance& inst, int xx_sign, double s) {
    const int n = inst.size();
    const std::size_t dim = std::size_t{1} << n;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t m = 0; m < dim; ++m) {
        h(m, m) += s * static_cast<double>(oracle::direct_energy(inst, oracle::config_from_mask(m, n)));
        for (int v = 0; v < n; ++v) h(m ^ (std::size_t{1} << v), m) += -(1 - s);
        if (xx_sign != 0)
            for (const auto& c : inst.couplings())
                h(m ^ (std::size_t{1} << c.i) ^ (std::size_t{1} << c.j), m) += (1 - s) * xx_sign * c.value;
    }
    return h;
}

std::uint64_t mask_of_state(std::span<const std::uint64_t> s) { return s[0]; }

double tv(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / 2;
}

struct Fixture {
    PlantedInstance planted;
    oracle::BruteForceResult bf;
    SolutionSet solutions;
};

std::vector<Fixture> degenerate_fixtures(double density, int wanted, std::uint64_t first_seed = 0) {
    const Graph g = fourteen_spin_graph();
    std::vector<Fixture> out;
    for (std::uint64_t seed = first_seed; static_cast<int>(out.size()) < wanted; ++seed) {
        Fixture f;
        f.planted = generate_planted(g, {density, 12, 1000}, seed);
        f.bf = oracle::brute_force_ground_states(f.planted.instance);
        if (f.bf.ground_masks.size() <= 2) continue;
        f.solutions = solutions_from_masks(f.planted.instance, f.bf);
        out.push_back(std::move(f));
    }
    return out;
}

// ---- drivers and subspaces ---------------------------------------------------------------

TEST(Driver, NonStoquasticGlobalSign) {
    const Graph g = fourteen_spin_graph();
    const auto p = generate_planted(g, {1.0, 12, 1000}, 3);
    std::set<int> signs;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        const Driver d = non_stoquastic(p.instance, seed);
        ASSERT_EQ(d.xx.size(), p.instance.couplings().size());
        for (std::size_t e = 0; e < d.xx.size(); ++e) {
            EXPECT_EQ(d.xx[e].value, d.sign * p.instance.couplings()[e].value);
            EXPECT_EQ(std::abs(d.xx[e].value), std::abs(p.instance.couplings()[e].value));
        }
        signs.insert(d.sign);
    }
    EXPECT_EQ(signs.size(), 2u);
    const Driver per_edge = non_stoquastic(p.instance, 5, true);
    std::set<int> ratios;
    for (std::size_t e = 0; e < per_edge.xx.size(); ++e)
        ratios.insert(per_edge.xx[e].value / p.instance.couplings()[e].value);
    EXPECT_EQ(ratios.size(), 2u);
}

TEST(Subspace, FerromagnetBases) {
    const auto inst = ferromagnet();
    const auto bf = oracle::brute_force_ground_states(inst);
    const auto sol = solutions_from_masks(inst, bf);
    const auto v1 = build_subspace(inst, sol, transverse_field(), 1);
    EXPECT_EQ(v1.dimension(), 1u);
    const auto v2 = build_subspace(inst, sol, transverse_field(), 2);
    EXPECT_EQ(v2.dimension(), 2u);
    EXPECT_EQ(v2.origin[1], SubspaceBasis::Origin::ExcitedReachable);
}

TEST(Subspace, FerromagnetMatrixAgainstFullDiagonalization) {
    const auto inst = ferromagnet();
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    const auto v2 = build_subspace(inst, sol, transverse_field(), 2);
    for (double s : {0.0, 0.1, 0.37, 0.9, 1.0}) {
        const auto h = restrict_hamiltonian(inst, transverse_field(), v2, s);
        const Eigen::MatrixXd m = h.dense();
        EXPECT_DOUBLE_EQ(m(0, 0), -s);
        EXPECT_DOUBLE_EQ(m(0, 1), -(1 - s) * 2);
        EXPECT_DOUBLE_EQ(m(1, 0), -(1 - s) * 2);
        EXPECT_DOUBLE_EQ(m(1, 1), s);
        const double sub = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues()(0);
        const double full =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(full_hamiltonian(inst, 0, s)).eigenvalues()(0);
        EXPECT_NEAR(sub, full, 1e-12) << "s=" << s;
    }
}

TEST(Subspace, LevelTwoContainsExactlyOneMoveNeighbours) {
    const Graph g = remove_vertices(build_chimera({1, 2, 3, {}}), std::vector<Vertex>{1, 8});
    ASSERT_EQ(g.vertex_count(), 10);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 6 && seed < 200; ++seed) {
        PlantedInstance p;
        try {
            p = generate_planted(g, {0.6, 10, 1000}, seed);
        } catch (const GenerationError&) {
            continue;
        }
        const auto bf = oracle::brute_force_ground_states(p.instance);
        const auto sol = solutions_from_masks(p.instance, bf);
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(p.instance, seed) : transverse_field();
            const auto basis = build_subspace(p.instance, sol, d, 2);
            const int n = p.instance.size();
            const std::uint64_t all = (std::uint64_t{1} << n) - 1;
            std::set<std::uint64_t> ground(bf.ground_masks.begin(), bf.ground_masks.end()), expected;
            for (auto gm : ground) {
                expected.insert(gm);
                for (int v = 0; v < n; ++v) expected.insert(gm ^ (std::uint64_t{1} << v));
                for (const auto& c : d.xx)
                    if (c.value != 0) expected.insert(gm ^ (std::uint64_t{1} << c.i) ^ (std::uint64_t{1} << c.j));
            }
            std::set<std::uint64_t> got;
            for (std::size_t i = 0; i < basis.dimension(); ++i) {
                const std::uint64_t m = mask_of_state(basis.states.state(i));
                EXPECT_EQ(m & 1, 0u);
                got.insert(m);
                got.insert(m ^ all);
                EXPECT_EQ(basis.origin[i] == SubspaceBasis::Origin::GroundState, ground.count(m) == 1);
            }
            EXPECT_EQ(got, expected);
        }
        ++checked;
    }
    EXPECT_EQ(checked, 6);
}

// Every matrix element against <u_B| H(s) |u_A> with u = (e_a + e_abar)/sqrt(2) in the full space.
TEST(Subspace, RestrictedMatrixMatchesFullSpaceProjection) {
    const Graph g = remove_vertices(build_chimera({1, 1, 4, {}}), std::vector<Vertex>{});
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto p = generate_planted(g, {0.8, 8, 1000}, seed);
        const auto sol = solutions_from_masks(p.instance, oracle::brute_force_ground_states(p.instance));
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(p.instance, seed) : transverse_field();
            const auto basis = build_subspace(p.instance, sol, d, 2);
            const double s = 0.3;
            const auto h = restrict_hamiltonian(p.instance, d, basis, s);
            const Eigen::MatrixXd full = full_hamiltonian(p.instance, ns ? d.sign : 0, s);
            const std::size_t dim = basis.dimension();
            Eigen::MatrixXd u = Eigen::MatrixXd::Zero(full.rows(), dim);
            const std::uint64_t all = 0xff;
            for (std::size_t i = 0; i < dim; ++i) {
                const auto m = mask_of_state(basis.states.state(i));
                u(m, i) = u(m ^ all, i) = 1 / std::sqrt(2.0);
            }
            const Eigen::MatrixXd proj = u.transpose() * full * u;
            EXPECT_LT((proj - h.dense()).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Subspace, TransverseFieldHasNoHammingTwoEntries) {
    const auto p = generate_planted(fourteen_spin_graph(), {0.7, 12, 1000}, 2);
    const auto sol = solutions_from_masks(p.instance, oracle::brute_force_ground_states(p.instance));
    const auto basis = build_subspace(p.instance, sol, transverse_field(), 2);
    const auto h = restrict_hamiltonian(p.instance, transverse_field(), basis, 0.5);
    const std::uint64_t all = (std::uint64_t{1} << 14) - 1;
    int pairs = 0;
    for (std::size_t a = 0; a < basis.dimension(); ++a)
        for (std::size_t b = 0; b < basis.dimension(); ++b) {
            const auto ma = mask_of_state(basis.states.state(a)), mb = mask_of_state(basis.states.state(b));
            const int dist = std::min(__builtin_popcountll(ma ^ mb), __builtin_popcountll(ma ^ mb ^ all));
            if (dist == 2) {
                ++pairs;
                EXPECT_EQ(h.driver_entry(a, b), 0.0);
            }
            if (dist == 1) EXPECT_NE(h.driver_entry(a, b), 0.0);
        }
    EXPECT_GT(pairs, 0);
}

TEST(Subspace, Errors) {
    const auto inst = ferromagnet();
    auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    EXPECT_THROW(build_subspace(inst, sol, transverse_field(), 3), InputError);
    IsingInstance with_field(Graph(2, {{0, 1}}), {{0, 1, -1}}, {1, 0});
    EXPECT_THROW(build_subspace(with_field, sol, transverse_field(), 1), InputError);
    auto truncated = sol;
    truncated.truncated = true;
    EXPECT_THROW(build_subspace(inst, truncated, transverse_field(), 1), InputError);
    auto half = sol;
    half.solutions.pop_back();
    EXPECT_THROW(build_subspace(inst, half, transverse_field(), 1), IntegrityError);
    const auto p = generate_planted(fourteen_spin_graph(), {0.7, 12, 1000}, 2);
    const auto psol = solutions_from_masks(p.instance, oracle::brute_force_ground_states(p.instance));
    EXPECT_THROW(build_subspace(p.instance, psol, transverse_field(), 2, {4}), ResourceError);
    const auto v1 = build_subspace(inst, sol, transverse_field(), 1);
    EXPECT_THROW(restrict_hamiltonian(inst, transverse_field(), v1, 1.5), InputError);
}

// ---- minimization ------------------------------------------------------------------------

Eigen::MatrixXd random_sparse_symmetric(int n, std::uint64_t seed, double density) {
    Rng rng = make_stream(seed, {9});
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 8 * uniform01(rng) - 4;
        for (int j = i + 1; j < n; ++j)
            if (uniform01(rng) < density) a(i, j) = a(j, i) = 2 * uniform01(rng) - 1;
    }
    return a;
}

TEST(Minimize, MatchesDenseEigensolver) {
    for (int n : {1, 2, 3, 7, 40, 300, 2000}) {
        const Eigen::MatrixXd a = random_sparse_symmetric(n, n, n > 100 ? 8.0 / n : 0.4);
        const auto h = RestrictedHamiltonian::from_dense(a);
        const double lowest = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
        const auto r = minimize_rayleigh(h, 17);
        EXPECT_NEAR(r.value, lowest, 1e-10) << "n=" << n;
        EXPECT_NEAR(detail::norm(r.vector), 1.0, 1e-12);
    }
}

TEST(Minimize, RestrictedHamiltoniansMatchDenseEigensolver) {
    for (const auto& f : degenerate_fixtures(0.6, 4)) {
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(f.planted.instance, 1) : transverse_field();
            const auto basis = build_subspace(f.planted.instance, f.solutions, d, 2);
            for (double s : {0.1, 0.5, 0.9, 0.999}) {
                const auto h = restrict_hamiltonian(f.planted.instance, d, basis, s);
                const double lowest =
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h.dense(), Eigen::EigenvaluesOnly).eigenvalues()(0);
                EXPECT_NEAR(minimize_rayleigh(h, 3).value, lowest, 1e-10);
            }
        }
    }
}

TEST(Minimize, DimensionOneAndDiagonal) {
    Eigen::MatrixXd one(1, 1);
    one << 3.5;
    const auto r1 = minimize_rayleigh(RestrictedHamiltonian::from_dense(one), 1);
    ASSERT_EQ(r1.vector.size(), 1u);
    EXPECT_DOUBLE_EQ(std::abs(r1.vector[0]), 1.0);
    EXPECT_DOUBLE_EQ(r1.value, 3.5);

    const Eigen::MatrixXd diag = Eigen::Vector4d(2.0, -1.0, 0.5, 4.0).asDiagonal();
    const auto r = minimize_rayleigh(RestrictedHamiltonian::from_dense(diag), 5);
    EXPECT_NEAR(std::abs(r.vector[1]), 1.0, 1e-12);
    for (int i : {0, 2, 3}) EXPECT_NEAR(r.vector[i], 0.0, 1e-12);
}

TEST(Minimize, QuotientNeverIncreases) {
    const auto fs = degenerate_fixtures(0.6, 3);
    for (const auto& f : fs) {
        const auto basis = build_subspace(f.planted.instance, f.solutions, transverse_field(), 2);
        for (double s : {0.1, 0.99999}) {
            const auto h = restrict_hamiltonian(f.planted.instance, transverse_field(), basis, s);
            RayleighOptions opts;
            opts.record_history = true;
            const auto r = minimize_rayleigh(h, 8, opts);
            ASSERT_GE(r.history.size(), 1u);
            for (std::size_t i = 1; i < r.history.size(); ++i)
                EXPECT_LE(r.history[i], r.history[i - 1] + 1e-13 * (1 + std::abs(r.history[i - 1])));
        }
    }
    const auto a = random_sparse_symmetric(400, 4, 0.02);
    RayleighOptions opts;
    opts.record_history = true;
    const auto r = minimize_rayleigh(RestrictedHamiltonian::from_dense(a), 2, opts);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        EXPECT_LE(r.history[i], r.history[i - 1] + 1e-13 * (1 + std::abs(r.history[i - 1])));
}

TEST(Minimize, IterationCapRaises) {
    const auto a = random_sparse_symmetric(300, 6, 0.05);
    RayleighOptions opts;
    opts.max_iterations = 2;
    EXPECT_THROW(minimize_rayleigh(RestrictedHamiltonian::from_dense(a), 1, opts), NumericalError);
}

TEST(Minimize, WarmStartIsDeterministic) {
    const auto a = random_sparse_symmetric(80, 2, 0.1);
    const auto h = RestrictedHamiltonian::from_dense(a);
    const auto r1 = minimize_rayleigh(h, 42), r2 = minimize_rayleigh(h, 42);
    EXPECT_EQ(r1.vector, r2.vector);
}

// ---- degeneracy detection ----------------------------------------------------------------

TEST(Degeneracy, Examples) {
    Eigen::MatrixXd one(1, 1);
    one << 0.0;
    EXPECT_FALSE(detect_degeneracy(RestrictedHamiltonian::from_dense(one), 1).degenerate);
    EXPECT_TRUE(detect_degeneracy(RestrictedHamiltonian::from_dense(Eigen::MatrixXd::Zero(2, 2)), 1).degenerate);
}

TEST(Degeneracy, AgreesWithDenseGapTest) {
    int degenerate = 0, unique = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const int n = 12 + static_cast<int>(seed % 5) * 7;
        Rng rng = make_stream(seed, {2});
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = uniform01(rng) - 0.5;
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
        Eigen::VectorXd e(n);
        for (int i = 0; i < n; ++i) e(i) = 1 + i + uniform01(rng);
        e(0) = 0;
        e(1) = seed % 2 ? 0.0 : 0.05;
        const Eigen::MatrixXd a = q * e.asDiagonal() * q.transpose();
        const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues();
        const bool oracle_degenerate = ev(1) - ev(0) < 1e-9;
        EXPECT_EQ(detect_degeneracy(RestrictedHamiltonian::from_dense(a), seed).degenerate, oracle_degenerate);
        (oracle_degenerate ? degenerate : unique)++;
    }
    EXPECT_GT(degenerate, 0);
    EXPECT_GT(unique, 0);
}

// ---- pipeline ------------------------------------------------------------------------------

TEST(QuantumGsd, FerromagnetIsEvenSplit) {
    const auto inst = ferromagnet();
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    for (int ns = 0; ns < 2; ++ns) {
        const Gsd g = quantum_gsd(inst, sol, ns ? non_stoquastic(inst, 1) : transverse_field());
        ASSERT_EQ(g.size(), 2u);
        EXPECT_DOUBLE_EQ(g.probabilities[0], 0.5);
        EXPECT_DOUBLE_EQ(g.probabilities[1], 0.5);
        EXPECT_TRUE(g.analytic());
    }
}

// Ground vector of the driver projected on the flip-symmetric ground combinations,
// built from full-space vectors.
std::vector<double> projected_driver_gsd(const IsingInstance& inst, const oracle::BruteForceResult& bf, int xx_sign) {
    const int n = inst.size();
    const std::uint64_t all = (std::uint64_t{1} << n) - 1;
    const Eigen::MatrixXd hd = full_hamiltonian(inst, xx_sign, 0.0);
    std::vector<std::uint64_t> reps;
    for (auto m : bf.ground_masks)
        if (!(m & 1)) reps.push_back(m);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(hd.rows(), reps.size());
    for (std::size_t k = 0; k < reps.size(); ++k) u(reps[k], k) = u(reps[k] ^ all, k) = 1 / std::sqrt(2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(u.transpose() * hd * u);
    std::vector<double> p(bf.ground_masks.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto m = bf.ground_masks[i] & 1 ? bf.ground_masks[i] ^ all : bf.ground_masks[i];
        const auto k = std::find(reps.begin(), reps.end(), m) - reps.begin();
        p[i] = eig.eigenvectors()(k, 0) * eig.eigenvectors()(k, 0) / 2;
    }
    return p;
}

TEST(QuantumGsd, LevelOneEqualsProjectedDriverGroundState) {
    const Graph g = remove_vertices(build_chimera({1, 2, 3, {}}), std::vector<Vertex>{1, 8});
    int level_one = 0;
    for (std::uint64_t seed = 0; seed < 60 && level_one < 8; ++seed) {
        PlantedInstance p;
        try {
            p = generate_planted(g, {0.6, 10, 1000}, seed);
        } catch (const GenerationError&) {
            continue;
        }
        const auto bf = oracle::brute_force_ground_states(p.instance);
        if (bf.ground_masks.size() <= 2) continue;
        const auto sol = solutions_from_masks(p.instance, bf);
        const Gsd q = quantum_gsd(p.instance, sol, transverse_field());
        if (q.level != 1) continue;
        ++level_one;
        EXPECT_LT(tv(q.probabilities, projected_driver_gsd(p.instance, bf, 0)), 1e-9);
    }
    EXPECT_GE(level_one, 4);
}

TEST(QuantumGsd, NormalizedAndPairSymmetric) {
    for (const auto& f : degenerate_fixtures(0.7, 10)) {
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(f.planted.instance, 1) : transverse_field();
            Gsd q;
            try {
                q = quantum_gsd(f.planted.instance, f.solutions, d);
            } catch (const UnresolvedDegeneracy&) {
                continue;
            }
            double total = 0;
            for (double v : q.probabilities) total += v;
            EXPECT_NEAR(total, 1.0, 1e-10);
            const std::uint64_t all = (std::uint64_t{1} << 14) - 1;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const auto it = std::lower_bound(f.bf.ground_masks.begin(), f.bf.ground_masks.end(),
                                                 f.bf.ground_masks[i] ^ all);
                EXPECT_EQ(q.probabilities[i], q.probabilities[it - f.bf.ground_masks.begin()]);
            }
        }
    }
}

TEST(QuantumGsd, LevelTwoReproducesLevelOne) {
    int compared = 0;
    for (const auto& f : degenerate_fixtures(1.0, 12)) {
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(f.planted.instance, 1) : transverse_field();
            Gsd q1;
            try {
                q1 = quantum_gsd(f.planted.instance, f.solutions, d);
            } catch (const UnresolvedDegeneracy&) {
                continue;
            }
            if (q1.level != 1) continue;
            QuantumConfig cfg;
            cfg.force_level2 = true;
            const Gsd q2 = quantum_gsd(f.planted.instance, f.solutions, d, cfg);
            EXPECT_EQ(q2.level, 2);
            EXPECT_LT(tv(q1.probabilities, q2.probabilities), 1e-6);
            ++compared;
        }
    }
    EXPECT_GE(compared, 10);
}

TEST(QuantumGsd, MatchesExactDiagonalization) {
    int levels[3] = {0, 0, 0};
    for (const auto& f : degenerate_fixtures(0.8, 12, 100)) {
        for (int ns = 0; ns < 2; ++ns) {
            const Driver d = ns ? non_stoquastic(f.planted.instance, 11) : transverse_field();
            Gsd q;
            try {
                q = quantum_gsd(f.planted.instance, f.solutions, d);
            } catch (const UnresolvedDegeneracy&) {
                continue;
            }
            ++levels[q.level];
            const auto ed = oracle::ed_ground_distribution(f.planted.instance, f.bf.ground_masks, 1e-6 / (1 - 1e-6),
                                                           ns ? d.sign : 0);
            EXPECT_LT(tv(q.probabilities, ed.probabilities), 1e-6);
        }
    }
    EXPECT_GT(levels[1], 0);
    EXPECT_GT(levels[2], 0);
}

TEST(QuantumGsd, PersistentDegeneracyIsReported) {
    // Two disconnected ferromagnetic chains of four spins: the ground pairs
    // differ by four flips, beyond what the level-2 subspace can connect.
    const Graph g(8, {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}, {6, 7}});
    std::vector<Coupling> cs;
    for (const auto& [i, j] : g.edges()) cs.push_back({i, j, -1});
    const IsingInstance inst(g, cs);
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    ASSERT_EQ(sol.size(), 4u);
    EXPECT_THROW(quantum_gsd(inst, sol, transverse_field()), UnresolvedDegeneracy);
}

TEST(QuantumGsd, Deterministic) {
    const auto fs = degenerate_fixtures(0.7, 3);
    for (const auto& f : fs) {
        QuantumConfig cfg;
        cfg.seed = 9;
        try {
            const Gsd a = quantum_gsd(f.planted.instance, f.solutions, transverse_field(), cfg);
            const Gsd b = quantum_gsd(f.planted.instance, f.solutions, transverse_field(), cfg);
            EXPECT_EQ(a.probabilities, b.probabilities);
        } catch (const UnresolvedDegeneracy&) {
        }
    }
}

TEST(QuantumGsd, AnalyticFileRoundTrip) {
    const auto f = degenerate_fixtures(1.0, 1).front();
    const Gsd q = quantum_gsd(f.planted.instance, f.solutions, transverse_field());
    std::stringstream ss;
    write_gsd(ss, q);
    const Gsd back = read_gsd(ss);
    EXPECT_TRUE(back.analytic());
    EXPECT_EQ(back.level, q.level);
    ASSERT_EQ(back.size(), q.size());
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(back.probabilities[i], q.probabilities[i], 1e-16);
}

}  // namespace
}  // namespace gsd
