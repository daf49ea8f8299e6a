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

#include <array>
#include <cmath>

#include "gsd/sa_sampler.hpp"
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

// Exact law of the final state of the two-spin chain: uniform start, then per
// sweep a Metropolis update of spin 0 followed by spin 1. State index = mask.
std::array<double, 4> two_spin_chain(const IsingInstance& inst, const SaSchedule& sched) {
    std::array<double, 4> p{0.25, 0.25, 0.25, 0.25};
    auto e = [&](int m) { return oracle::direct_energy(inst, oracle::config_from_mask(m, 2)); };
    for (int t = 0; t < sched.sweeps; ++t) {
        const double beta = sched.beta(t);
        for (int v = 0; v < 2; ++v) {
            std::array<double, 4> q{};
            for (int m = 0; m < 4; ++m) {
                const int f = m ^ (1 << v);
                const double dE = static_cast<double>(e(f) - e(m));
                const double a = dE <= 0 ? 1.0 : std::exp(-beta * dE);
                q[f] += p[m] * a;
                q[m] += p[m] * (1 - a);
            }
            p = q;
        }
    }
    return p;
}

TEST(Schedule, LinearProfile) {
    const SaSchedule s{5, 0.0, 20.0};
    EXPECT_DOUBLE_EQ(s.beta(0), 0.0);
    EXPECT_DOUBLE_EQ(s.beta(2), 10.0);
    EXPECT_DOUBLE_EQ(s.beta(4), 20.0);
    EXPECT_THROW((SaSchedule{0, 0, 1}.validate()), InputError);
    EXPECT_THROW((SaSchedule{10, 2, 1}.validate()), InputError);
    EXPECT_THROW((SaSchedule{10, -1, 1}.validate()), InputError);
}

TEST(Metropolis, DetailedBalance) {
    Rng rng = make_stream(3, {});
    for (int k = 0; k < 1000; ++k) {
        const double beta = 20 * uniform01(rng);
        const Energy dE = static_cast<Energy>(uniform_index(rng, 41)) - 20;
        EXPECT_NEAR(acceptance(beta, dE) / acceptance(beta, -dE), std::exp(-beta * static_cast<double>(dE)),
                    1e-15 * std::exp(-beta * static_cast<double>(dE)));
    }
}

TEST(RunSa, ZeroCouplingIsUniform) {
    const IsingInstance free(Graph(3, {}), {});
    const int runs = 100000;
    std::array<int, 8> counts{};
    for (int r = 0; r < runs; ++r) ++counts[oracle::mask_of(run_sa(free, {7, 0.0, 20.0}, r))];
    const double mean = runs / 8.0, sigma = std::sqrt(runs * (1 / 8.0) * (7 / 8.0));
    for (int c : counts) EXPECT_LT(std::abs(c - mean), 4 * sigma);
}

TEST(RunSa, FerromagnetGroundStateWithHundredSweeps) {
    const auto inst = ferromagnet();
    const SaSchedule sched{100, 0.0, 20.0};
    const auto law = two_spin_chain(inst, sched);
    EXPECT_GE(law[0] + law[3], 0.99);
    int ground = 0;
    for (int seed = 0; seed < 10000; ++seed) {
        const auto s = run_sa(inst, sched, seed);
        ground += s[0] == s[1];
    }
    EXPECT_GE(ground, 9900);
}

TEST(RunSa, MatchesExactMarkovChain) {
    const auto inst = ferromagnet();
    for (const SaSchedule sched : {SaSchedule{2, 0.0, 0.6}, SaSchedule{3, 0.1, 1.0}}) {
        const auto law = two_spin_chain(inst, sched);
        const int runs = 100000;
        std::array<int, 4> counts{};
        for (int r = 0; r < runs; ++r) ++counts[oracle::mask_of(run_sa(inst, sched, 1000 + r))];
        for (int m = 0; m < 4; ++m) {
            const double sigma = std::sqrt(runs * law[m] * (1 - law[m]));
            EXPECT_LT(std::abs(counts[m] - runs * law[m]), 3 * sigma) << "state " << m;
        }
    }
}

TEST(RunSa, Reproducible) {
    const auto p = generate_planted(build_chimera({2, 2, 4, {}}), {1.0, 12, 1000}, 1);
    for (auto order : {SweepOrder::Sequential, SweepOrder::RandomPermutation})
        for (std::uint64_t seed = 0; seed < 5; ++seed)
            EXPECT_EQ(run_sa(p.instance, {50, 0, 20}, seed, order), run_sa(p.instance, {50, 0, 20}, seed, order));
}

TEST(SampleGsd, ZeroAnneals) {
    const auto inst = ferromagnet();
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    const Gsd g = sample_gsd(inst, sol, {10, 0, 20}, 0, 1);
    EXPECT_EQ(g.ground_hits, 0u);
    EXPECT_EQ(g.anneals, 0u);
    EXPECT_EQ(g.counts, (std::vector<std::uint64_t>{0, 0}));
}

TEST(SampleGsd, FerromagnetSplitsEvenly) {
    const auto inst = ferromagnet();
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    const std::uint64_t n = 20000;
    const Gsd g = sample_gsd(inst, sol, {100, 0, 20}, n, 5);
    ASSERT_EQ(g.counts.size(), 2u);
    const double hits = static_cast<double>(g.ground_hits);
    EXPECT_GE(hits, 0.99 * n);
    EXPECT_LT(std::abs(static_cast<double>(g.counts[0]) - hits / 2), 4 * std::sqrt(hits / 4));
}

TEST(SampleGsd, ComplementPairsSymmetric) {
    const Graph g = remove_vertices(build_chimera({2, 2, 2, {}}), std::vector<Vertex>{3, 12});
    int instances = 0;
    for (std::uint64_t seed = 0; instances < 2; ++seed) {
        const auto p = generate_planted(g, {0.6, 12, 1000}, seed);
        const auto bf = oracle::brute_force_ground_states(p.instance);
        if (bf.ground_masks.size() < 6) continue;
        ++instances;
        const auto sol = solutions_from_masks(p.instance, bf);
        const Gsd gsd = sample_gsd(p.instance, sol, {32, 0, 20}, 100000, seed);
        const std::uint64_t all = (1u << 14) - 1;
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const auto j = std::lower_bound(bf.ground_masks.begin(), bf.ground_masks.end(), bf.ground_masks[i] ^ all) -
                           bf.ground_masks.begin();
            if (static_cast<std::size_t>(j) < i) continue;
            const double a = gsd.counts[i], b = gsd.counts[j];
            EXPECT_LE(std::abs(a - b), 4 * std::sqrt(a + b) + 1e-9);
        }
    }
}

TEST(SampleGsd, ThreadCountDoesNotChangeCounts) {
    const auto p = generate_planted(build_chimera({2, 2, 4, {}}), {1.0, 12, 1000}, 4);
    const auto sol = enumerate_planted(p, {}, 4);
    const Gsd one = sample_gsd(p.instance, sol, {64, 0, 20}, 999, 21, {SweepOrder::Sequential, 1});
    const Gsd four = sample_gsd(p.instance, sol, {64, 0, 20}, 999, 21, {SweepOrder::Sequential, 4});
    EXPECT_EQ(one.counts, four.counts);
    EXPECT_EQ(one.ground_hits, four.ground_hits);
}

TEST(SampleGsd, IntegrityErrors) {
    const auto inst = ferromagnet();
    auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    auto missing = sol;
    missing.solutions.pop_back();
    EXPECT_THROW(sample_gsd(inst, missing, {100, 0, 20}, 200, 1), IntegrityError);
    SolutionSet wrong;
    wrong.ground_energy = 1;
    wrong.solutions = {{1, -1}, {-1, 1}};
    EXPECT_THROW(sample_gsd(inst, wrong, {100, 0, 20}, 200, 1), IntegrityError);
    auto truncated = sol;
    truncated.truncated = true;
    EXPECT_THROW(sample_gsd(inst, truncated, {100, 0, 20}, 10, 1), InputError);
}

TEST(SampleGsd, EnergiesNeverBelowGround) {
    const Graph g = build_chimera({3, 3, 4, {}});
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto p = generate_planted(g, {1.0, 12, 1000}, seed);
        for (std::uint64_t a = 0; a < 200; ++a)
            EXPECT_GE(energy(p.instance, run_sa(p.instance, {128, 0, 20}, a)), p.ground_energy);
    }
}

TEST(Tts, Examples) {
    EXPECT_DOUBLE_EQ(time_to_solution(100, 500, 500), 100.0);
    EXPECT_TRUE(std::isinf(time_to_solution(100, 0, 500)));
    EXPECT_EQ(pow2_grid(4, 6), (std::vector<int>{16, 32, 64}));
    const auto inst = ferromagnet();
    const auto sol = solutions_from_masks(inst, oracle::brute_force_ground_states(inst));
    EXPECT_THROW(tts_curve(inst, sol, {32, 16}, 10, 1), InputError);
}

TEST(Tts, ZeroCouplingPairIsFlat) {
    const IsingInstance free(Graph(2, {}), {});
    const auto sol = solutions_from_masks(free, oracle::brute_force_ground_states(free));
    ASSERT_EQ(sol.size(), 4u);
    const std::uint64_t n = 40000;
    const auto table = tts_curve(free, sol, {4, 8, 16}, n, 3);
    for (std::size_t k = 0; k < table.sweeps.size(); ++k) {
        const double sweeps = table.sweeps[k];
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const double p = sweeps / table.tts[i][k];
            EXPECT_LT(std::abs(p - 0.25), 4 * std::sqrt(0.25 * 0.75 / n));
        }
    }
}

// Per-solution probabilities draw together as the anneal lengthens.
TEST(Tts, LongAnnealsEqualizeProbabilities) {
    const Graph g = remove_vertices(build_chimera({2, 2, 2, {}}), std::vector<Vertex>{3, 12});
    const auto p = generate_planted(g, {1.0, 12, 1000}, 3);
    const auto sol = solutions_from_masks(p.instance, oracle::brute_force_ground_states(p.instance));
    ASSERT_EQ(sol.size(), 6u);
    auto spread = [&](int sweeps, std::uint64_t anneals) {
        const Gsd gsd = sample_gsd(p.instance, sol, {sweeps, 0, 20}, anneals, 1);
        const auto [lo, hi] = std::minmax_element(gsd.probabilities.begin(), gsd.probabilities.end());
        return *hi / *lo;
    };
    const double short_run = spread(16, 4000), long_run = spread(4096, 2000);
    EXPECT_GT(short_run, 5.0);
    EXPECT_LT(long_run, 2.5);
}

TEST(Tts, OptimalSweepsMinimizesGroundStateTime) {
    const auto p = generate_planted(build_chimera({2, 2, 4, {}}), {1.0, 12, 1000}, 2);
    const auto sol = enumerate_planted(p, {}, 2);
    const auto grid = pow2_grid(2, 7);
    const int best = optimal_sweeps(p.instance, sol, grid, 2000, 8);
    const auto table = tts_curve(p.instance, sol, grid, 2000, 8);
    double best_tts = INFINITY;
    int arg = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = time_to_solution(grid[k], table.gsds[k].ground_hits, 2000);
        if (t < best_tts) {
            best_tts = t;
            arg = grid[k];
        }
    }
    EXPECT_EQ(best, arg);
}

}  // namespace
}  // namespace gsd
