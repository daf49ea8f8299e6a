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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "gsd/distribution.hpp"
#include "gsd/enumerator.hpp"
#include "gsd/instances.hpp"
#include "gsd/rng.hpp"

namespace gsd {

/// Linear inverse-temperature ramp, updated after every sweep.
struct SaSchedule {
    int sweeps = 1000;
    double beta_min = 0.0;
    double beta_max = 20.0;

    void validate() const {
        if (sweeps < 1) throw InputError("schedule needs at least one sweep");
        if (!(beta_min >= 0) || !(beta_max > beta_min)) throw InputError("schedule needs 0 <= beta_min < beta_max");
    }
    double beta(int sweep) const {
        if (sweeps == 1) return beta_min;
        return beta_min + sweep * (beta_max - beta_min) / (sweeps - 1);
    }
};

enum class SweepOrder { Sequential, RandomPermutation };

/// Metropolis acceptance min(1, exp(-beta * dE)).
inline double acceptance(double beta, Energy delta) {
    return delta <= 0 ? 1.0 : std::exp(-beta * static_cast<double>(delta));
}

/// One anneal from a uniformly random start.
inline SpinConfig run_sa(const IsingInstance& inst, const SaSchedule& schedule, std::uint64_t seed,
                         SweepOrder order = SweepOrder::Sequential) {
    schedule.validate();
    Rng rng = make_stream(seed, {0x5341});
    const int n = inst.size();
    SpinConfig s(n);
    for (auto& x : s) x = (rng() >> 63) ? Spin{1} : Spin{-1};

    // local[v] = h_v + sum_j J_vj s_j, so flipping v costs -2 s_v local[v]
    std::vector<Energy> local(n);
    Energy max_delta = 0;
    for (Vertex v = 0; v < n; ++v) {
        Energy l = inst.fields()[v], reach = std::abs(inst.fields()[v]);
        for (const auto& nb : inst.incident(v)) {
            l += Energy{nb.value} * s[nb.vertex];
            reach += std::abs(nb.value);
        }
        local[v] = l;
        max_delta = std::max(max_delta, 2 * reach);
    }
    // flip costs are even, so the table is indexed by delta / 2
    std::vector<double> boltzmann(static_cast<std::size_t>(max_delta / 2) + 1);
    std::vector<Vertex> visit(n);
    for (Vertex v = 0; v < n; ++v) visit[v] = v;

    for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
        const double beta = schedule.beta(sweep);
        const double q = std::exp(-2 * beta);
        boltzmann[0] = 1.0;
        for (std::size_t d = 1; d < boltzmann.size(); ++d) boltzmann[d] = boltzmann[d - 1] * q;
        if (order == SweepOrder::RandomPermutation)
            for (int i = n - 1; i > 0; --i) std::swap(visit[i], visit[uniform_index(rng, i + 1)]);
        for (Vertex v : visit) {
            const Energy delta = -2 * Energy{s[v]} * local[v];
            if (delta > 0 && uniform01(rng) >= boltzmann[delta / 2]) continue;
            s[v] = static_cast<Spin>(-s[v]);
            const Energy step = 2 * Energy{s[v]};
            for (const auto& nb : inst.incident(v)) local[nb.vertex] += nb.value * step;
        }
    }
    return s;
}

/// Lookup from configuration to solution index.
class SolutionIndex {
public:
    explicit SolutionIndex(const SolutionSet& set) {
        for (std::size_t i = 0; i < set.size(); ++i) index_.emplace(key(set.solutions[i]), static_cast<int>(i));
    }
    int find(const SpinConfig& s) const {
        auto it = index_.find(key(s));
        return it == index_.end() ? -1 : it->second;
    }

private:
    static std::string key(const SpinConfig& s) { return {reinterpret_cast<const char*>(s.data()), s.size()}; }
    std::unordered_map<std::string, int> index_;
};

struct SaOptions {
    SweepOrder order = SweepOrder::Sequential;
    int threads = 1;
};

/// Runs `anneals` independent anneals (stream per anneal index) and counts how
/// often each known ground state is returned.
inline Gsd sample_gsd(const IsingInstance& inst, const SolutionSet& solutions, const SaSchedule& schedule,
                      std::uint64_t anneals, std::uint64_t seed, const SaOptions& opts = {}) {
    if (solutions.truncated) throw InputError("SA sampling needs a complete solution set");
    schedule.validate();
    const SolutionIndex index(solutions);
    const int threads = std::max(1, opts.threads);
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(solutions.size(), 0));
    std::vector<std::string> failure(threads);
    auto work = [&](int t) {
        const std::uint64_t lo = anneals * t / threads, hi = anneals * (t + 1) / threads;
        for (std::uint64_t a = lo; a < hi; ++a) {
            const SpinConfig s = run_sa(inst, schedule, derive_seed(seed, {a}), opts.order);
            const Energy e = energy(inst, s);
            if (e < solutions.ground_energy) {
                failure[t] = "SA found energy " + std::to_string(e) + " below the enumerated ground energy " +
                             std::to_string(solutions.ground_energy);
                return;
            }
            if (e == solutions.ground_energy) {
                const int i = index.find(s);
                if (i < 0) {
                    failure[t] = "SA found a ground-energy configuration missing from the solution set";
                    return;
                }
                ++partial[t][i];
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failure)
        if (!f.empty()) throw IntegrityError(f);
    std::vector<std::uint64_t> counts(solutions.size(), 0);
    for (const auto& p : partial)
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p[i];
    return Gsd::empirical(std::move(counts), anneals);
}

/// Per-solution time to solution, sweeps / p_i with p_i = n_i / anneals.
struct TtsTable {
    std::vector<int> sweeps;
    std::vector<Gsd> gsds;  // one per sweeps value
    std::vector<std::vector<double>> tts;  // [solution][sweep index], +inf when never hit

    std::size_t solutions() const { return tts.size(); }
};

inline double time_to_solution(int sweeps, std::uint64_t hits, std::uint64_t anneals) {
    if (hits == 0) return std::numeric_limits<double>::infinity();
    return sweeps * static_cast<double>(anneals) / static_cast<double>(hits);
}

inline TtsTable tts_curve(const IsingInstance& inst, const SolutionSet& solutions, const std::vector<int>& sweeps_list,
                          std::uint64_t anneals, std::uint64_t seed, const SaOptions& opts = {},
                          double beta_min = 0.0, double beta_max = 20.0) {
    if (!std::is_sorted(sweeps_list.begin(), sweeps_list.end()) ||
        std::adjacent_find(sweeps_list.begin(), sweeps_list.end()) != sweeps_list.end())
        throw InputError("sweeps grid must be strictly ascending");
    TtsTable table;
    table.sweeps = sweeps_list;
    table.tts.assign(solutions.size(), std::vector<double>(sweeps_list.size()));
    for (std::size_t k = 0; k < sweeps_list.size(); ++k) {
        const SaSchedule schedule{sweeps_list[k], beta_min, beta_max};
        Gsd g = sample_gsd(inst, solutions, schedule, anneals, derive_seed(seed, {std::uint64_t(k)}), opts);
        for (std::size_t i = 0; i < solutions.size(); ++i)
            table.tts[i][k] = time_to_solution(sweeps_list[k], g.counts[i], anneals);
        table.gsds.push_back(std::move(g));
    }
    return table;
}

/// Powers of two 2^lo .. 2^hi.
inline std::vector<int> pow2_grid(int lo, int hi) {
    std::vector<int> out;
    for (int e = lo; e <= hi; ++e) out.push_back(1 << e);
    return out;
}

/// Sweep count on `grid` minimizing sweeps / P(any ground state): the optimizer
/// regime. Returns the grid's last entry if no point ever reaches the ground.
inline int optimal_sweeps(const IsingInstance& inst, const SolutionSet& solutions, const std::vector<int>& grid,
                          std::uint64_t anneals, std::uint64_t seed, const SaOptions& opts = {}) {
    if (grid.empty()) throw InputError("empty sweep grid");
    const TtsTable table = tts_curve(inst, solutions, grid, anneals, seed, opts);
    int best = grid.back();
    double best_tts = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = time_to_solution(grid[k], table.gsds[k].ground_hits, anneals);
        if (t < best_tts) {
            best_tts = t;
            best = grid[k];
        }
    }
    return best;
}

}  // namespace gsd
