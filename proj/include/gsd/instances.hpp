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
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gsd/errors.hpp"
#include "gsd/rng.hpp"
#include "gsd/topology.hpp"

namespace gsd {

using Energy = std::int64_t;
using Spin = std::int8_t;
/// One entry per vertex, each +1 or -1.
using SpinConfig = std::vector<Spin>;

struct Coupling {
    Vertex i;
    Vertex j;
    int value;

    friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// Ising cost function  E(s) = sum_<ij> J_ij s_i s_j + sum_i h_i s_i
/// with integer couplings living on edges of `graph`.
class IsingInstance {
public:
    IsingInstance() = default;

    IsingInstance(Graph graph, std::vector<Coupling> couplings, std::vector<int> fields = {})
        : graph_(std::move(graph)), couplings_(std::move(couplings)), fields_(std::move(fields)) {
        const int n = graph_.vertex_count();
        if (fields_.empty()) fields_.assign(n, 0);
        if (static_cast<int>(fields_.size()) != n)
            throw InputError("field vector length does not match vertex count");
        for (auto& c : couplings_) {
            if (c.i > c.j) std::swap(c.i, c.j);
            if (!graph_.has_edge(c.i, c.j))
                throw InputError("coupling on non-edge (" + std::to_string(c.i) + "," +
                                 std::to_string(c.j) + ")");
        }
        std::sort(couplings_.begin(), couplings_.end(),
                  [](const Coupling& a, const Coupling& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
        for (std::size_t t = 1; t < couplings_.size(); ++t)
            if (couplings_[t].i == couplings_[t - 1].i && couplings_[t].j == couplings_[t - 1].j)
                throw InputError("duplicate coupling");
        incident_.assign(n, {});
        for (const auto& c : couplings_) {
            if (c.value == 0) continue;
            incident_[c.i].push_back({c.j, c.value});
            incident_[c.j].push_back({c.i, c.value});
        }
    }

    int size() const { return graph_.vertex_count(); }
    const Graph& graph() const { return graph_; }
    const std::vector<Coupling>& couplings() const { return couplings_; }
    const std::vector<int>& fields() const { return fields_; }
    bool has_fields() const {
        return std::any_of(fields_.begin(), fields_.end(), [](int h) { return h != 0; });
    }

    struct Neighbor {
        Vertex vertex;
        int value;
    };
    const std::vector<Neighbor>& incident(Vertex v) const { return incident_[v]; }

    friend bool operator==(const IsingInstance& a, const IsingInstance& b) {
        return a.size() == b.size() && a.couplings_ == b.couplings_ && a.fields_ == b.fields_;
    }

private:
    Graph graph_;
    std::vector<Coupling> couplings_;
    std::vector<int> fields_;
    std::vector<std::vector<Neighbor>> incident_;
};

inline void check_length(const IsingInstance& inst, const SpinConfig& s) {
    if (static_cast<int>(s.size()) != inst.size())
        throw InputError("configuration length " + std::to_string(s.size()) +
                         " does not match instance size " + std::to_string(inst.size()));
}

inline Energy energy(const IsingInstance& inst, const SpinConfig& s) {
    check_length(inst, s);
    Energy e = 0;
    for (const auto& c : inst.couplings()) e += Energy{c.value} * s[c.i] * s[c.j];
    const auto& h = inst.fields();
    for (int v = 0; v < inst.size(); ++v) e += Energy{h[v]} * s[v];
    return e;
}

/// energy(s with spin v flipped) - energy(s), from v's incident couplings only.
inline Energy delta_energy(const IsingInstance& inst, const SpinConfig& s, Vertex v) {
    if (v < 0 || v >= inst.size()) throw InputError("flip vertex out of range");
    Energy local = inst.fields()[v];
    for (const auto& nb : inst.incident(v)) local += Energy{nb.value} * s[nb.vertex];
    return -2 * Energy{s[v]} * local;
}

inline SpinConfig global_flip(SpinConfig s) {
    for (auto& x : s) x = static_cast<Spin>(-x);
    return s;
}

/// A frustrated loop: couplings on a simple cycle, minimized by the planted
/// configuration with exactly one unsatisfied edge.
struct LocalTerm {
    std::vector<Vertex> support;  // cycle order
    std::vector<Coupling> couplings;
    Energy min_energy = 0;

    Energy energy(const SpinConfig& s) const {
        Energy e = 0;
        for (const auto& c : couplings) e += Energy{c.value} * s[c.i] * s[c.j];
        return e;
    }
};

struct PlantedInstance {
    IsingInstance instance;
    std::vector<LocalTerm> terms;
    SpinConfig planted;
    Energy ground_energy = 0;
};

struct PlantingParams {
    double clause_density = 1.0;  // loops per vertex
    int loop_length_limit = 12;
    int retry_budget = 1000;  // random walks per loop before giving up
};

namespace detail {

// Non-backtracking random walk until it bites its own tail; returns the cycle
// or an empty vector if the walk closed on an unusable cycle.
inline std::vector<Vertex> random_cycle(const Graph& g, const std::vector<Vertex>& starts, Rng& rng) {
    std::vector<Vertex> path{starts[uniform_index(rng, starts.size())]};
    std::vector<int> position(g.vertex_count(), -1);
    position[path[0]] = 0;
    while (true) {
        const Vertex here = path.back();
        const Vertex prev = path.size() > 1 ? path[path.size() - 2] : -1;
        auto nbrs = g.neighbors(here);
        std::vector<Vertex> options;
        options.reserve(nbrs.size());
        for (Vertex w : nbrs)
            if (w != prev) options.push_back(w);
        if (options.empty()) return {};
        const Vertex next = options[uniform_index(rng, options.size())];
        if (position[next] >= 0) return {path.begin() + position[next], path.end()};
        position[next] = static_cast<int>(path.size());
        path.push_back(next);
    }
}

}  // namespace detail

/// Planted-solution instance built from ceil(density * N) frustrated loops.
///
/// Each loop is a simple even cycle of length 4..loop_length_limit found by a
/// non-backtracking random walk. All loop edges get J = -s_i s_j (satisfied by
/// the planted s) except one random edge with J = +s_i s_j. Loop couplings are
/// summed edge-wise, so the planted configuration minimizes every loop and its
/// energy sum_j (2 - L_j) is the ground energy.
inline PlantedInstance generate_planted(const Graph& graph, const PlantingParams& params,
                                        std::uint64_t seed) {
    const int n = graph.vertex_count();
    if (!(params.clause_density >= 0.0) || !std::isfinite(params.clause_density))
        throw InputError("clause density must be a non-negative number");
    if (params.loop_length_limit < 4) throw InputError("loop length limit must be at least 4");
    const auto loops = static_cast<long>(std::ceil(params.clause_density * n - 1e-9));

    Rng rng = make_stream(seed, {0x706c616e74});
    PlantedInstance out;
    out.planted.resize(n);
    for (auto& s : out.planted) s = (rng() >> 63) ? Spin{1} : Spin{-1};

    if (loops > 0) {
        if (n < 4 || graph.edge_count() < 4) throw InputError("graph too small for a length-4 cycle");
        if (!connected_on_support(graph)) throw InputError("graph is not connected on its support");
    }
    std::vector<Vertex> starts;
    for (Vertex v = 0; v < n; ++v)
        if (graph.degree(v) >= 2) starts.push_back(v);
    if (loops > 0 && starts.empty()) throw InputError("graph has no cycles");

    std::map<Edge, int> summed;
    const auto& s = out.planted;
    for (long t = 0; t < loops; ++t) {
        std::vector<Vertex> cycle;
        for (int attempt = 0;; ++attempt) {
            if (attempt >= params.retry_budget)
                throw GenerationError("random walk failed to close an admissible loop after " +
                                      std::to_string(params.retry_budget) + " attempts");
            cycle = detail::random_cycle(graph, starts, rng);
            const auto len = static_cast<int>(cycle.size());
            if (len >= 4 && len <= params.loop_length_limit && len % 2 == 0) break;
        }
        const auto len = cycle.size();
        const auto frustrated = uniform_index(rng, len);
        LocalTerm term;
        term.support = cycle;
        for (std::size_t e = 0; e < len; ++e) {
            Vertex a = cycle[e], b = cycle[(e + 1) % len];
            int value = -s[a] * s[b];
            if (e == frustrated) value = -value;
            if (a > b) std::swap(a, b);
            term.couplings.push_back({a, b, value});
            summed[{a, b}] += value;
        }
        term.min_energy = 2 - static_cast<Energy>(len);
        out.ground_energy += term.min_energy;
        out.terms.push_back(std::move(term));
    }

    std::vector<Coupling> couplings;
    for (auto [edge, value] : summed)
        if (value != 0) couplings.push_back({edge.first, edge.second, value});
    out.instance = IsingInstance(graph, std::move(couplings));
    return out;
}

// ---- text formats --------------------------------------------------------

inline void write_instance(std::ostream& os, const IsingInstance& inst) {
    os << "ising " << inst.size() << '\n';
    for (const auto& c : inst.couplings()) os << "c " << c.i << ' ' << c.j << ' ' << c.value << '\n';
    for (int v = 0; v < inst.size(); ++v)
        if (inst.fields()[v] != 0) os << "f " << v << ' ' << inst.fields()[v] << '\n';
}

/// The graph of a parsed instance is the support of its couplings.
inline IsingInstance read_instance(std::istream& is) {
    std::string line, tag;
    int n = -1;
    std::vector<Coupling> couplings;
    std::vector<int> fields;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> tag;
        if (n < 0) {
            if (tag != "ising" || !(ls >> n) || n < 0)
                throw InputError("instance file: expected 'ising <N>' header");
            fields.assign(n, 0);
            continue;
        }
        if (tag == "c") {
            Coupling c{};
            if (!(ls >> c.i >> c.j >> c.value)) throw InputError("instance file: bad coupling line");
            couplings.push_back(c);
        } else if (tag == "f") {
            int v, h;
            if (!(ls >> v >> h) || v < 0 || v >= n) throw InputError("instance file: bad field line");
            fields[v] = h;
        } else {
            throw InputError("instance file: unknown record '" + tag + "'");
        }
    }
    if (n < 0) throw InputError("instance file: missing header");
    std::vector<Edge> edges;
    for (const auto& c : couplings) edges.emplace_back(c.i, c.j);
    return IsingInstance(Graph(n, std::move(edges)), std::move(couplings), std::move(fields));
}

inline void write_spins(std::ostream& os, const SpinConfig& s) {
    for (std::size_t v = 0; v < s.size(); ++v) os << (v ? " " : "") << int{s[v]};
    os << '\n';
}

inline SpinConfig parse_spins(const std::string& line, std::size_t expected) {
    std::istringstream ls(line);
    SpinConfig s;
    int x;
    while (ls >> x) {
        if (x != 1 && x != -1) throw InputError("spin token must be 1 or -1");
        s.push_back(static_cast<Spin>(x));
    }
    if (s.size() != expected) throw InputError("spin row has wrong length");
    return s;
}

/// "planted <N> <ground_energy>" followed by one row of +-1 tokens.
inline void write_planted(std::ostream& os, const PlantedInstance& p) {
    os << "planted " << p.planted.size() << ' ' << p.ground_energy << '\n';
    write_spins(os, p.planted);
}

inline std::pair<SpinConfig, Energy> read_planted(std::istream& is) {
    std::string line, tag;
    std::size_t n = 0;
    Energy e = 0;
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {}
    std::istringstream hs(line);
    if (!(hs >> tag >> n >> e) || tag != "planted") throw InputError("planted file: bad header");
    if (!std::getline(is, line)) throw InputError("planted file: missing spin row");
    return {parse_spins(line, n), e};
}

/// One block per loop: "term <L> <min_energy>", "support ...", then "c i j J" lines.
inline void write_terms(std::ostream& os, const std::vector<LocalTerm>& terms) {
    for (const auto& t : terms) {
        os << "term " << t.support.size() << ' ' << t.min_energy << "\nsupport";
        for (Vertex v : t.support) os << ' ' << v;
        os << '\n';
        for (const auto& c : t.couplings) os << "c " << c.i << ' ' << c.j << ' ' << c.value << '\n';
    }
}

inline std::vector<LocalTerm> read_terms(std::istream& is) {
    std::vector<LocalTerm> terms;
    std::string line, tag;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> tag;
        if (tag == "term") {
            LocalTerm t;
            std::size_t len;
            if (!(ls >> len >> t.min_energy)) throw InputError("term file: bad term header");
            terms.push_back(std::move(t));
        } else if (terms.empty()) {
            throw InputError("term file: record before first term header");
        } else if (tag == "support") {
            Vertex v;
            while (ls >> v) terms.back().support.push_back(v);
        } else if (tag == "c") {
            Coupling c{};
            if (!(ls >> c.i >> c.j >> c.value)) throw InputError("term file: bad coupling");
            terms.back().couplings.push_back(c);
        } else {
            throw InputError("term file: unknown record '" + tag + "'");
        }
    }
    return terms;
}

}  // namespace gsd
