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
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gsd/errors.hpp"

namespace gsd {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;

/// Simple undirected graph with compact vertex ids 0..n-1.
///
/// Edges are stored once as (lo, hi) pairs in ascending lexicographic order and
/// adjacency lists are sorted. `original_index()` maps each vertex back to the
/// id it had before any removal (identity for freshly built graphs).
class Graph {
public:
    Graph() = default;

    Graph(int vertex_count, std::vector<Edge> edges) : n_(vertex_count) {
        if (vertex_count < 0) throw InputError("negative vertex count");
        for (auto& [a, b] : edges) {
            if (a < 0 || b < 0 || a >= n_ || b >= n_)
                throw InputError("edge endpoint out of range");
            if (a == b) throw InputError("self-loop on vertex " + std::to_string(a));
            if (a > b) std::swap(a, b);
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
            throw InputError("duplicate edge");
        edges_ = std::move(edges);
        adjacency_.assign(n_, {});
        for (auto [a, b] : edges_) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
        for (auto& row : adjacency_) std::sort(row.begin(), row.end());
        original_.resize(n_);
        for (int v = 0; v < n_; ++v) original_[v] = v;
    }

    int vertex_count() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    std::span<const Vertex> neighbors(Vertex v) const { return adjacency_.at(v); }
    int degree(Vertex v) const { return static_cast<int>(adjacency_.at(v).size()); }
    const std::vector<int>& original_index() const { return original_; }

    bool has_edge(Vertex a, Vertex b) const {
        if (a < 0 || b < 0 || a >= n_ || b >= n_) return false;
        const auto& row = adjacency_[a];
        return std::binary_search(row.begin(), row.end(), b);
    }

    friend bool operator==(const Graph& x, const Graph& y) {
        return x.n_ == y.n_ && x.edges_ == y.edges_;
    }

private:
    friend Graph remove_vertices(const Graph&, std::span<const Vertex>);

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<Vertex>> adjacency_;
    std::vector<int> original_;
};

/// Induced subgraph on the vertices not listed in `victims`, re-indexed
/// compactly in increasing order of the surviving ids.
inline Graph remove_vertices(const Graph& g, std::span<const Vertex> victims) {
    std::vector<char> dead(g.vertex_count(), 0);
    for (Vertex v : victims) {
        if (v < 0 || v >= g.vertex_count())
            throw InputError("cannot remove unknown vertex " + std::to_string(v));
        dead[v] = 1;
    }
    std::vector<int> remap(g.vertex_count(), -1);
    std::vector<int> original;
    int next = 0;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
        if (dead[v]) continue;
        remap[v] = next++;
        original.push_back(g.original_[v]);
    }
    std::vector<Edge> edges;
    for (auto [a, b] : g.edges()) {
        if (dead[a] || dead[b]) continue;
        edges.emplace_back(remap[a], remap[b]);
    }
    Graph out(next, std::move(edges));
    out.original_ = std::move(original);
    return out;
}

struct ChimeraSpec {
    int rows = 8;
    int cols = 8;
    int half_cell = 4;  // k: each unit cell is K_{k,k}
    std::vector<Vertex> dead_vertices;
};

/// Ideal-graph vertex id for cell (row, col), side 0 = left / 1 = right, offset t.
inline Vertex chimera_index(const ChimeraSpec& s, int row, int col, int side, int t) {
    return ((row * s.cols + col) * 2 + side) * s.half_cell + t;
}

/// Chimera graph C(m, n, k): a rows x cols grid of K_{k,k} unit cells. Left-half
/// vertices couple to the same offset in the cell below, right-half vertices to
/// the same offset in the cell to the right. Dead vertices are removed last.
inline Graph build_chimera(const ChimeraSpec& s) {
    if (s.rows < 1 || s.cols < 1 || s.half_cell < 1)
        throw InputError("chimera dimensions must be positive");
    const int k = s.half_cell;
    const int n = s.rows * s.cols * 2 * k;
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(s.rows) * s.cols * k * (k + 2));
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    edges.emplace_back(chimera_index(s, r, c, 0, a), chimera_index(s, r, c, 1, b));
            for (int t = 0; t < k; ++t) {
                if (r + 1 < s.rows)
                    edges.emplace_back(chimera_index(s, r, c, 0, t), chimera_index(s, r + 1, c, 0, t));
                if (c + 1 < s.cols)
                    edges.emplace_back(chimera_index(s, r, c, 1, t), chimera_index(s, r, c + 1, 1, t));
            }
        }
    }
    Graph ideal(n, std::move(edges));
    for (Vertex v : s.dead_vertices)
        if (v < 0 || v >= n)
            throw InputError("dead vertex " + std::to_string(v) + " outside chimera of " +
                             std::to_string(n) + " vertices");
    if (s.dead_vertices.empty()) return ideal;
    return remove_vertices(ideal, s.dead_vertices);
}

/// True when every vertex of positive degree lies in one connected component.
inline bool connected_on_support(const Graph& g) {
    Vertex start = -1;
    int support = 0;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
        if (g.degree(v) > 0) {
            ++support;
            if (start < 0) start = v;
        }
    }
    if (start < 0) return true;
    std::vector<char> seen(g.vertex_count(), 0);
    std::vector<Vertex> stack{start};
    seen[start] = 1;
    int reached = 0;
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        ++reached;
        for (Vertex w : g.neighbors(v))
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    return reached == support;
}

// Text format: "vertices <n>" then one "i j" line per edge in ascending order.

inline void write_graph(std::ostream& os, const Graph& g) {
    os << "vertices " << g.vertex_count() << '\n';
    for (auto [a, b] : g.edges()) os << a << ' ' << b << '\n';
}

inline Graph read_graph(std::istream& is) {
    std::string line, word;
    int n = -1;
    std::vector<Edge> edges;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> word >> n) || word != "vertices" || n < 0)
                throw InputError("graph file: expected 'vertices <n>' header");
            continue;
        }
        Vertex a, b;
        if (!(ls >> a >> b)) throw InputError("graph file: malformed edge line '" + line + "'");
        edges.emplace_back(a, b);
    }
    if (n < 0) throw InputError("graph file: missing header");
    return Graph(n, std::move(edges));
}

/// Whitespace-separated vertex ids, '#' comments allowed.
inline std::vector<Vertex> read_vertex_list(std::istream& is) {
    std::vector<Vertex> out;
    std::string line;
    while (std::getline(is, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Vertex v;
        while (ls >> v) out.push_back(v);
        if (!ls.eof()) throw InputError("vertex list: non-integer token");
    }
    return out;
}

}  // namespace gsd
