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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gsd/errors.hpp"

namespace gsd {

/// Distribution over the D ground states of one instance.
///
/// Empirical GSDs carry counts; `ground_hits` (the number of samples that landed
/// in the ground manifold) is the sample size used for statistics, `anneals`
/// the total including misses. Analytic GSDs carry exact probabilities plus
/// solver diagnostics.
struct Gsd {
    enum class Kind { Empirical, Analytic };

    Kind kind = Kind::Empirical;
    std::vector<std::uint64_t> counts;
    std::uint64_t anneals = 0;
    std::uint64_t ground_hits = 0;
    std::vector<double> probabilities;

    // analytic diagnostics
    double gradient_norm = 0;
    double s_used = 1;
    int level = 0;  // perturbative subspace order that resolved the state

    std::size_t size() const { return probabilities.size(); }
    bool analytic() const { return kind == Kind::Analytic; }

    static Gsd empirical(std::vector<std::uint64_t> counts, std::uint64_t anneals) {
        Gsd g;
        g.kind = Kind::Empirical;
        g.ground_hits = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
        if (g.ground_hits > anneals) throw InputError("ground hits exceed anneal count");
        g.anneals = anneals;
        g.probabilities.assign(counts.size(), 0.0);
        if (g.ground_hits > 0)
            for (std::size_t i = 0; i < counts.size(); ++i)
                g.probabilities[i] = static_cast<double>(counts[i]) / static_cast<double>(g.ground_hits);
        g.counts = std::move(counts);
        return g;
    }

    static Gsd exact(std::vector<double> probabilities) {
        Gsd g;
        g.kind = Kind::Analytic;
        double total = 0;
        for (double p : probabilities) {
            if (!(p >= 0) || !std::isfinite(p)) throw InputError("probabilities must be finite and non-negative");
            total += p;
        }
        if (!(total > 0)) throw InputError("probabilities sum to zero");
        for (double& p : probabilities) p /= total;
        g.probabilities = std::move(probabilities);
        return g;
    }
};

inline void write_gsd(std::ostream& os, const Gsd& g) {
    char buf[64];
    if (!g.analytic()) {
        os << "gsd " << g.size() << ' ' << g.anneals << ' ' << g.ground_hits << '\n';
        for (std::size_t i = 0; i < g.size(); ++i) os << i << ' ' << g.counts[i] << '\n';
        return;
    }
    os << "gsd " << g.size() << " 0 0 analytic\n";
    std::snprintf(buf, sizeof buf, "%.17g %.17g", g.gradient_norm, g.s_used);
    os << "residual " << buf << ' ' << g.level << '\n';
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", g.probabilities[i]);
        os << i << ' ' << buf << '\n';
    }
}

inline Gsd read_gsd(std::istream& is) {
    std::string line, tag, flag;
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {}
    std::istringstream hs(line);
    std::size_t d;
    std::uint64_t anneals, hits;
    if (!(hs >> tag >> d >> anneals >> hits) || tag != "gsd")
        throw InputError("gsd file: expected 'gsd <D> <N> <hits>' header");
    hs >> flag;
    const bool analytic = flag == "analytic";
    double grad = 0, s = 1;
    int level = 0;
    if (analytic) {
        if (!std::getline(is, line)) throw InputError("gsd file: missing residual line");
        std::istringstream rs(line);
        if (!(rs >> tag >> grad >> s >> level) || tag != "residual") throw InputError("gsd file: bad residual line");
    }
    std::vector<std::uint64_t> counts(d, 0);
    std::vector<double> probs(d, 0.0);
    std::vector<char> seen(d, 0);
    for (std::size_t t = 0; t < d; ++t) {
        if (!std::getline(is, line)) throw InputError("gsd file: fewer rows than declared");
        std::istringstream ls(line);
        std::size_t i;
        if (!(ls >> i) || i >= d || seen[i]) throw InputError("gsd file: bad solution index");
        seen[i] = 1;
        if (analytic ? !(ls >> probs[i]) : !(ls >> counts[i])) throw InputError("gsd file: bad value");
    }
    if (!analytic) {
        Gsd g = Gsd::empirical(std::move(counts), anneals);
        if (g.ground_hits != hits) throw InputError("gsd file: counts do not sum to ground hits");
        return g;
    }
    Gsd g = Gsd::exact(std::move(probs));
    g.gradient_norm = grad;
    g.s_used = s;
    g.level = level;
    return g;
}

}  // namespace gsd
