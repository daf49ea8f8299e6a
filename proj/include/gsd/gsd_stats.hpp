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

// Comparing ground-state distributions: chi-squared distances between
// sampled and/or analytic GSDs, a bootstrapped significance test, and the
// bias of a GSD relative to the flat distribution.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gsd/distribution.hpp"
#include "gsd/errors.hpp"
#include "gsd/rng.hpp"

namespace gsd {

inline void check_same_space(const Gsd& a, const Gsd& b) {
    if (a.size() != b.size())
        throw InputError("GSDs index different solution sets (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + " solutions)");
}

inline void check_sampled(const Gsd& g) {
    if (g.analytic()) throw InputError("expected a sampled GSD");
    if (g.ground_hits == 0) throw InputError("sampled GSD has no ground-state hits");
}

/// Returned by the one-sided distance when a sampled state has zero analytic
/// probability: the distributions certainly differ.
inline constexpr double kCertainDifference = std::numeric_limits<double>::infinity();

/// Squared chi-squared distance between two sampled GSDs, N = ground hits.
/// Indices never hit by either sample contribute nothing.
inline double chi2_distance_sq(const Gsd& a, const Gsd& b) {
    check_same_space(a, b);
    check_sampled(a);
    check_sampled(b);
    const double n1 = static_cast<double>(a.ground_hits), n2 = static_cast<double>(b.ground_hits);
    const double r12 = std::sqrt(n1 / n2), r21 = std::sqrt(n2 / n1);
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a.counts[i]), y = static_cast<double>(b.counts[i]);
        if (x + y == 0) continue;
        const double d = r12 * y - r21 * x;
        acc += d * d / (x + y);
    }
    return acc;
}

/// Limit of chi2_distance_sq as the second sample becomes infinite.
inline double chi2_one_sided_sq(const Gsd& sampled, const Gsd& analytic) {
    check_same_space(sampled, analytic);
    check_sampled(sampled);
    const double n = static_cast<double>(sampled.ground_hits);
    double acc = 0;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const double expect = n * analytic.probabilities[i];
        const double x = static_cast<double>(sampled.counts[i]);
        if (expect == 0) {
            if (x > 0) return kCertainDifference;
            continue;
        }
        acc += (expect - x) * (expect - x) / expect;
    }
    return acc;
}

inline double total_variation(const Gsd& a, const Gsd& b) {
    check_same_space(a, b);
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.probabilities[i] - b.probabilities[i]);
    return acc / 2;
}

/// Analytic pairs closer than this in total variation count as identical.
inline constexpr double kAnalyticIdentity = 1e-9;

/// The distance used by the significance test for this pair of kinds.
inline double gsd_distance(const Gsd& a, const Gsd& b) {
    if (a.analytic() && b.analytic()) return total_variation(a, b);
    if (b.analytic()) return chi2_one_sided_sq(a, b);
    if (a.analytic()) return chi2_one_sided_sq(b, a);
    return chi2_distance_sq(a, b);
}

struct TestResult {
    double statistic = 0;
    double p_value = 1;
    std::uint64_t n_bootstrap = 0;
    std::uint64_t exceed = 0;           // synthetic distances >= observed
    bool below_resolution = false;      // p < 1 / n_bootstrap
    bool exact = false;                 // analytic vs analytic, no sampling
    double asymptotic_p = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Multinomial draw by sequential conditional binomials.
inline std::vector<std::uint64_t> multinomial(std::uint64_t n, const std::vector<double>& p, Rng& rng) {
    std::vector<std::uint64_t> out(p.size(), 0);
    std::size_t last = p.size();
    while (last > 0 && !(p[last - 1] > 0)) --last;
    if (last == 0) return out;
    --last;  // receives whatever the binomials leave
    double rest = 1.0;
    for (std::size_t i = 0; i < last && n > 0; ++i) {
        if (p[i] <= 0) continue;
        const double q = rest > 0 ? std::min(1.0, p[i] / rest) : 1.0;
        std::binomial_distribution<std::uint64_t> draw(n, q);
        out[i] = draw(rng);
        n -= out[i];
        rest -= p[i];
    }
    out[last] += n;
    return out;
}

inline Gsd synthetic(std::uint64_t n, const std::vector<double>& p, Rng& rng) {
    return Gsd::empirical(multinomial(n, p, rng), n);
}

}  // namespace detail

/// Bootstrapped test of "both GSDs come from one distribution". The null is
/// the pooled estimate; each replicate redraws the sampled sides with their
/// own N (an analytic side stays fixed) and recomputes the distance. The
/// p-value is the fraction of replicates at least as far apart as observed.
inline TestResult bootstrap_ks(const Gsd& a, const Gsd& b, std::uint64_t n_bootstrap, std::uint64_t seed,
                               int threads = 1) {
    check_same_space(a, b);
    TestResult out;
    out.statistic = gsd_distance(a, b);
    if (a.analytic() && b.analytic()) {
        out.exact = true;
        out.p_value = out.statistic <= kAnalyticIdentity ? 1.0 : 0.0;
        return out;
    }
    if (n_bootstrap == 0) throw InputError("bootstrap needs at least one replicate");
    const std::size_t d = a.size();
    std::vector<double> pooled(d);
    if (a.analytic() || b.analytic()) {
        pooled = a.analytic() ? a.probabilities : b.probabilities;
    } else {
        const double total = static_cast<double>(a.ground_hits + b.ground_hits);
        for (std::size_t i = 0; i < d; ++i)
            pooled[i] = static_cast<double>(a.counts[i] + b.counts[i]) / total;
    }
    const Gsd null_analytic = Gsd::exact(pooled);

    threads = std::max(1, threads);
    std::vector<std::uint64_t> exceed(threads, 0);
    auto work = [&](int t) {
        const std::uint64_t lo = n_bootstrap * t / threads, hi = n_bootstrap * (t + 1) / threads;
        for (std::uint64_t r = lo; r < hi; ++r) {
            Rng rng = make_stream(seed, {r});
            const Gsd sa = a.analytic() ? null_analytic : detail::synthetic(a.ground_hits, pooled, rng);
            const Gsd sb = b.analytic() ? null_analytic : detail::synthetic(b.ground_hits, pooled, rng);
            if (gsd_distance(sa, sb) >= out.statistic) ++exceed[t];
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    out.n_bootstrap = n_bootstrap;
    for (auto e : exceed) out.exceed += e;
    out.p_value = static_cast<double>(out.exceed) / static_cast<double>(n_bootstrap);
    out.below_resolution = out.exceed == 0;

    std::size_t support = 0;
    for (double p : pooled) support += p > 0;
    if (support <= 1)
        out.asymptotic_p = 1.0;
    else if (std::isinf(out.statistic))
        out.asymptotic_p = 0.0;
    else
        out.asymptotic_p = boost::math::gamma_q(0.5 * static_cast<double>(support - 1), 0.5 * out.statistic);
    return out;
}

/// Normalized L1 distance from the flat distribution: 0 flat, 1 point mass.
inline double bias(const std::vector<double>& p) {
    const std::size_t d = p.size();
    if (d < 2) throw InputError("bias is undefined for a single ground state");
    double total = 0, acc = 0;
    for (double v : p) total += v;
    if (!(std::abs(total - 1) < 1e-9)) throw InputError("bias needs a normalized distribution");
    // Summing |D p_i - 1| keeps both endpoints exact: a point mass gives the
    // integer 2(D - 1). Entries equal to the rounded 1/D count as flat.
    const double dd = static_cast<double>(d);
    const double flat = 1.0 / dd;
    for (double v : p)
        if (v != flat) acc += std::abs(std::fma(dd, v, -1.0));
    return acc / (2.0 * (dd - 1.0));
}

inline double bias(const Gsd& g) { return bias(g.probabilities); }

/// Weighted mixture of probability vectors (equal weights by default).
inline Gsd combine_gsds(const std::vector<Gsd>& parts, std::vector<double> weights = {}) {
    if (parts.empty()) throw InputError("nothing to combine");
    if (weights.empty()) weights.assign(parts.size(), 1.0 / static_cast<double>(parts.size()));
    if (weights.size() != parts.size()) throw InputError("one weight per GSD required");
    double wsum = 0;
    for (double w : weights) {
        if (!(w >= 0)) throw InputError("weights must be non-negative");
        wsum += w;
    }
    if (!(std::abs(wsum - 1) < 1e-12)) throw InputError("weights must sum to 1");
    std::vector<double> mix(parts.front().size(), 0.0);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        check_same_space(parts.front(), parts[k]);
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += weights[k] * parts[k].probabilities[i];
    }
    Gsd out;
    out.kind = Gsd::Kind::Analytic;
    out.probabilities = std::move(mix);
    return out;
}

// ---- ensemble summary -----------------------------------------------------------------

struct Comparison {
    std::string instance_id;
    std::string method_a;
    std::string method_b;
    TestResult test;
    double bias_a = 0;
    double bias_b = 0;
    double bias_combined = 0;
};

struct PairSummary {
    std::string method_a;
    std::string method_b;
    std::size_t instances = 0;
    std::size_t flagged = 0;
    double flagged_fraction = 0;
    double median_bias_a = 0;
    double median_bias_b = 0;
    double median_bias_combined = 0;
    std::size_t combined_not_above_a = 0;  // instances with bias_combined <= bias_a
};

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Per method pair: fraction flagged at p < threshold and median biases.
inline std::vector<PairSummary> pairwise_report(const std::vector<Comparison>& rows, double p_threshold = 0.01) {
    std::map<std::pair<std::string, std::string>, std::vector<const Comparison*>> groups;
    for (const auto& r : rows) groups[{r.method_a, r.method_b}].push_back(&r);
    std::vector<PairSummary> out;
    for (const auto& [key, list] : groups) {
        PairSummary s;
        s.method_a = key.first;
        s.method_b = key.second;
        s.instances = list.size();
        std::vector<double> ba, bb, bc;
        for (const Comparison* c : list) {
            s.flagged += c->test.p_value < p_threshold;
            s.combined_not_above_a += c->bias_combined <= c->bias_a;
            ba.push_back(c->bias_a);
            bb.push_back(c->bias_b);
            bc.push_back(c->bias_combined);
        }
        s.flagged_fraction = static_cast<double>(s.flagged) / static_cast<double>(s.instances);
        s.median_bias_a = median(ba);
        s.median_bias_b = median(bb);
        s.median_bias_combined = median(bc);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace gsd
