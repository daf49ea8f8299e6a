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
#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gsd/errors.hpp"
#include "gsd/instances.hpp"
#include "gsd/rng.hpp"

namespace gsd {

/// Allowed settings of a subset of spins.
///
/// Rows are bit-packed (bit set = spin -1) and kept sorted and unique after
/// canonicalize(), which makes membership a binary search.
class Constraint {
public:
    Constraint() = default;
    explicit Constraint(std::vector<Vertex> bits)
        : bits_(std::move(bits)), words_per_row_(std::max<std::size_t>(1, (bits_.size() + 63) / 64)) {}

    const std::vector<Vertex>& bits() const { return bits_; }
    std::size_t width() const { return bits_.size(); }
    std::size_t size() const { return words_.size() / words_per_row_; }
    bool empty() const { return words_.empty(); }
    std::size_t words_per_row() const { return words_per_row_; }

    std::span<const std::uint64_t> row(std::size_t r) const {
        return {words_.data() + r * words_per_row_, words_per_row_};
    }
    Spin setting(std::size_t r, std::size_t j) const {
        return (words_[r * words_per_row_ + j / 64] >> (j % 64)) & 1 ? Spin{-1} : Spin{1};
    }

    int position(Vertex v) const {
        auto it = std::find(bits_.begin(), bits_.end(), v);
        return it == bits_.end() ? -1 : static_cast<int>(it - bits_.begin());
    }

    void add_row(std::span<const Spin> setting) {
        if (setting.size() != bits_.size()) throw InputError("constraint row has wrong length");
        const auto base = words_.size();
        words_.resize(base + words_per_row_, 0);
        for (std::size_t j = 0; j < setting.size(); ++j) {
            if (setting[j] != 1 && setting[j] != -1) throw InputError("constraint setting must be +-1");
            if (setting[j] < 0) words_[base + j / 64] |= std::uint64_t{1} << (j % 64);
        }
    }
    void add_packed_row(std::span<const std::uint64_t> packed) {
        words_.insert(words_.end(), packed.begin(), packed.end());
    }

    /// Sort rows and drop duplicates.
    void canonicalize() {
        const std::size_t n = size(), w = words_per_row_;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto less = [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(words_.begin() + a * w, words_.begin() + (a + 1) * w,
                                                words_.begin() + b * w, words_.begin() + (b + 1) * w);
        };
        std::sort(order.begin(), order.end(), less);
        std::vector<std::uint64_t> out;
        out.reserve(words_.size());
        for (std::size_t t = 0; t < n; ++t) {
            if (t > 0 && !less(order[t - 1], order[t])) continue;
            out.insert(out.end(), words_.begin() + order[t] * w, words_.begin() + (order[t] + 1) * w);
        }
        words_ = std::move(out);
    }

    /// Requires canonical form.
    bool contains(std::span<const std::uint64_t> packed) const {
        std::size_t lo = 0, hi = size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            auto r = row(mid);
            if (std::lexicographical_compare(r.begin(), r.end(), packed.begin(), packed.end()))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo == size()) return false;
        auto r = row(lo);
        return std::equal(r.begin(), r.end(), packed.begin());
    }

    /// Rows as +-1 tuples, for display and tests.
    std::vector<std::vector<Spin>> settings() const {
        std::vector<std::vector<Spin>> out(size(), std::vector<Spin>(width()));
        for (std::size_t r = 0; r < size(); ++r)
            for (std::size_t j = 0; j < width(); ++j) out[r][j] = setting(r, j);
        return out;
    }

private:
    std::vector<Vertex> bits_;
    std::size_t words_per_row_ = 1;
    std::vector<std::uint64_t> words_;
};

/// Validated constraint from explicit settings; rejects empty tables and
/// repeated bits, removes duplicate rows.
inline Constraint make_constraint(std::vector<Vertex> bits, const std::vector<std::vector<Spin>>& allowed) {
    auto sorted = bits;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("constraint lists a bit twice");
    if (allowed.empty()) throw InputError("constraint has no allowed settings");
    Constraint c(std::move(bits));
    for (const auto& row : allowed) c.add_row(row);
    c.canonicalize();
    return c;
}

namespace detail {

inline bool get_bit(std::span<const std::uint64_t> row, std::size_t j) { return (row[j / 64] >> (j % 64)) & 1; }
inline void set_bit(std::span<std::uint64_t> row, std::size_t j) { row[j / 64] |= std::uint64_t{1} << (j % 64); }

}  // namespace detail

/// Natural join: every pair of rows agreeing on the shared bits. Output bit
/// order is a's bits followed by b's bits not in a. Throws ResourceError when
/// the result would exceed `row_cap` rows.
inline Constraint join(const Constraint& a, const Constraint& b, std::size_t row_cap = SIZE_MAX) {
    std::vector<Vertex> bits = a.bits();
    std::vector<std::pair<std::size_t, std::size_t>> shared;  // (pos in a, pos in b)
    std::vector<std::size_t> b_only;
    for (std::size_t j = 0; j < b.width(); ++j) {
        const int pa = a.position(b.bits()[j]);
        if (pa >= 0) {
            shared.emplace_back(static_cast<std::size_t>(pa), j);
        } else {
            b_only.push_back(j);
            bits.push_back(b.bits()[j]);
        }
    }
    Constraint out(bits);
    const std::size_t kw = std::max<std::size_t>(1, (shared.size() + 63) / 64);
    auto key_of = [&](const Constraint& c, std::size_t r, bool from_a, std::uint64_t* key) {
        std::fill(key, key + kw, 0);
        auto row = c.row(r);
        for (std::size_t t = 0; t < shared.size(); ++t)
            if (detail::get_bit(row, from_a ? shared[t].first : shared[t].second))
                key[t / 64] |= std::uint64_t{1} << (t % 64);
    };
    std::vector<std::uint64_t> keys_b(b.size() * kw);
    for (std::size_t r = 0; r < b.size(); ++r) key_of(b, r, false, keys_b.data() + r * kw);
    std::vector<std::size_t> order(b.size());
    std::iota(order.begin(), order.end(), 0);
    auto key_less = [&](const std::uint64_t* x, const std::uint64_t* y) {
        return std::lexicographical_compare(x, x + kw, y, y + kw);
    };
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return key_less(&keys_b[x * kw], &keys_b[y * kw]); });

    std::vector<std::uint64_t> key(kw), packed(out.words_per_row());
    const std::size_t wa = a.width();
    for (std::size_t ra = 0; ra < a.size(); ++ra) {
        key_of(a, ra, true, key.data());
        auto lo = std::lower_bound(order.begin(), order.end(), key.data(),
                                   [&](std::size_t r, const std::uint64_t* k) { return key_less(&keys_b[r * kw], k); });
        for (auto it = lo; it != order.end() && !key_less(key.data(), &keys_b[*it * kw]); ++it) {
            std::fill(packed.begin(), packed.end(), 0);
            auto rowa = a.row(ra);
            std::copy(rowa.begin(), rowa.end(), packed.begin());
            auto rowb = b.row(*it);
            for (std::size_t t = 0; t < b_only.size(); ++t)
                if (detail::get_bit(rowb, b_only[t])) detail::set_bit(packed, wa + t);
            out.add_packed_row(packed);
            if (out.size() > row_cap)
                throw ResourceError("constraint table exceeded " + std::to_string(row_cap) + " rows");
        }
    }
    out.canonicalize();
    return out;
}

/// Drops `bit` from every row and deduplicates.
inline Constraint project_out(const Constraint& c, Vertex bit) {
    const int p = c.position(bit);
    if (p < 0) throw InputError("projected bit not in constraint");
    std::vector<Vertex> bits;
    for (Vertex v : c.bits())
        if (v != bit) bits.push_back(v);
    Constraint out(bits);
    std::vector<std::uint64_t> packed(out.words_per_row());
    for (std::size_t r = 0; r < c.size(); ++r) {
        std::fill(packed.begin(), packed.end(), 0);
        auto row = c.row(r);
        for (std::size_t j = 0, k = 0; j < c.width(); ++j) {
            if (static_cast<int>(j) == p) continue;
            if (detail::get_bit(row, j)) detail::set_bit(packed, k);
            ++k;
        }
        out.add_packed_row(packed);
    }
    out.canonicalize();
    return out;
}

/// Join of c1 and c2 with `eliminate` projected out. An empty result means the
/// two constraints contradict each other.
inline Constraint combine(const Constraint& c1, const Constraint& c2, Vertex eliminate) {
    if (c1.position(eliminate) < 0 || c2.position(eliminate) < 0)
        throw InputError("eliminated bit must appear in both constraints");
    return project_out(join(c1, c2), eliminate);
}

// ---- loop terms to constraints --------------------------------------------

inline constexpr std::size_t kMaxTermSupport = 24;

/// Allowed settings of each term are its minimizing assignments, by exhaustion.
inline std::vector<Constraint> terms_to_constraints(const PlantedInstance& planted) {
    std::vector<Constraint> out;
    out.reserve(planted.terms.size());
    for (const auto& term : planted.terms) {
        const auto& support = term.support;
        const std::size_t width = support.size();
        if (width == 0) continue;
        if (width > kMaxTermSupport)
            throw InputError("term support of " + std::to_string(width) + " bits is too large to exhaust");
        std::vector<std::pair<int, int>> pos;  // coupling endpoints as support positions
        for (const auto& c : term.couplings) {
            auto pi = std::find(support.begin(), support.end(), c.i) - support.begin();
            auto pj = std::find(support.begin(), support.end(), c.j) - support.begin();
            if (pi == static_cast<long>(width) || pj == static_cast<long>(width))
                throw InputError("term coupling outside its support");
            pos.emplace_back(static_cast<int>(pi), static_cast<int>(pj));
        }
        Energy best = INT64_MAX;
        std::vector<std::uint64_t> argmin;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << width); ++mask) {
            Energy e = 0;
            for (std::size_t t = 0; t < pos.size(); ++t) {
                const bool flip = ((mask >> pos[t].first) ^ (mask >> pos[t].second)) & 1;
                e += flip ? -Energy{term.couplings[t].value} : Energy{term.couplings[t].value};
            }
            if (e < best) {
                best = e;
                argmin.clear();
            }
            if (e == best) argmin.push_back(mask);
        }
        if (best != term.min_energy)
            throw IntegrityError("term minimum " + std::to_string(best) + " differs from recorded " +
                                 std::to_string(term.min_energy));
        Constraint c(support);
        for (auto mask : argmin) c.add_packed_row(std::array<std::uint64_t, 1>{mask});
        c.canonicalize();
        out.push_back(std::move(c));
    }
    return out;
}

// ---- bucket elimination -----------------------------------------------------

/// Bit-selection scores over (u, m, s): u = distinct bits in the combined
/// constraint, m = largest table, s = total rows among constraints holding the bit.
enum class Heuristic : int { Unique = 0, MaxRows, SumRows, UniqueTimesMax, UniqueTimesSum, MaxPlusSum };
inline constexpr int kHeuristicCount = 6;

struct EliminationRecord {
    std::vector<Vertex> order;
    std::vector<std::vector<std::shared_ptr<const Constraint>>> saved_tables;
};

struct EliminationOptions {
    std::size_t cap_table_size = std::size_t{1} << 22;
    std::optional<Heuristic> fixed_heuristic;  // unset: pick one of six at random per step
};

/// Active constraints indexed by the bits they mention.
class EliminationState {
public:
    explicit EliminationState(const std::vector<Constraint>& constraints) {
        for (const auto& c : constraints) add(std::make_shared<const Constraint>(c));
    }

    void add(std::shared_ptr<const Constraint> c) {
        const int id = static_cast<int>(pool_.size());
        for (Vertex v : c->bits()) {
            if (v >= static_cast<Vertex>(holders_.size())) holders_.resize(v + 1);
            if (holders_[v].empty()) ++live_bits_;
            holders_[v].push_back(id);
        }
        pool_.push_back(std::move(c));
    }

    /// Removes and returns every constraint mentioning `bit`.
    std::vector<std::shared_ptr<const Constraint>> take(Vertex bit) {
        std::vector<std::shared_ptr<const Constraint>> out;
        auto ids = std::move(holders_[bit]);
        holders_[bit].clear();
        --live_bits_;
        for (int id : ids) {
            for (Vertex v : pool_[id]->bits()) {
                if (v == bit) continue;
                auto& h = holders_[v];
                h.erase(std::remove(h.begin(), h.end(), id), h.end());
                if (h.empty()) --live_bits_;
            }
            out.push_back(std::move(pool_[id]));
        }
        return out;
    }

    bool done() const { return live_bits_ == 0; }
    int live_bits() const { return live_bits_; }
    std::size_t bit_span() const { return holders_.size(); }
    const std::vector<int>& holders(Vertex v) const { return holders_[v]; }
    const Constraint& constraint(int id) const { return *pool_[id]; }

private:
    std::vector<std::shared_ptr<const Constraint>> pool_;
    std::vector<std::vector<int>> holders_;
    int live_bits_ = 0;
};

inline double heuristic_score(Heuristic h, double u, double m, double s) {
    switch (h) {
        case Heuristic::Unique: return u;
        case Heuristic::MaxRows: return m;
        case Heuristic::SumRows: return s;
        case Heuristic::UniqueTimesMax: return u * m;
        case Heuristic::UniqueTimesSum: return u * s;
        case Heuristic::MaxPlusSum: return m + s;
    }
    return u;
}

/// Bit with the lowest score under one heuristic (random unless fixed); ties
/// broken uniformly at random.
inline Vertex pick_next_bit(const EliminationState& state, Rng& rng,
                            std::optional<Heuristic> fixed = std::nullopt) {
    if (state.done()) throw InputError("no bits left to eliminate");
    const Heuristic h = fixed ? *fixed : static_cast<Heuristic>(uniform_index(rng, kHeuristicCount));
    std::vector<int> stamp(state.bit_span(), -1);
    double best = 0;
    Vertex chosen = -1;
    std::uint64_t ties = 0;
    for (Vertex b = 0; b < static_cast<Vertex>(state.bit_span()); ++b) {
        const auto& ids = state.holders(b);
        if (ids.empty()) continue;
        double u = 0, m = 0, s = 0;
        for (int id : ids) {
            const auto& c = state.constraint(id);
            for (Vertex v : c.bits())
                if (v != b && stamp[v] != b) {
                    stamp[v] = b;
                    ++u;
                }
            m = std::max(m, static_cast<double>(c.size()));
            s += static_cast<double>(c.size());
        }
        const double score = heuristic_score(h, u, m, s);
        if (chosen < 0 || score < best) {
            best = score;
            chosen = b;
            ties = 1;
        } else if (score == best && uniform_index(rng, ++ties) == 0) {
            chosen = b;
        }
    }
    return chosen;
}

/// Eliminates every constrained bit. Returns nullopt on contradiction.
inline std::optional<EliminationRecord> eliminate_all(const std::vector<Constraint>& constraints,
                                                      const EliminationOptions& opts, std::uint64_t seed) {
    if (constraints.empty()) throw InputError("no constraints to eliminate");
    for (const auto& c : constraints)
        if (c.empty()) return std::nullopt;
    EliminationState state(constraints);
    Rng rng = make_stream(seed, {0x656c696d});
    EliminationRecord record;
    while (!state.done()) {
        const Vertex bit = pick_next_bit(state, rng, opts.fixed_heuristic);
        auto saved = state.take(bit);
        Constraint acc = *saved.front();
        if (acc.size() > opts.cap_table_size)
            throw ResourceError("constraint table exceeded " + std::to_string(opts.cap_table_size) + " rows");
        for (std::size_t t = 1; t < saved.size(); ++t) {
            acc = join(acc, *saved[t], opts.cap_table_size);
            if (acc.empty()) return std::nullopt;
        }
        Constraint reduced = project_out(acc, bit);
        record.order.push_back(bit);
        record.saved_tables.push_back(std::move(saved));
        if (reduced.empty()) return std::nullopt;
        if (reduced.width() > 0) state.add(std::make_shared<const Constraint>(std::move(reduced)));
    }
    return record;
}

// ---- solution enumeration ----------------------------------------------------

struct SolutionSet {
    std::string instance_id;
    Energy ground_energy = 0;
    std::vector<SpinConfig> solutions;
    bool truncated = false;

    std::size_t size() const { return solutions.size(); }
};

/// Back-substitution through the saved tables in reverse elimination order.
/// Vertices never eliminated are free and double the count. Stops growing and
/// flags truncation once more than `cap` partial assignments exist.
inline SolutionSet enumerate_solutions(const EliminationRecord& record, int vertex_count, std::size_t cap) {
    SolutionSet out;
    std::vector<SpinConfig> partial{SpinConfig(vertex_count, 0)};
    std::vector<std::uint64_t> packed;
    auto consistent = [&](const SpinConfig& s, const Constraint& c) {
        packed.assign(c.words_per_row(), 0);
        for (std::size_t j = 0; j < c.width(); ++j)
            if (s[c.bits()[j]] < 0) detail::set_bit(packed, j);
        return c.contains(packed);
    };
    auto grow = [&](Vertex bit, auto&& keep) {
        std::vector<SpinConfig> next;
        for (auto& s : partial) {
            for (Spin v : {Spin{1}, Spin{-1}}) {
                s[bit] = v;
                if (!keep(s)) continue;
                if (next.size() >= cap) {
                    out.truncated = true;
                    break;
                }
                next.push_back(s);
            }
            if (out.truncated && next.size() >= cap) break;
        }
        partial = std::move(next);
    };
    std::vector<char> assigned(vertex_count, 0);
    for (std::size_t t = record.order.size(); t-- > 0;) {
        const Vertex bit = record.order[t];
        if (bit < 0 || bit >= vertex_count) throw InputError("eliminated bit outside configuration");
        assigned[bit] = 1;
        const auto& tables = record.saved_tables[t];
        grow(bit, [&](const SpinConfig& s) {
            return std::all_of(tables.begin(), tables.end(), [&](const auto& c) { return consistent(s, *c); });
        });
    }
    for (Vertex v = 0; v < vertex_count; ++v)
        if (!assigned[v]) grow(v, [](const SpinConfig&) { return true; });
    std::sort(partial.begin(), partial.end());
    out.solutions = std::move(partial);
    return out;
}

struct EnumerationOptions {
    std::size_t cap = 500;
    EliminationOptions elimination;
    int max_attempts = 20;  // reseeds after a table-size overflow
};

/// Full enumeration of a planted instance's ground states with reseed-and-retry
/// on table overflow. Every solution is checked against the ground energy.
inline SolutionSet enumerate_planted(const PlantedInstance& planted, const EnumerationOptions& opts,
                                     std::uint64_t seed) {
    const auto constraints = terms_to_constraints(planted);
    const int n = planted.instance.size();
    SolutionSet result;
    if (constraints.empty()) {
        result = enumerate_solutions({}, n, opts.cap);
    } else {
        std::optional<EliminationRecord> record;
        for (int attempt = 0;; ++attempt) {
            try {
                record = eliminate_all(constraints, opts.elimination, derive_seed(seed, {std::uint64_t(attempt)}));
                break;
            } catch (const ResourceError&) {
                if (attempt + 1 >= opts.max_attempts)
                    throw ResourceError("elimination exceeded table cap on all " +
                                        std::to_string(opts.max_attempts) + " seeds");
            }
        }
        if (!record) throw IntegrityError("planted constraints are contradictory");
        result = enumerate_solutions(*record, n, opts.cap);
    }
    result.ground_energy = planted.ground_energy;
    for (const auto& s : result.solutions)
        if (energy(planted.instance, s) != planted.ground_energy)
            throw IntegrityError("enumerated configuration is not at the ground energy");
    return result;
}

// ---- text formats --------------------------------------------------------------

/// Tabular constraint format: one line per bit ("index s1 s2 ..."), one column
/// per allowed setting, constraints separated by blank lines.
inline void write_constraints(std::ostream& os, const std::vector<Constraint>& cs) {
    for (std::size_t t = 0; t < cs.size(); ++t) {
        if (t) os << '\n';
        const auto& c = cs[t];
        for (std::size_t j = 0; j < c.width(); ++j) {
            os << c.bits()[j];
            for (std::size_t r = 0; r < c.size(); ++r) os << ' ' << int{c.setting(r, j)};
            os << '\n';
        }
    }
}

inline std::vector<Constraint> read_constraints(std::istream& is) {
    std::vector<Constraint> out;
    std::vector<Vertex> bits;
    std::vector<std::vector<Spin>> columns;  // per bit
    auto flush = [&] {
        if (bits.empty()) return;
        const std::size_t rows = columns.front().size();
        for (const auto& col : columns)
            if (col.size() != rows) throw InputError("constraint file: ragged table");
        std::vector<std::vector<Spin>> allowed(rows, std::vector<Spin>(bits.size()));
        for (std::size_t j = 0; j < bits.size(); ++j)
            for (std::size_t r = 0; r < rows; ++r) allowed[r][j] = columns[j][r];
        out.push_back(make_constraint(bits, allowed));
        bits.clear();
        columns.clear();
    };
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') continue;
        std::istringstream ls(line);
        Vertex b;
        if (!(ls >> b)) {
            flush();
            continue;
        }
        if (b < 0) throw InputError("constraint file: negative bit index");
        bits.push_back(b);
        columns.emplace_back();
        int x;
        while (ls >> x) {
            if (x != 1 && x != -1) throw InputError("constraint file: settings must be 1 or -1");
            columns.back().push_back(static_cast<Spin>(x));
        }
        if (!ls.eof()) throw InputError("constraint file: bad token");
    }
    flush();
    return out;
}

inline void write_solutions(std::ostream& os, const SolutionSet& set) {
    os << "solutions " << set.size() << ' ' << set.ground_energy << ' ' << (set.truncated ? 1 : 0) << '\n';
    for (const auto& s : set.solutions) write_spins(os, s);
}

inline SolutionSet read_solutions(std::istream& is, int vertex_count) {
    SolutionSet set;
    std::string line, tag;
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {}
    std::istringstream hs(line);
    std::size_t d;
    int truncated;
    if (!(hs >> tag >> d >> set.ground_energy >> truncated) || tag != "solutions")
        throw InputError("solution file: expected 'solutions <D> <E> <truncated>' header");
    set.truncated = truncated != 0;
    for (std::size_t t = 0; t < d; ++t) {
        if (!std::getline(is, line)) throw InputError("solution file: fewer rows than declared");
        set.solutions.push_back(parse_spins(line, static_cast<std::size_t>(vertex_count)));
    }
    return set;
}

}  // namespace gsd
