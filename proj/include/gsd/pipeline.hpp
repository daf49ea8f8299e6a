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

// End-to-end ensemble runs: generate -> enumerate -> SA -> quantum GSDs ->
// compare -> report, persisted under one directory with a JSON manifest, plus
// CSV plot data derived from the artifacts.
//
// Layout of an output directory:
//   manifest.json
//   graph.txt
//   instances/<id>/{instance.ising, planted.txt, terms.txt, solutions.txt,
//                   sa.gsd, sa_tts.csv, tf.gsd, ns.gsd}
//   report/comparisons.csv, report/summary.json
//   plots/<kind>.csv

#include "gsd/distribution.hpp"
#include "gsd/enumerator.hpp"
#include "gsd/errors.hpp"
#include "gsd/gsd_stats.hpp"
#include "gsd/instances.hpp"
#include "gsd/quantum_gs.hpp"
#include "gsd/rng.hpp"
#include "gsd/sa_sampler.hpp"
#include "gsd/topology.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gsd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kManifestVersion = 1;

// ---- configuration -----------------------------------------------------------

struct GraphConfig {
    ChimeraSpec chimera{3, 3, 4, {}};
    std::string file;  // when set, read the graph from this file instead
};

struct GenerationConfig {
    std::size_t count = 20;
    PlantingParams planting;
    std::size_t solution_cap = 500;
    std::size_t max_candidates = 0;  // 0: 50 * count + 100
};

struct SaStageConfig {
    std::uint64_t anneals = 10000;
    int sweeps = 0;  // 0: pick the TTS-optimal point of the pilot grid
    double beta_min = 0.0;
    double beta_max = 20.0;
    int pilot_lo = 4;  // pilot grid 2^lo .. 2^hi sweeps
    int pilot_hi = 14;
    std::uint64_t pilot_anneals = 1000;
    bool random_order = false;
};

struct QuantumStageConfig {
    std::vector<std::string> drivers{"tf", "ns"};
    double s_star = 0.1;
    double eps = 1e-6;
    int steps_per_decade = 4;
    bool per_edge_sign = false;
    std::size_t dimension_cap = 1'000'000;
};

struct CompareConfig {
    std::uint64_t n_bootstrap = 10000;
    double p_threshold = 0.01;
    std::vector<std::pair<std::string, std::string>> pairs{{"sa", "tf"}, {"sa", "ns"}, {"tf", "ns"}};
};

struct PipelineConfig {
    std::string ensemble_id = "ensemble";
    std::uint64_t root_seed = 1;
    GraphConfig graph;
    GenerationConfig generation;
    SaStageConfig sa;
    QuantumStageConfig quantum;
    CompareConfig compare;
};

inline json to_json(const PipelineConfig& c) {
    json g;
    if (c.graph.file.empty()) {
        g["chimera"] = {{"rows", c.graph.chimera.rows},
                        {"cols", c.graph.chimera.cols},
                        {"half_cell", c.graph.chimera.half_cell},
                        {"dead_vertices", c.graph.chimera.dead_vertices}};
    } else {
        g["file"] = c.graph.file;
    }
    json pairs = json::array();
    for (const auto& [a, b] : c.compare.pairs) pairs.push_back({a, b});
    return {
        {"ensemble_id", c.ensemble_id},
        {"root_seed", c.root_seed},
        {"graph", g},
        {"generation",
         {{"count", c.generation.count},
          {"clause_density", c.generation.planting.clause_density},
          {"loop_length_limit", c.generation.planting.loop_length_limit},
          {"retry_budget", c.generation.planting.retry_budget},
          {"solution_cap", c.generation.solution_cap},
          {"max_candidates", c.generation.max_candidates}}},
        {"sa",
         {{"anneals", c.sa.anneals},
          {"sweeps", c.sa.sweeps},
          {"beta_min", c.sa.beta_min},
          {"beta_max", c.sa.beta_max},
          {"pilot_lo", c.sa.pilot_lo},
          {"pilot_hi", c.sa.pilot_hi},
          {"pilot_anneals", c.sa.pilot_anneals},
          {"random_order", c.sa.random_order}}},
        {"quantum",
         {{"drivers", c.quantum.drivers},
          {"s_star", c.quantum.s_star},
          {"eps", c.quantum.eps},
          {"steps_per_decade", c.quantum.steps_per_decade},
          {"per_edge_sign", c.quantum.per_edge_sign},
          {"dimension_cap", c.quantum.dimension_cap}}},
        {"compare", {{"n_bootstrap", c.compare.n_bootstrap}, {"p_threshold", c.compare.p_threshold}, {"pairs", pairs}}},
    };
}

/// Missing keys keep their defaults; wrong types are input errors.
inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    auto get = [](const json& obj, const char* key, auto& out) {
        if (obj.contains(key)) out = obj.at(key).get<std::decay_t<decltype(out)>>();
    };
    try {
        get(j, "ensemble_id", c.ensemble_id);
        get(j, "root_seed", c.root_seed);
        if (j.contains("graph")) {
            const auto& g = j.at("graph");
            get(g, "file", c.graph.file);
            if (g.contains("chimera")) {
                const auto& ch = g.at("chimera");
                get(ch, "rows", c.graph.chimera.rows);
                get(ch, "cols", c.graph.chimera.cols);
                get(ch, "half_cell", c.graph.chimera.half_cell);
                get(ch, "dead_vertices", c.graph.chimera.dead_vertices);
            }
        }
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            get(g, "count", c.generation.count);
            get(g, "clause_density", c.generation.planting.clause_density);
            get(g, "loop_length_limit", c.generation.planting.loop_length_limit);
            get(g, "retry_budget", c.generation.planting.retry_budget);
            get(g, "solution_cap", c.generation.solution_cap);
            get(g, "max_candidates", c.generation.max_candidates);
        }
        if (j.contains("sa")) {
            const auto& s = j.at("sa");
            get(s, "anneals", c.sa.anneals);
            get(s, "sweeps", c.sa.sweeps);
            get(s, "beta_min", c.sa.beta_min);
            get(s, "beta_max", c.sa.beta_max);
            get(s, "pilot_lo", c.sa.pilot_lo);
            get(s, "pilot_hi", c.sa.pilot_hi);
            get(s, "pilot_anneals", c.sa.pilot_anneals);
            get(s, "random_order", c.sa.random_order);
        }
        if (j.contains("quantum")) {
            const auto& q = j.at("quantum");
            get(q, "drivers", c.quantum.drivers);
            get(q, "s_star", c.quantum.s_star);
            get(q, "eps", c.quantum.eps);
            get(q, "steps_per_decade", c.quantum.steps_per_decade);
            get(q, "per_edge_sign", c.quantum.per_edge_sign);
            get(q, "dimension_cap", c.quantum.dimension_cap);
        }
        if (j.contains("compare")) {
            const auto& m = j.at("compare");
            get(m, "n_bootstrap", c.compare.n_bootstrap);
            get(m, "p_threshold", c.compare.p_threshold);
            if (m.contains("pairs")) {
                c.compare.pairs.clear();
                for (const auto& p : m.at("pairs")) {
                    if (!p.is_array() || p.size() != 2) throw InputError("manifest: each compare pair needs two methods");
                    c.compare.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
                }
            }
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("manifest: ") + e.what());
    }
    for (const auto& d : c.quantum.drivers)
        if (d != "tf" && d != "ns") throw InputError("manifest: unknown driver '" + d + "' (expected tf or ns)");
    auto known = [&](const std::string& m) {
        return m == "sa" || std::find(c.quantum.drivers.begin(), c.quantum.drivers.end(), m) != c.quantum.drivers.end();
    };
    for (const auto& [a, b] : c.compare.pairs)
        if (!known(a) || !known(b) || a == b) throw InputError("manifest: compare pair " + a + "/" + b + " is not runnable");
    if (c.sa.anneals == 0) throw InputError("manifest: sa.anneals must be positive");
    if (c.sa.sweeps < 0) throw InputError("manifest: sa.sweeps must be >= 0");
    if (c.sa.sweeps == 0 && !(0 <= c.sa.pilot_lo && c.sa.pilot_lo <= c.sa.pilot_hi && c.sa.pilot_hi <= 24))
        throw InputError("manifest: pilot grid needs 0 <= pilot_lo <= pilot_hi <= 24");
    return c;
}

// ---- small utilities -----------------------------------------------------------

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ResourceError("cannot write " + path.string());
    os << text;
    if (!os) throw ResourceError("write failed for " + path.string());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("missing artifact " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

template <class Writer>
std::string to_text(Writer&& w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

template <class Reader>
auto parse_file(const fs::path& path, Reader&& r) {
    std::istringstream is(read_file(path));
    return r(is);
}

/// Runs f(i) for i in [0, n) on a bounded pool; returns one slot per index
/// holding the exception it threw, if any.
template <class F>
std::vector<std::exception_ptr> parallel_for(std::size_t n, int threads, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int t = static_cast<int>(std::min<std::size_t>(std::max(1, threads), std::max<std::size_t>(n, 1)));
    if (t <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < t; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return errors;
}

inline std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& x) {
        return x.what();
    } catch (...) {
        return "unknown error";
    }
}

inline Graph build_graph(const GraphConfig& g) {
    if (!g.file.empty()) return parse_file(g.file, [](std::istream& is) { return read_graph(is); });
    return build_chimera(g.chimera);
}

// ---- manifest ------------------------------------------------------------------

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"generate", "enumerate", "sa", "qgs", "compare", "report"};
    return names;
}

enum SeedTag : std::uint64_t { kSeedGenerate = 1, kSeedEnumerate, kSeedSa, kSeedQuantum, kSeedSign, kSeedCompare };

inline json fresh_manifest(const PipelineConfig& cfg) {
    json m;
    m["format"] = "gsdlab-manifest";
    m["format_version"] = kManifestVersion;
    m["config"] = to_json(cfg);
    json seeds;
    seeds["root"] = cfg.root_seed;
    seeds["generate"] = derive_seed(cfg.root_seed, {kSeedGenerate});
    seeds["enumerate"] = derive_seed(cfg.root_seed, {kSeedEnumerate});
    seeds["sa"] = derive_seed(cfg.root_seed, {kSeedSa});
    seeds["qgs"] = derive_seed(cfg.root_seed, {kSeedQuantum});
    seeds["ns_sign"] = derive_seed(cfg.root_seed, {kSeedSign});
    seeds["compare"] = derive_seed(cfg.root_seed, {kSeedCompare});
    m["seeds"] = seeds;
    json stages;
    for (const auto& s : stage_names()) stages[s] = {{"status", "pending"}};
    m["stages"] = stages;
    m["instances"] = json::array();
    return m;
}

inline void save_manifest(const fs::path& dir, const json& m) { write_file(dir / "manifest.json", m.dump(2) + "\n"); }

inline json load_manifest(const fs::path& dir) {
    try {
        json m = json::parse(read_file(dir / "manifest.json"));
        if (m.value("format", "") != "gsdlab-manifest") throw InputError("manifest: unrecognized format");
        if (m.value("format_version", 0) != kManifestVersion)
            throw InputError("manifest: unsupported format_version");
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("manifest: ") + e.what());
    }
}

inline bool stage_done(const json& m, const std::string& stage) {
    return m.at("stages").at(stage).at("status") == "done";
}

inline void require_stage(const json& m, const std::string& stage) {
    if (!stage_done(m, stage)) throw InputError("stage '" + stage + "' has not completed in this directory");
}

// ---- artifact loading and validation -----------------------------------------------

struct InstanceArtifacts {
    IsingInstance instance;
    SolutionSet solutions;
};

inline InstanceArtifacts load_instance(const fs::path& dir, const json& entry) {
    InstanceArtifacts a;
    const auto& files = entry.at("files");
    a.instance = parse_file(dir / files.at("instance").get<std::string>(), [](std::istream& is) { return read_instance(is); });
    a.solutions = parse_file(dir / files.at("solutions").get<std::string>(),
                             [&](std::istream& is) { return read_solutions(is, a.instance.size()); });
    a.solutions.instance_id = entry.at("id").get<std::string>();
    return a;
}

inline std::optional<Gsd> load_method_gsd(const fs::path& dir, const json& entry, const std::string& method) {
    const auto& files = entry.at("files");
    if (!files.contains(method)) return std::nullopt;
    return parse_file(dir / files.at(method).get<std::string>(), [](std::istream& is) { return read_gsd(is); });
}

/// Every referenced file parses, every GSD shares its instance's solution index
/// space and normalizes.
inline void validate_artifacts(const fs::path& dir, const json& m) {
    for (const auto& entry : m.at("instances")) {
        const auto a = load_instance(dir, entry);
        if (a.solutions.size() != entry.at("solutions_count").get<std::size_t>())
            throw IntegrityError(entry.at("id").get<std::string>() + ": solution count differs from manifest");
        for (const auto& [key, path] : entry.at("files").items()) {
            if (key == "sa" || key == "tf" || key == "ns") {
                const Gsd g = *load_method_gsd(dir, entry, key);
                if (g.size() != a.solutions.size())
                    throw IntegrityError(path.get<std::string>() + ": GSD size differs from the solution set");
                double total = 0;
                for (double p : g.probabilities) total += p;
                if (g.analytic() || g.ground_hits > 0)
                    if (std::abs(total - 1) > 1e-9) throw IntegrityError(path.get<std::string>() + ": not normalized");
            } else {
                read_file(dir / path.get<std::string>());
            }
        }
    }
}

// ---- stages --------------------------------------------------------------------

struct RunOptions {
    int threads = 1;
    bool force = false;  // recompute stages already marked done
};

inline std::string instance_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "inst%04zu", i);
    return buf;
}

namespace detail {

inline void generate_stage(const fs::path& dir, const PipelineConfig& cfg, json& m, int threads) {
    const Graph graph = build_graph(cfg.graph);
    write_file(dir / "graph.txt", to_text([&](std::ostream& os) { write_graph(os, graph); }));
    const std::uint64_t gen_seed = m["seeds"]["generate"], enum_seed = m["seeds"]["enumerate"];
    const std::size_t count = cfg.generation.count;
    const std::size_t budget =
        cfg.generation.max_candidates ? cfg.generation.max_candidates : 50 * count + 100;
    EnumerationOptions eo;
    eo.cap = cfg.generation.solution_cap;

    struct Candidate {
        PlantedInstance planted;
        SolutionSet solutions;
        bool accepted = false;
        std::string reject;
    };
    json instances = json::array();
    std::size_t tried = 0, examined = 0, rejected_cap = 0, rejected_planting = 0;
    const std::size_t batch = static_cast<std::size_t>(std::max(1, threads));
    while (instances.size() < count) {
        if (tried >= budget)
            throw ResourceError("generated " + std::to_string(instances.size()) + " of " + std::to_string(count) +
                                " instances within " + std::to_string(budget) + " candidates");
        const std::size_t n = std::min(batch, budget - tried);
        std::vector<Candidate> cands(n);
        auto errors = parallel_for(n, threads, [&](std::size_t k) {
            const std::uint64_t c = tried + k;
            try {
                cands[k].planted = generate_planted(graph, cfg.generation.planting, derive_seed(gen_seed, {c}));
            } catch (const GenerationError&) {
                cands[k].reject = "planting";
                return;
            }
            cands[k].solutions = enumerate_planted(cands[k].planted, eo, derive_seed(enum_seed, {c}));
            if (cands[k].solutions.truncated) {
                cands[k].reject = "cap";
                return;
            }
            cands[k].accepted = true;
        });
        for (std::size_t k = 0; k < n && instances.size() < count; ++k) {
            if (errors[k]) std::rethrow_exception(errors[k]);
            auto& c = cands[k];
            examined = tried + k + 1;
            if (!c.accepted) {
                (c.reject == "cap" ? rejected_cap : rejected_planting)++;
                continue;
            }
            const std::string id = instance_id(instances.size());
            const fs::path rel = fs::path("instances") / id;
            write_file(dir / rel / "instance.ising", to_text([&](std::ostream& os) { write_instance(os, c.planted.instance); }));
            write_file(dir / rel / "planted.txt", to_text([&](std::ostream& os) { write_planted(os, c.planted); }));
            write_file(dir / rel / "terms.txt", to_text([&](std::ostream& os) { write_terms(os, c.planted.terms); }));
            write_file(dir / rel / "solutions.txt", to_text([&](std::ostream& os) { write_solutions(os, c.solutions); }));
            json entry;
            entry["id"] = id;
            entry["candidate"] = tried + k;
            entry["spins"] = c.planted.instance.size();
            entry["loops"] = c.planted.terms.size();
            entry["ground_energy"] = c.planted.ground_energy;
            entry["solutions_count"] = c.solutions.size();
            entry["files"] = {{"instance", (rel / "instance.ising").generic_string()},
                              {"planted", (rel / "planted.txt").generic_string()},
                              {"terms", (rel / "terms.txt").generic_string()},
                              {"solutions", (rel / "solutions.txt").generic_string()}};
            entry["methods"] = json::object();
            instances.push_back(entry);
        }
        tried += n;
    }
    m["instances"] = instances;
    m["stages"]["generate"]["candidates"] = examined;
    m["stages"]["generate"]["rejected_over_cap"] = rejected_cap;
    m["stages"]["generate"]["rejected_planting"] = rejected_planting;
}

inline std::string tts_csv(const TtsTable& t) {
    std::ostringstream os;
    os << "solution,sweeps,hits,anneals,tts\n";
    for (std::size_t i = 0; i < t.solutions(); ++i)
        for (std::size_t k = 0; k < t.sweeps.size(); ++k)
            os << i << ',' << t.sweeps[k] << ',' << t.gsds[k].counts[i] << ',' << t.gsds[k].anneals << ','
               << format_double(t.tts[i][k]) << '\n';
    return os.str();
}

inline void sa_stage(const fs::path& dir, const PipelineConfig& cfg, json& m, int threads) {
    auto& instances = m["instances"];
    const std::uint64_t seed = m["seeds"]["sa"];
    SaOptions so;
    so.order = cfg.sa.random_order ? SweepOrder::RandomPermutation : SweepOrder::Sequential;
    std::vector<int> chosen(instances.size());
    auto errors = parallel_for(instances.size(), threads, [&](std::size_t i) {
        const auto a = load_instance(dir, instances[i]);
        const fs::path rel = fs::path("instances") / instances[i]["id"].get<std::string>();
        int sweeps = cfg.sa.sweeps;
        if (sweeps == 0) {
            const auto grid = pow2_grid(cfg.sa.pilot_lo, cfg.sa.pilot_hi);
            const TtsTable t = tts_curve(a.instance, a.solutions, grid, cfg.sa.pilot_anneals,
                                         derive_seed(seed, {i, 0}), so, cfg.sa.beta_min, cfg.sa.beta_max);
            write_file(dir / rel / "sa_tts.csv", tts_csv(t));
            double best = std::numeric_limits<double>::infinity();
            sweeps = grid.back();
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double v = time_to_solution(grid[k], t.gsds[k].ground_hits, cfg.sa.pilot_anneals);
                if (v < best) {
                    best = v;
                    sweeps = grid[k];
                }
            }
        }
        const SaSchedule schedule{sweeps, cfg.sa.beta_min, cfg.sa.beta_max};
        const Gsd g = sample_gsd(a.instance, a.solutions, schedule, cfg.sa.anneals, derive_seed(seed, {i, 1}), so);
        write_file(dir / rel / "sa.gsd", to_text([&](std::ostream& os) { write_gsd(os, g); }));
        chosen[i] = sweeps;
    });
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        const std::string rel = "instances/" + instances[i]["id"].get<std::string>();
        instances[i]["files"]["sa"] = rel + "/sa.gsd";
        if (cfg.sa.sweeps == 0) instances[i]["files"]["sa_tts"] = rel + "/sa_tts.csv";
        instances[i]["methods"]["sa"] = {{"status", "done"}, {"sweeps", chosen[i]}};
    }
}

inline void quantum_stage(const fs::path& dir, const PipelineConfig& cfg, json& m, int threads) {
    auto& instances = m["instances"];
    const std::uint64_t seed = m["seeds"]["qgs"], sign_seed = m["seeds"]["ns_sign"];
    const auto& drivers = cfg.quantum.drivers;
    const std::size_t jobs = instances.size() * drivers.size();
    struct Outcome {
        std::string status;
        std::string detail;
        int sign = 0;
        int level = 0;
    };
    std::vector<Outcome> out(jobs);
    auto errors = parallel_for(jobs, threads, [&](std::size_t job) {
        const std::size_t i = job / drivers.size(), d = job % drivers.size();
        const auto a = load_instance(dir, instances[i]);
        const Driver driver = drivers[d] == "tf"
                                  ? transverse_field()
                                  : non_stoquastic(a.instance, derive_seed(sign_seed, {i}), cfg.quantum.per_edge_sign);
        QuantumConfig qc;
        qc.s_star = cfg.quantum.s_star;
        qc.eps = cfg.quantum.eps;
        qc.steps_per_decade = cfg.quantum.steps_per_decade;
        qc.subspace.dimension_cap = cfg.quantum.dimension_cap;
        qc.seed = derive_seed(seed, {i, d});
        out[job].sign = driver.sign;
        try {
            const Gsd g = quantum_gsd(a.instance, a.solutions, driver, qc);
            const fs::path path = fs::path("instances") / instances[i]["id"].get<std::string>() / (drivers[d] + ".gsd");
            write_file(dir / path, to_text([&](std::ostream& os) { write_gsd(os, g); }));
            out[job].status = "done";
            out[job].level = g.level;
        } catch (const UnresolvedDegeneracy& e) {
            out[job].status = "unresolved";
            out[job].detail = e.what();
        }
    });
    for (std::size_t job = 0; job < jobs; ++job) {
        if (errors[job]) std::rethrow_exception(errors[job]);
        const std::size_t i = job / drivers.size(), d = job % drivers.size();
        json rec = {{"status", out[job].status}};
        if (drivers[d] == "ns") rec["sign"] = out[job].sign;
        if (out[job].status == "done") {
            rec["level"] = out[job].level;
            instances[i]["files"][drivers[d]] = "instances/" + instances[i]["id"].get<std::string>() + "/" + drivers[d] + ".gsd";
        } else {
            rec["detail"] = out[job].detail;
            instances[i]["files"].erase(drivers[d]);
        }
        instances[i]["methods"][drivers[d]] = rec;
    }
}

/// Indices where exactly one of the two GSDs has zero mass.
inline std::size_t support_mismatch(const Gsd& a, const Gsd& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a.probabilities[i] == 0) != (b.probabilities[i] == 0);
    return n;
}

struct ComparisonRow {
    Comparison cmp;
    std::size_t mismatch = 0;
};

inline std::string statistic_kind(const Gsd& a, const Gsd& b) {
    if (a.analytic() && b.analytic()) return "tv";
    if (a.analytic() || b.analytic()) return "chi2_one_sided";
    return "chi2";
}

inline void compare_stage(const fs::path& dir, const PipelineConfig& cfg, json& m, int threads) {
    const auto& instances = m["instances"];
    const std::uint64_t seed = m["seeds"]["compare"];
    const auto& pairs = cfg.compare.pairs;
    const std::size_t jobs = instances.size() * pairs.size();
    std::vector<std::optional<ComparisonRow>> rows(jobs);
    std::vector<std::string> kinds(jobs), skipped(jobs);
    auto errors = parallel_for(jobs, threads, [&](std::size_t job) {
        const std::size_t i = job / pairs.size(), p = job % pairs.size();
        const auto& entry = instances[i];
        const auto a = load_method_gsd(dir, entry, pairs[p].first);
        const auto b = load_method_gsd(dir, entry, pairs[p].second);
        if (!a || !b) {
            skipped[job] = "missing GSD";
            return;
        }
        if ((!a->analytic() && a->ground_hits == 0) || (!b->analytic() && b->ground_hits == 0)) {
            skipped[job] = "no ground-state samples";
            return;
        }
        ComparisonRow r;
        r.cmp.instance_id = entry["id"];
        r.cmp.method_a = pairs[p].first;
        r.cmp.method_b = pairs[p].second;
        r.cmp.test = bootstrap_ks(*a, *b, cfg.compare.n_bootstrap, derive_seed(seed, {i, p}));
        r.cmp.bias_a = bias(*a);
        r.cmp.bias_b = bias(*b);
        r.cmp.bias_combined = bias(combine_gsds({*a, *b}));
        r.mismatch = support_mismatch(*a, *b);
        kinds[job] = statistic_kind(*a, *b);
        rows[job] = std::move(r);
    });
    std::ostringstream csv;
    csv << "instance_id,method_a,method_b,statistic_kind,statistic,p_value,bias_a,bias_b,bias_combined,"
           "support_mismatch\n";
    json skips = json::array();
    for (std::size_t job = 0; job < jobs; ++job) {
        if (errors[job]) std::rethrow_exception(errors[job]);
        if (!rows[job]) {
            const std::size_t i = job / pairs.size(), p = job % pairs.size();
            skips.push_back({{"instance_id", instances[i]["id"]},
                             {"method_a", pairs[p].first},
                             {"method_b", pairs[p].second},
                             {"reason", skipped[job]}});
            continue;
        }
        const auto& r = *rows[job];
        csv << r.cmp.instance_id << ',' << r.cmp.method_a << ',' << r.cmp.method_b << ',' << kinds[job] << ','
            << format_double(r.cmp.test.statistic) << ',' << format_double(r.cmp.test.p_value) << ','
            << format_double(r.cmp.bias_a) << ',' << format_double(r.cmp.bias_b) << ','
            << format_double(r.cmp.bias_combined) << ',' << r.mismatch << '\n';
    }
    write_file(dir / "report" / "comparisons.csv", csv.str());
    m["stages"]["compare"]["skipped"] = skips;
}

}  // namespace detail

// ---- report --------------------------------------------------------------------

/// Rows of report/comparisons.csv.
inline std::vector<detail::ComparisonRow> read_comparisons(const fs::path& dir) {
    std::istringstream is(read_file(dir / "report" / "comparisons.csv"));
    std::string line;
    std::getline(is, line);
    std::vector<detail::ComparisonRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 10) throw InputError("comparisons.csv: expected 10 columns");
        detail::ComparisonRow r;
        r.cmp.instance_id = f[0];
        r.cmp.method_a = f[1];
        r.cmp.method_b = f[2];
        r.cmp.test.exact = f[3] == "tv";
        r.cmp.test.statistic = std::stod(f[4]);
        r.cmp.test.p_value = std::stod(f[5]);
        r.cmp.bias_a = std::stod(f[6]);
        r.cmp.bias_b = std::stod(f[7]);
        r.cmp.bias_combined = std::stod(f[8]);
        r.mismatch = std::stoull(f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Ensemble summary: per method pair the flagged fraction, median biases, the
/// number of instances where combining does not raise the bias, and support
/// mismatches; plus quantum resolution counts.
inline json build_summary(const fs::path& dir, const PipelineConfig& cfg, const json& m) {
    const auto rows = read_comparisons(dir);
    std::vector<Comparison> cmps;
    for (const auto& r : rows) cmps.push_back(r.cmp);
    json pairs = json::array();
    for (const auto& s : pairwise_report(cmps, cfg.compare.p_threshold)) {
        std::size_t mismatch_instances = 0, certain = 0;
        double max_statistic = 0;
        for (const auto& r : rows) {
            if (r.cmp.method_a != s.method_a || r.cmp.method_b != s.method_b) continue;
            mismatch_instances += r.mismatch > 0;
            if (std::isinf(r.cmp.test.statistic)) ++certain;
            else max_statistic = std::max(max_statistic, r.cmp.test.statistic);
        }
        pairs.push_back({{"method_a", s.method_a},
                         {"method_b", s.method_b},
                         {"instances", s.instances},
                         {"flagged", s.flagged},
                         {"flagged_fraction", s.flagged_fraction},
                         {"median_bias_a", s.median_bias_a},
                         {"median_bias_b", s.median_bias_b},
                         {"median_bias_combined", s.median_bias_combined},
                         {"combined_not_above_a", s.combined_not_above_a},
                         {"support_mismatch_instances", mismatch_instances},
                         {"max_finite_statistic", max_statistic},
                         {"infinite_statistic", certain}});
    }
    json quantum = json::object();
    for (const auto& d : cfg.quantum.drivers) {
        std::map<std::string, std::size_t> status;
        std::map<int, std::size_t> levels;
        for (const auto& e : m["instances"]) {
            const auto& rec = e["methods"][d];
            status[rec["status"].get<std::string>()]++;
            if (rec.contains("level")) levels[rec["level"].get<int>()]++;
        }
        json lv = json::object();
        for (const auto& [l, n] : levels) lv[std::to_string(l)] = n;
        quantum[d] = {{"status", status}, {"levels", lv}};
    }
    return {{"ensemble_id", cfg.ensemble_id},
            {"instances", m["instances"].size()},
            {"p_threshold", cfg.compare.p_threshold},
            {"pairs", pairs},
            {"quantum", quantum}};
}

// ---- driver ----------------------------------------------------------------------

/// Runs every stage not yet done (all of them with opts.force) and returns the
/// final manifest, which is also written to dir/manifest.json. A failing stage
/// is recorded with its diagnostic, later stages are marked blocked, and the
/// error is rethrown.
inline json run_pipeline(const fs::path& dir, const PipelineConfig& cfg, const RunOptions& opts = {}) {
    json m = fresh_manifest(cfg);
    if (fs::exists(dir / "manifest.json") && !opts.force) {
        json old = load_manifest(dir);
        if (old["config"] != m["config"])
            throw InputError("directory holds a run with a different configuration; use a new directory or force");
        m = std::move(old);
    }
    fs::create_directories(dir);
    const auto& names = stage_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const std::string& stage = names[k];
        if (stage_done(m, stage) && !opts.force) continue;
        try {
            if (stage == "generate") detail::generate_stage(dir, cfg, m, opts.threads);
            else if (stage == "enumerate") validate_artifacts(dir, m);
            else if (stage == "sa") detail::sa_stage(dir, cfg, m, opts.threads);
            else if (stage == "qgs") detail::quantum_stage(dir, cfg, m, opts.threads);
            else if (stage == "compare") detail::compare_stage(dir, cfg, m, opts.threads);
            else if (stage == "report")
                write_file(dir / "report" / "summary.json", build_summary(dir, cfg, m).dump(2) + "\n");
            m["stages"][stage]["status"] = "done";
            m["stages"][stage].erase("error");
        } catch (const std::exception& e) {
            m["stages"][stage]["status"] = "failed";
            m["stages"][stage]["error"] = e.what();
            for (std::size_t j = k + 1; j < names.size(); ++j) m["stages"][names[j]] = {{"status", "blocked"}};
            save_manifest(dir, m);
            throw;
        }
        save_manifest(dir, m);
    }
    validate_artifacts(dir, m);
    return m;
}

// ---- plot data ---------------------------------------------------------------------

inline const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> kinds{"bias_scatter", "tts_curves", "gsd_bars", "solution_histogram",
                                                "pvalue_matrix"};
    return kinds;
}

/// Writes dir/plots/<kind>.csv from the run's artifacts and returns its path.
inline fs::path emit_plot_data(const fs::path& dir, const std::string& kind) {
    const json m = load_manifest(dir);
    const PipelineConfig cfg = config_from_json(m["config"]);
    std::ostringstream os;
    if (kind == "bias_scatter") {
        require_stage(m, "compare");
        os << "method_a,method_b,instance_id,bias_a,bias_combined,y_equals_x,y_equals_half_x\n";
        for (const auto& r : read_comparisons(dir))
            os << r.cmp.method_a << ',' << r.cmp.method_b << ',' << r.cmp.instance_id << ','
               << format_double(r.cmp.bias_a) << ',' << format_double(r.cmp.bias_combined) << ','
               << format_double(r.cmp.bias_a) << ',' << format_double(r.cmp.bias_a / 2) << '\n';
    } else if (kind == "tts_curves") {
        require_stage(m, "sa");
        if (cfg.sa.sweeps != 0) throw InputError("tts_curves needs the pilot sweep grid (sa.sweeps = 0)");
        os << "instance_id,solution,sweeps,tts\n";
        for (const auto& e : m["instances"]) {
            std::istringstream is(read_file(dir / e["files"]["sa_tts"].get<std::string>()));
            std::string line;
            std::getline(is, line);
            while (std::getline(is, line)) {
                std::vector<std::string> f;
                std::istringstream ls(line);
                for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
                if (f.size() != 5) throw InputError("sa_tts.csv: expected 5 columns");
                os << e["id"].get<std::string>() << ',' << f[0] << ',' << f[1] << ',' << f[4] << '\n';
            }
        }
    } else if (kind == "gsd_bars") {
        require_stage(m, "sa");
        require_stage(m, "qgs");
        std::vector<std::string> methods{"sa"};
        for (const auto& d : cfg.quantum.drivers) methods.push_back(d);
        os << "instance_id,solution";
        for (const auto& x : methods) os << ',' << x;
        os << '\n';
        for (const auto& e : m["instances"]) {
            std::vector<std::optional<Gsd>> g;
            for (const auto& x : methods) g.push_back(load_method_gsd(dir, e, x));
            for (std::size_t i = 0; i < e["solutions_count"].get<std::size_t>(); ++i) {
                os << e["id"].get<std::string>() << ',' << i;
                for (const auto& x : g) os << ',' << (x ? format_double(x->probabilities[i]) : "nan");
                os << '\n';
            }
        }
    } else if (kind == "solution_histogram") {
        require_stage(m, "generate");
        std::map<std::size_t, std::size_t> hist;
        for (const auto& e : m["instances"]) hist[e["solutions_count"].get<std::size_t>()]++;
        os << "solutions,instances\n";
        for (const auto& [d, n] : hist) os << d << ',' << n << '\n';
    } else if (kind == "pvalue_matrix") {
        require_stage(m, "compare");
        const auto rows = read_comparisons(dir);
        std::map<std::string, std::map<std::pair<std::string, std::string>, double>> table;
        for (const auto& r : rows) table[r.cmp.instance_id][{r.cmp.method_a, r.cmp.method_b}] = r.cmp.test.p_value;
        os << "instance_id";
        for (const auto& [a, b] : cfg.compare.pairs) os << ',' << a << "_vs_" << b;
        os << '\n';
        for (const auto& e : m["instances"]) {
            const std::string id = e["id"];
            os << id;
            for (const auto& pr : cfg.compare.pairs) {
                auto it = table[id].find(pr);
                os << ',' << (it == table[id].end() ? "nan" : format_double(it->second));
            }
            os << '\n';
        }
    } else {
        throw InputError("unknown plot kind '" + kind + "'");
    }
    const fs::path path = dir / "plots" / (kind + ".csv");
    write_file(path, os.str());
    return path;
}

}  // namespace gsd
