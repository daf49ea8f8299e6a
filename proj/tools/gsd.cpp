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

// Command-line front end: one verb per pipeline step plus `pipeline` for a
// full ensemble run.

#include "gsd/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace gsd;

struct Globals {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = ".";
};

// Writes to `path` under the output directory, or to stdout when path is "-".
void emit(const Globals& g, const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    write_file(fs::path(g.out_dir) / path, text);
}

IsingInstance load_instance_file(const std::string& path) {
    return parse_file(path, [](std::istream& is) { return read_instance(is); });
}

SolutionSet load_solutions_file(const std::string& path, int n) {
    return parse_file(path, [&](std::istream& is) { return read_solutions(is, n); });
}

std::string test_json(const TestResult& t, const Gsd& a, const Gsd& b) {
    json j = {{"statistic_kind", detail::statistic_kind(a, b)},
              {"statistic", t.statistic},
              {"p_value", t.p_value},
              {"n_bootstrap", t.n_bootstrap},
              {"exceed", t.exceed},
              {"below_resolution", t.below_resolution},
              {"exact", t.exact},
              {"bias_a", bias(a)},
              {"bias_b", bias(b)},
              {"bias_combined", bias(combine_gsds({a, b}))},
              {"support_mismatch", detail::support_mismatch(a, b)}};
    if (std::isfinite(t.asymptotic_p)) j["asymptotic_p"] = t.asymptotic_p;
    return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-state distributions of planted Ising instances: enumeration, SA sampling, "
                 "quantum ground states and their statistical comparison"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "root seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "directory for outputs")->capture_default_str();

    // topology
    auto* topo = app.add_subcommand("topology", "write a Chimera graph");
    ChimeraSpec spec{8, 8, 4, {}};
    std::string dead_file, topo_out = "graph.txt";
    topo->add_option("--rows", spec.rows)->capture_default_str();
    topo->add_option("--cols", spec.cols)->capture_default_str();
    topo->add_option("--half-cell", spec.half_cell, "k, unit cells are K_{k,k}")->capture_default_str();
    topo->add_option("--dead", dead_file, "file listing vertices to remove");
    topo->add_option("-o,--output", topo_out, "output file, '-' for stdout")->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "generate planted instances with enumerated ground states");
    GraphConfig gen_graph;
    GenerationConfig gen_cfg;
    gen_cfg.count = 1;
    gen->add_option("--graph", gen_graph.file, "graph file (default: Chimera from --rows/--cols/--half-cell)");
    gen->add_option("--rows", gen_graph.chimera.rows)->capture_default_str();
    gen->add_option("--cols", gen_graph.chimera.cols)->capture_default_str();
    gen->add_option("--half-cell", gen_graph.chimera.half_cell)->capture_default_str();
    gen->add_option("--count", gen_cfg.count)->capture_default_str();
    gen->add_option("--density", gen_cfg.planting.clause_density, "loops per vertex")->capture_default_str();
    gen->add_option("--loop-limit", gen_cfg.planting.loop_length_limit)->capture_default_str();
    gen->add_option("--retry-budget", gen_cfg.planting.retry_budget)->capture_default_str();
    gen->add_option("--cap", gen_cfg.solution_cap, "reject instances with more ground states")->capture_default_str();

    // enumerate
    auto* enu = app.add_subcommand("enumerate", "enumerate all ground states by bucket elimination");
    std::string enu_instance, enu_terms, enu_planted, enu_constraints, enu_out = "solutions.txt";
    std::size_t enu_cap = 500;
    enu->add_option("--instance", enu_instance, "instance file")->required();
    enu->add_option("--terms", enu_terms, "local terms written by gen");
    enu->add_option("--planted", enu_planted, "planted file written by gen (supplies the ground energy)");
    enu->add_option("--constraints", enu_constraints, "tabular constraint file, instead of --terms");
    enu->add_option("--cap", enu_cap)->capture_default_str();
    enu->add_option("-o,--output", enu_out)->capture_default_str();

    // sa
    auto* sa = app.add_subcommand("sa", "sample a GSD with simulated annealing");
    std::string sa_instance, sa_solutions, sa_out = "sa.gsd";
    SaSchedule schedule;
    std::uint64_t anneals = 10000;
    bool random_order = false;
    sa->add_option("--instance", sa_instance)->required();
    sa->add_option("--solutions", sa_solutions)->required();
    sa->add_option("--sweeps", schedule.sweeps)->capture_default_str();
    sa->add_option("--beta-min", schedule.beta_min)->capture_default_str();
    sa->add_option("--beta-max", schedule.beta_max)->capture_default_str();
    sa->add_option("--anneals", anneals)->capture_default_str();
    sa->add_flag("--random-order", random_order, "random spin order each sweep");
    sa->add_option("-o,--output", sa_out)->capture_default_str();

    // sa-tts
    auto* tts = app.add_subcommand("sa-tts", "per-solution time to solution over a sweep grid");
    std::string tts_instance, tts_solutions, tts_out = "sa_tts.csv";
    int tts_lo = 4, tts_hi = 14;
    std::uint64_t tts_anneals = 1000;
    tts->add_option("--instance", tts_instance)->required();
    tts->add_option("--solutions", tts_solutions)->required();
    tts->add_option("--lo", tts_lo, "smallest grid exponent (2^lo sweeps)")->capture_default_str();
    tts->add_option("--hi", tts_hi, "largest grid exponent")->capture_default_str();
    tts->add_option("--anneals", tts_anneals)->capture_default_str();
    tts->add_option("-o,--output", tts_out)->capture_default_str();

    // qgs
    auto* qgs = app.add_subcommand("qgs", "analytic GSD of the s -> 1 quantum ground state");
    std::string q_instance, q_solutions, q_driver = "tf", q_out;
    QuantumConfig qc;
    std::uint64_t sign_seed = 0;
    bool per_edge = false;
    qgs->add_option("--instance", q_instance)->required();
    qgs->add_option("--solutions", q_solutions)->required();
    qgs->add_option("--driver", q_driver)->check(CLI::IsMember({"tf", "ns"}))->capture_default_str();
    qgs->add_option("--sign-seed", sign_seed, "seed for the non-stoquastic coupling sign")->capture_default_str();
    qgs->add_flag("--per-edge-sign", per_edge, "draw one sign per edge instead of a global sign");
    qgs->add_option("--s-star", qc.s_star)->capture_default_str();
    qgs->add_option("--eps", qc.eps, "anneal ends at s = 1 - eps")->capture_default_str();
    qgs->add_option("--steps-per-decade", qc.steps_per_decade)->capture_default_str();
    qgs->add_option("--dimension-cap", qc.subspace.dimension_cap)->capture_default_str();
    qgs->add_option("-o,--output", q_out, "default <driver>.gsd");

    // compare
    auto* cmp = app.add_subcommand("compare", "bootstrapped test between two GSDs");
    std::string cmp_a, cmp_b;
    std::uint64_t n_boot = 10000;
    cmp->add_option("a", cmp_a, "first GSD file")->required();
    cmp->add_option("b", cmp_b, "second GSD file")->required();
    cmp->add_option("--bootstrap", n_boot)->capture_default_str();

    // report
    auto* rep = app.add_subcommand("report", "rebuild the summary of a pipeline directory");
    std::string rep_dir;
    rep->add_option("dir", rep_dir, "pipeline output directory")->required();

    // plotdata
    auto* plot = app.add_subcommand("plotdata", "write CSV plot data from a pipeline directory");
    std::string plot_dir, plot_kind = "all";
    plot->add_option("dir", plot_dir, "pipeline output directory")->required();
    std::vector<std::string> kinds = plot_kinds();
    kinds.push_back("all");
    plot->add_option("--kind", plot_kind)->check(CLI::IsMember(kinds))->capture_default_str();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run or resume a full ensemble experiment");
    std::string manifest_in;
    bool force = false;
    pipe->add_option("--config", manifest_in, "JSON configuration (defaults apply to missing keys)");
    pipe->add_flag("--force", force, "recompute stages already done");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*topo) {
            Graph graph = build_chimera(spec);
            if (!dead_file.empty()) {
                const auto dead = parse_file(dead_file, [](std::istream& is) { return read_vertex_list(is); });
                graph = remove_vertices(graph, dead);
            }
            emit(g, topo_out, to_text([&](std::ostream& os) { write_graph(os, graph); }));
        } else if (*gen) {
            PipelineConfig cfg;
            cfg.root_seed = g.seed;
            cfg.graph = gen_graph;
            cfg.generation = gen_cfg;
            json m = fresh_manifest(cfg);
            detail::generate_stage(g.out_dir, cfg, m, g.threads);
            std::cout << m["instances"].dump(2) << '\n';
        } else if (*enu) {
            const IsingInstance inst = load_instance_file(enu_instance);
            SolutionSet set;
            if (!enu_constraints.empty()) {
                const auto cs = parse_file(enu_constraints, [](std::istream& is) { return read_constraints(is); });
                const auto record = eliminate_all(cs, {}, g.seed);
                if (!record) throw IntegrityError("constraints are contradictory");
                set = enumerate_solutions(*record, inst.size(), enu_cap);
                set.ground_energy = set.solutions.empty() ? 0 : energy(inst, set.solutions.front());
            } else {
                if (enu_terms.empty() || enu_planted.empty())
                    throw InputError("enumerate needs --terms and --planted, or --constraints");
                PlantedInstance p;
                p.instance = inst;
                p.terms = parse_file(enu_terms, [](std::istream& is) { return read_terms(is); });
                std::tie(p.planted, p.ground_energy) =
                    parse_file(enu_planted, [](std::istream& is) { return read_planted(is); });
                EnumerationOptions eo;
                eo.cap = enu_cap;
                set = enumerate_planted(p, eo, g.seed);
            }
            emit(g, enu_out, to_text([&](std::ostream& os) { write_solutions(os, set); }));
            std::cerr << set.size() << " ground states" << (set.truncated ? " (truncated at cap)" : "") << '\n';
        } else if (*sa) {
            const IsingInstance inst = load_instance_file(sa_instance);
            const SolutionSet set = load_solutions_file(sa_solutions, inst.size());
            SaOptions so;
            so.threads = g.threads;
            so.order = random_order ? SweepOrder::RandomPermutation : SweepOrder::Sequential;
            const Gsd gsd = sample_gsd(inst, set, schedule, anneals, g.seed, so);
            emit(g, sa_out, to_text([&](std::ostream& os) { write_gsd(os, gsd); }));
        } else if (*tts) {
            const IsingInstance inst = load_instance_file(tts_instance);
            const SolutionSet set = load_solutions_file(tts_solutions, inst.size());
            SaOptions so;
            so.threads = g.threads;
            const TtsTable t = tts_curve(inst, set, pow2_grid(tts_lo, tts_hi), tts_anneals, g.seed, so);
            emit(g, tts_out, detail::tts_csv(t));
        } else if (*qgs) {
            const IsingInstance inst = load_instance_file(q_instance);
            const SolutionSet set = load_solutions_file(q_solutions, inst.size());
            const Driver driver = q_driver == "tf" ? transverse_field() : non_stoquastic(inst, sign_seed, per_edge);
            qc.seed = g.seed;
            const Gsd gsd = quantum_gsd(inst, set, driver, qc);
            emit(g, q_out.empty() ? q_driver + ".gsd" : q_out, to_text([&](std::ostream& os) { write_gsd(os, gsd); }));
        } else if (*cmp) {
            const Gsd a = parse_file(cmp_a, [](std::istream& is) { return read_gsd(is); });
            const Gsd b = parse_file(cmp_b, [](std::istream& is) { return read_gsd(is); });
            const TestResult t = bootstrap_ks(a, b, n_boot, g.seed, g.threads);
            std::cout << test_json(t, a, b);
        } else if (*rep) {
            const json m = load_manifest(rep_dir);
            require_stage(m, "compare");
            const json summary = build_summary(rep_dir, config_from_json(m["config"]), m);
            write_file(fs::path(rep_dir) / "report" / "summary.json", summary.dump(2) + "\n");
            std::cout << summary.dump(2) << '\n';
        } else if (*plot) {
            for (const auto& k : plot_kinds())
                if (plot_kind == "all" || plot_kind == k) std::cout << emit_plot_data(plot_dir, k).string() << '\n';
        } else if (*pipe) {
            PipelineConfig cfg;
            if (!manifest_in.empty()) {
                json j;
                try {
                    j = json::parse(read_file(manifest_in));
                } catch (const json::exception& e) {
                    throw InputError(std::string("config: ") + e.what());
                }
                if (j.contains("config")) j = j["config"];
                cfg = config_from_json(j);
            }
            if (manifest_in.empty() || app.get_option("--seed")->count() > 0) cfg.root_seed = g.seed;
            RunOptions ro;
            ro.threads = g.threads;
            ro.force = force;
            run_pipeline(g.out_dir, cfg, ro);
            std::cout << read_file(fs::path(g.out_dir) / "report" / "summary.json");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 0;
}
