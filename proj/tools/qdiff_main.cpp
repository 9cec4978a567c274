#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qdiff/pipeline.hpp"

namespace {

int exit_code_for(const qdiff::Error& e) {
    switch (e.code()) {
        case qdiff::ErrorCode::Incomparable: return 2;
        case qdiff::ErrorCode::Infeasible: return 3;
        case qdiff::ErrorCode::Io: return 4;
        default: return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explain result disagreements between two queries over disjoint datasets"};
    app.require_subcommand(1);

    // ---- explain ----
    auto* explain = app.add_subcommand("explain", "run the explanation pipeline");
    qdiff::RunConfig cfg;
    bool json_out = false;
    double alpha = 0.9, beta = 0.9;
    std::string out_path;
    bool serial = false;

    explain->add_option("--left-db", cfg.left_db, "left database document")->required();
    explain->add_option("--right-db", cfg.right_db, "right database document")->required();
    explain->add_option("--left-query", cfg.left_query, "left query spec")->required();
    explain->add_option("--right-query", cfg.right_query, "right query spec")->required();
    explain->add_option("--matches", cfg.matches_path, "attribute match document")->required();
    explain->add_option("--mapping", cfg.mapping_path, "precomputed tuple mapping");
    explain->add_option("--labels", cfg.labels_path, "known-true pairs for calibration");
    explain->add_option("--candidate-floor", cfg.candidate_floor,
                        "similarity floor for candidate pairs");
    explain->add_option("--buckets", cfg.buckets, "calibration bucket count");
    explain->add_option("--alpha", alpha, "prior that a tuple is covered by both queries");
    explain->add_option("--beta", beta, "prior that a tuple's impact is correct");
    explain->add_option("--method", cfg.method, "milp | greedy | threshold:<t> | exactcover");
    explain->add_option("--batch-size", cfg.partition.batch_size, "partition block size bound");
    explain->add_option("--theta-low", cfg.partition.theta_low, "low-probability threshold");
    explain->add_option("--theta-high", cfg.partition.theta_high, "high-probability threshold");
    explain->add_option("--reward", cfg.partition.reward, "edge weight reward factor");
    explain->add_flag("--no-partition", cfg.no_partition, "solve one monolithic program");
    explain->add_option("--time-limit", cfg.solver.time_limit_sec, "solver time limit (s)");
    explain->add_option("--node-limit", cfg.solver.node_limit, "solver node limit");
    explain->add_option("--solver", cfg.solver_backend, "builtin | export");
    explain->add_option("--export-dir", cfg.export_dir, "directory for exported models");
    explain->add_option("--import-solution", cfg.import_solution_path,
                        "external solver solution file");
    explain->add_option("--gold", cfg.gold_path, "gold standard for metrics");
    explain->add_option("--dump-mapping", cfg.dump_mapping_path, "write the tuple mapping");
    explain->add_option("--max-exception-rate", cfg.max_exception_rate,
                        "summary pattern exception bound");
    explain->add_flag("--include-io", cfg.include_io, "count file I/O in total time");
    explain->add_flag("--serial", serial, "disable the parallel kernels");
    explain->add_flag("--json", json_out, "emit the full JSON report on stdout");
    explain->add_option("--out", out_path, "also write the JSON report to a file");

    // ---- synthgen ----
    auto* synth = app.add_subcommand("synthgen", "generate a synthetic dataset pair with gold");
    qdiff::SynthConfig scfg;
    std::string synth_out;
    synth->add_option("--n", scfg.n, "tuple count")->required();
    synth->add_option("--d", scfg.d, "difference ratio")->required();
    synth->add_option("--v", scfg.v, "vocabulary size")->required();
    synth->add_option("--seed", scfg.seed, "RNG seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "metric/runtime grid over synthetic instances");
    std::vector<long long> ns{1000};
    std::vector<double> ds{0.2};
    std::vector<int> vs{1000};
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> methods{"noopt", "batch:100", "batch:1000"};
    std::string bench_out;
    double balpha = 0.9, bbeta = 0.9;
    double btime_limit = -1;
    bool bserial = false;
    bench->add_option("--n", ns, "tuple counts");
    bench->add_option("--d", ds, "difference ratios");
    bench->add_option("--v", vs, "vocabulary sizes");
    bench->add_option("--seeds", seeds, "RNG seeds");
    bench->add_option("--methods", methods,
                      "noopt | batch:<k> | greedy | threshold:<t> | exactcover");
    bench->add_option("--alpha", balpha, "prior alpha");
    bench->add_option("--beta", bbeta, "prior beta");
    bench->add_option("--time-limit", btime_limit, "per-solve time limit (s)");
    bench->add_flag("--serial", bserial, "disable the parallel kernels");
    bench->add_option("--out", bench_out, "CSV output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*explain) {
            cfg.priors = {alpha, beta};
            cfg.mode = serial ? qdiff::ExecMode::Serial : qdiff::ExecMode::Parallel;
            qdiff::EvalReport report = qdiff::run_pipeline(cfg);
            std::string json = qdiff::report_to_json(report);
            if (!out_path.empty()) {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) qdiff::fail(qdiff::ErrorCode::Io, "cannot write '" + out_path + "'");
                out << json;
            }
            if (json_out)
                std::cout << json;
            else
                std::cout << qdiff::render_report_text(report);
            return 0;
        }
        if (*synth) {
            qdiff::SynthBundle bundle = qdiff::generate(scfg);
            qdiff::write_synth_bundle(synth_out, bundle);
            std::cout << "wrote synthetic bundle to " << synth_out << "\n";
            return 0;
        }
        if (*bench) {
            qdiff::Priors priors{balpha, bbeta};
            qdiff::SolverConfig solver_cfg;
            solver_cfg.time_limit_sec = btime_limit;
            qdiff::ExecMode mode = bserial ? qdiff::ExecMode::Serial : qdiff::ExecMode::Parallel;
            if (bench_out.empty()) {
                qdiff::bench_grid(std::cout, ns, ds, vs, seeds, methods, priors, solver_cfg, mode);
            } else {
                std::ofstream out(bench_out, std::ios::binary);
                if (!out) qdiff::fail(qdiff::ErrorCode::Io, "cannot write '" + bench_out + "'");
                qdiff::bench_grid(out, ns, ds, vs, seeds, methods, priors, solver_cfg, mode);
            }
            return 0;
        }
    } catch (const qdiff::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
