#pragma once

#include <optional>
#include <string>

#include "qdiff/baselines.hpp"
#include "qdiff/json_io.hpp"
#include "qdiff/partition.hpp"
#include "qdiff/summarize.hpp"

namespace qdiff {

struct Metrics {
    double precision = 0, recall = 0, f1 = 0;
};

struct ScorePair {
    Metrics expl, evid;
};

// Explanation metrics pool provenance- and value-based explanations; a value
// change counts as true when its row matches a gold corruption on either
// side. Evidence metrics compare (left key, right key) pairs.
ScorePair score(const ExplanationSet& e, const CanonicalRelation& T1,
                const CanonicalRelation& T2, const GoldStandard& gold);

struct StageTimes {
    double io_ms = 0;
    double provenance_ms = 0;
    double canonicalize_ms = 0;
    double mapping_ms = 0;
    double solve_ms = 0;
    double summarize_ms = 0;
    double total_ms = 0;
};

// Row-id rendering of an explanation set for reports.
struct ReportExplanation {
    struct DeltaRow {
        std::string side, row;
    };
    struct Change {
        std::string side, row;
        double old_impact = 0, new_impact = 0;
    };
    struct Evidence {
        std::string left, right;
        double p = 1;
    };
    std::vector<DeltaRow> delta;
    std::vector<Change> value_changes;
    std::vector<Evidence> evidence;
};

ReportExplanation render_explanation(const ExplanationSet& e, const CanonicalRelation& T1,
                                     const CanonicalRelation& T2);

struct EvalReport {
    std::string method;
    double left_result = 0, right_result = 0;
    double objective = 0;
    bool complete = false;
    std::string solver_status = "optimal";
    int blocks = 1;
    ReportExplanation expl;
    std::vector<Pattern> patterns;
    bool has_metrics = false;
    Metrics expl_metrics, evid_metrics;
    StageTimes times;
    std::string note;
};

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
std::string render_report_text(const EvalReport& r);

struct RunConfig {
    std::string left_db, right_db;
    std::string left_query, right_query;
    std::string matches_path;
    std::string mapping_path; // precomputed tuple mapping (optional)
    std::string labels_path;  // calibration labels (optional)
    double candidate_floor = 0.0;
    int buckets = 50;
    Priors priors;
    PartitionConfig partition;
    bool no_partition = false;
    SolverConfig solver;
    MilpOptions milp;
    std::string method = "milp"; // milp | greedy | threshold:<t> | exactcover
    std::string gold_path;
    std::string dump_mapping_path;
    double max_exception_rate = 0.1;
    ExecMode mode = ExecMode::Parallel;
    std::string solver_backend = "builtin"; // builtin | export
    std::string export_dir = ".";
    std::string import_solution_path;
    bool include_io = false;
};

EvalReport run_pipeline(const RunConfig& cfg);

// In-memory instance shared by bench runs and tests.
struct PreparedInstance {
    ProvenanceRelation p1, p2;
    CanonicalRelation t1, t2;
    CardinalityReq req;
    TupleMapping mapping;
    GoldStandard gold;
    double left_result = 0, right_result = 0;
    double mapping_ms = 0;
};

PreparedInstance prepare_synthetic(const SynthConfig& cfg, ExecMode mode = ExecMode::Parallel);

struct MethodOutcome {
    std::string method;
    ExplanationSet expl;
    double objective = 0;
    double solve_ms = 0;
    std::string status = "optimal";
    int blocks = 1;
    bool complete = false;
};

// method: "noopt" | "batch:<size>" | "greedy" | "threshold:<t>" | "exactcover"
MethodOutcome run_method(const std::string& method, const CanonicalRelation& T1,
                         const CanonicalRelation& T2, const TupleMapping& mapping,
                         const Priors& priors, const CardinalityReq& req,
                         const SolverConfig& scfg = {}, const SolveOptions& opts = {});

// Benchmark grid; one CSV row per (method, n, d, v, seed).
void bench_grid(std::ostream& out, const std::vector<long long>& ns,
                const std::vector<double>& ds, const std::vector<int>& vs,
                const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& methods,
                const Priors& priors, const SolverConfig& scfg, ExecMode mode);

} // namespace qdiff
