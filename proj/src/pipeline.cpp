#include "qdiff/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qdiff {

using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Metrics make_metrics(long long tp_derived, long long derived, long long tp_gold, long long gold) {
    Metrics m;
    if (derived == 0)
        m.precision = gold == 0 ? 1.0 : 0.0;
    else
        m.precision = static_cast<double>(tp_derived) / static_cast<double>(derived);
    m.recall = gold == 0 ? 1.0 : static_cast<double>(tp_gold) / static_cast<double>(gold);
    m.f1 = m.precision + m.recall == 0 ? 0.0
                                       : 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

} // namespace

ScorePair score(const ExplanationSet& e, const CanonicalRelation& T1,
                const CanonicalRelation& T2, const GoldStandard& gold) {
    auto row_id = [&](const RowRef& r) {
        return r.side == Side::Left ? T1.tuples.at(r.index).row_id : T2.tuples.at(r.index).row_id;
    };

    std::set<std::pair<int, std::string>> gold_dropped;
    for (const auto& [side, key] : gold.dropped)
        gold_dropped.insert({side == Side::Left ? 0 : 1, key});
    std::set<std::string> gold_corrupt_keys;
    for (const auto& c : gold.corrupted) gold_corrupt_keys.insert(c.key);

    std::set<std::pair<int, std::string>> derived_dropped;
    for (const auto& r : e.delta)
        derived_dropped.insert({r.side == Side::Left ? 0 : 1, row_id(r)});
    std::set<std::string> derived_changed_keys;
    for (const auto& vc : e.value_changes) derived_changed_keys.insert(row_id(vc.row));

    long long tp_drop = 0;
    for (const auto& d : derived_dropped)
        if (gold_dropped.count(d)) tp_drop++;
    long long tp_change = 0;
    for (const auto& k : derived_changed_keys)
        if (gold_corrupt_keys.count(k)) tp_change++;
    long long gold_drop_hit = 0;
    for (const auto& d : gold_dropped)
        if (derived_dropped.count(d)) gold_drop_hit++;
    long long gold_change_hit = 0;
    for (const auto& k : gold_corrupt_keys)
        if (derived_changed_keys.count(k)) gold_change_hit++;

    ScorePair sp;
    sp.expl = make_metrics(
        tp_drop + tp_change,
        static_cast<long long>(derived_dropped.size() + derived_changed_keys.size()),
        gold_drop_hit + gold_change_hit,
        static_cast<long long>(gold_dropped.size() + gold_corrupt_keys.size()));

    std::set<std::pair<std::string, std::string>> gold_pairs(gold.true_matches.begin(),
                                                             gold.true_matches.end());
    std::set<std::pair<std::string, std::string>> derived_pairs;
    for (const auto& m : e.evidence)
        derived_pairs.insert({T1.tuples.at(m.left).row_id, T2.tuples.at(m.right).row_id});
    long long tp_pairs = 0;
    for (const auto& p : derived_pairs)
        if (gold_pairs.count(p)) tp_pairs++;
    sp.evid = make_metrics(tp_pairs, static_cast<long long>(derived_pairs.size()), tp_pairs,
                           static_cast<long long>(gold_pairs.size()));
    return sp;
}

ReportExplanation render_explanation(const ExplanationSet& e, const CanonicalRelation& T1,
                                     const CanonicalRelation& T2) {
    ReportExplanation out;
    auto tuple = [&](const RowRef& r) -> const CanonicalTuple& {
        return r.side == Side::Left ? T1.tuples.at(r.index) : T2.tuples.at(r.index);
    };
    for (const auto& r : e.delta) out.delta.push_back({side_name(r.side), tuple(r).row_id});
    for (const auto& vc : e.value_changes)
        out.value_changes.push_back(
            {side_name(vc.row.side), tuple(vc.row).row_id, tuple(vc.row).impact, vc.new_impact});
    for (const auto& m : e.evidence)
        out.evidence.push_back({T1.tuples.at(m.left).row_id, T2.tuples.at(m.right).row_id, m.p});
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

ordered_json metrics_json(const Metrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from(const ordered_json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(),
            j.at("f1").get<double>()};
}

} // namespace

std::string report_to_json(const EvalReport& r) {
    ordered_json j;
    j["method"] = r.method;
    j["query_results"] = {{"left", r.left_result}, {"right", r.right_result}};
    j["objective"] = r.objective;
    j["complete"] = r.complete;
    j["solver_status"] = r.solver_status;
    j["blocks"] = r.blocks;

    ordered_json expl;
    expl["delta"] = ordered_json::array();
    for (const auto& d : r.expl.delta)
        expl["delta"].push_back({{"side", d.side}, {"row", d.row}});
    expl["value_changes"] = ordered_json::array();
    for (const auto& c : r.expl.value_changes)
        expl["value_changes"].push_back({{"side", c.side},
                                         {"row", c.row},
                                         {"old_impact", c.old_impact},
                                         {"new_impact", c.new_impact}});
    expl["evidence"] = ordered_json::array();
    for (const auto& ev : r.expl.evidence)
        expl["evidence"].push_back({{"left", ev.left}, {"right", ev.right}, {"p", ev.p}});
    j["explanations"] = std::move(expl);

    j["summary"] = ordered_json::array();
    for (const auto& p : r.patterns) {
        ordered_json pj;
        pj["side"] = side_name(p.side);
        pj["conjuncts"] = ordered_json::array();
        for (const auto& [attr, value] : p.conjuncts)
            pj["conjuncts"].push_back({{"attr", attr}, {"value", value}});
        pj["covered"] = p.covered;
        pj["exceptions"] = p.exceptions;
        pj["text"] = render_pattern(p);
        j["summary"].push_back(std::move(pj));
    }

    if (r.has_metrics)
        j["metrics"] = {{"explanation", metrics_json(r.expl_metrics)},
                        {"evidence", metrics_json(r.evid_metrics)}};
    if (!r.note.empty()) j["note"] = r.note;

    j["times_ms"] = {{"io", r.times.io_ms},
                     {"provenance", r.times.provenance_ms},
                     {"canonicalize", r.times.canonicalize_ms},
                     {"mapping", r.times.mapping_ms},
                     {"solve", r.times.solve_ms},
                     {"summarize", r.times.summarize_ms},
                     {"total", r.times.total_ms}};
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("bad report JSON: ") + e.what());
    }
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.left_result = j.at("query_results").at("left").get<double>();
    r.right_result = j.at("query_results").at("right").get<double>();
    r.objective = j.at("objective").get<double>();
    r.complete = j.at("complete").get<bool>();
    r.solver_status = j.at("solver_status").get<std::string>();
    r.blocks = j.at("blocks").get<int>();
    for (const auto& d : j.at("explanations").at("delta"))
        r.expl.delta.push_back({d.at("side").get<std::string>(), d.at("row").get<std::string>()});
    for (const auto& c : j.at("explanations").at("value_changes"))
        r.expl.value_changes.push_back({c.at("side").get<std::string>(),
                                        c.at("row").get<std::string>(),
                                        c.at("old_impact").get<double>(),
                                        c.at("new_impact").get<double>()});
    for (const auto& ev : j.at("explanations").at("evidence"))
        r.expl.evidence.push_back({ev.at("left").get<std::string>(),
                                   ev.at("right").get<std::string>(), ev.at("p").get<double>()});
    for (const auto& pj : j.at("summary")) {
        Pattern p;
        p.side = pj.at("side").get<std::string>() == "left" ? Side::Left : Side::Right;
        for (const auto& cj : pj.at("conjuncts"))
            p.conjuncts.push_back(
                {cj.at("attr").get<std::string>(), cj.at("value").get<std::string>()});
        p.covered = pj.at("covered").get<int>();
        p.exceptions = pj.at("exceptions").get<int>();
        r.patterns.push_back(std::move(p));
    }
    if (j.contains("metrics")) {
        r.has_metrics = true;
        r.expl_metrics = metrics_from(j.at("metrics").at("explanation"));
        r.evid_metrics = metrics_from(j.at("metrics").at("evidence"));
    }
    if (j.contains("note")) r.note = j.at("note").get<std::string>();
    const auto& t = j.at("times_ms");
    r.times = {t.at("io").get<double>(),       t.at("provenance").get<double>(),
               t.at("canonicalize").get<double>(), t.at("mapping").get<double>(),
               t.at("solve").get<double>(),    t.at("summarize").get<double>(),
               t.at("total").get<double>()};
    return r;
}

std::string render_report_text(const EvalReport& r) {
    std::ostringstream out;
    out << "method: " << r.method << "\n";
    out << "query results: left = " << r.left_result << ", right = " << r.right_result << "\n";
    out << "objective (log probability): " << r.objective << "\n";
    out << "complete: " << (r.complete ? "yes" : "no") << ", solver: " << r.solver_status
        << ", blocks: " << r.blocks << "\n";
    out << "provenance-based explanations (" << r.expl.delta.size() << "):\n";
    for (const auto& d : r.expl.delta) out << "  " << d.side << ": " << d.row << "\n";
    out << "value-based explanations (" << r.expl.value_changes.size() << "):\n";
    for (const auto& c : r.expl.value_changes)
        out << "  " << c.side << ": " << c.row << "  impact " << c.old_impact << " -> "
            << c.new_impact << "\n";
    out << "evidence matches (" << r.expl.evidence.size() << "):\n";
    for (const auto& ev : r.expl.evidence)
        out << "  " << ev.left << "  ~  " << ev.right << "  (p = " << ev.p << ")\n";
    if (!r.patterns.empty()) {
        out << "summary patterns:\n";
        for (const auto& p : r.patterns) out << "  " << render_pattern(p) << "\n";
    }
    if (r.has_metrics) {
        out << "explanation metrics: P = " << r.expl_metrics.precision
            << ", R = " << r.expl_metrics.recall << ", F = " << r.expl_metrics.f1 << "\n";
        out << "evidence metrics:    P = " << r.evid_metrics.precision
            << ", R = " << r.evid_metrics.recall << ", F = " << r.evid_metrics.f1 << "\n";
    }
    if (!r.note.empty()) out << "note: " << r.note << "\n";
    out << "times (ms): io " << r.times.io_ms << ", provenance " << r.times.provenance_ms
        << ", canonicalize " << r.times.canonicalize_ms << ", mapping " << r.times.mapping_ms
        << ", solve " << r.times.solve_ms << ", summarize " << r.times.summarize_ms << ", total "
        << r.times.total_ms << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Orchestration

MethodOutcome run_method(const std::string& method, const CanonicalRelation& T1,
                         const CanonicalRelation& T2, const TupleMapping& mapping,
                         const Priors& priors, const CardinalityReq& req,
                         const SolverConfig& scfg, const SolveOptions& opts) {
    MethodOutcome out;
    out.method = method;
    auto t0 = Clock::now();

    if (method == "noopt" || method == "milp") {
        SolveResult r = solve_unpartitioned(T1, T2, mapping, priors, req, scfg, opts);
        out.expl = r.expl;
        out.objective = r.objective;
        out.status = solver_status_name(r.status);
        out.blocks = r.blocks;
    } else if (method.rfind("batch:", 0) == 0) {
        PartitionConfig pcfg;
        pcfg.batch_size = std::stoi(method.substr(6));
        SolveResult r = solve_partitioned(T1, T2, mapping, priors, req, pcfg, scfg, opts);
        out.expl = r.expl;
        out.objective = r.objective;
        out.status = solver_status_name(r.status);
        out.blocks = r.blocks;
    } else if (method == "greedy") {
        BaselineResult r = greedy_explain(T1, T2, mapping, priors, req);
        out.expl = r.expl;
        out.objective = r.objective;
    } else if (method.rfind("threshold:", 0) == 0) {
        BaselineResult r =
            threshold_explain(T1, T2, mapping, std::stod(method.substr(10)), req, priors);
        out.expl = r.expl;
        out.objective = r.objective;
    } else if (method == "exactcover") {
        BaselineResult r = exactcover_explain(T1, T2, mapping, priors, req);
        out.expl = r.expl;
        out.objective = r.objective;
    } else {
        fail(ErrorCode::Invalid, "unknown method '" + method + "'");
    }
    out.solve_ms = ms_since(t0);
    out.complete = is_complete(out.expl, req, T1, T2);
    return out;
}

EvalReport run_pipeline(const RunConfig& cfg) {
    cfg.priors.validate();
    EvalReport report;
    auto t_start = Clock::now();

    // io
    auto t_io = Clock::now();
    Database left_db = load_database(cfg.left_db);
    Database right_db = load_database(cfg.right_db);
    QuerySpec q1 = load_query(cfg.left_query);
    QuerySpec q2 = load_query(cfg.right_query);
    std::vector<AttributeMatch> matches = load_matches(cfg.matches_path);
    std::optional<GoldStandard> gold;
    if (!cfg.gold_path.empty()) gold = load_gold(cfg.gold_path);
    report.times.io_ms = ms_since(t_io);

    if (!check_comparable(matches))
        fail(ErrorCode::Incomparable,
             "queries are not comparable: the attribute match list is empty");
    CardinalityReq req = cardinality_req(matches);

    // provenance
    auto t_prov = Clock::now();
    report.left_result = query_result_number(evaluate_query(q1, left_db), q1.agg);
    report.right_result = query_result_number(evaluate_query(q2, right_db), q2.agg);
    ProvenanceRelation p1 = extract_provenance(q1, left_db);
    ProvenanceRelation p2 = extract_provenance(q2, right_db);
    report.times.provenance_ms = ms_since(t_prov);

    // canonicalize
    auto t_canon = Clock::now();
    CanonicalRelation t1 = canonicalize(p1, matches, Side::Left);
    CanonicalRelation t2 = canonicalize(p2, matches, Side::Right);
    report.times.canonicalize_ms = ms_since(t_canon);

    // mapping
    auto t_map = Clock::now();
    TupleMapping mapping;
    if (!cfg.mapping_path.empty()) {
        mapping = load_mapping(cfg.mapping_path, t1, t2);
    } else if (!cfg.labels_path.empty()) {
        CalibrationConfig ccfg;
        ccfg.bucket_count = cfg.buckets;
        ccfg.candidate_floor = cfg.candidate_floor;
        ccfg.labels = load_labels(cfg.labels_path);
        mapping = calibrate_mapping(t1, t2, matches, ccfg, cfg.mode);
    } else {
        mapping = raw_similarity_mapping(t1, t2, matches, cfg.candidate_floor, cfg.mode);
    }
    if (!cfg.dump_mapping_path.empty()) save_mapping(cfg.dump_mapping_path, mapping, t1, t2);
    report.times.mapping_ms = ms_since(t_map);

    // solve / explain
    auto t_solve = Clock::now();
    ExplanationSet expl;
    if (cfg.method == "milp" && cfg.solver_backend == "export" &&
        cfg.import_solution_path.empty()) {
        MilpModel model = build_milp(t1, t2, mapping, cfg.priors, req, cfg.milp);
        namespace fs = std::filesystem;
        std::string lp = (fs::path(cfg.export_dir) / "model.lp").string();
        std::string mps = (fs::path(cfg.export_dir) / "model.mps").string();
        export_model(model, ModelFormat::Lp, lp);
        export_model(model, ModelFormat::Mps, mps);
        report.method = cfg.method;
        report.note = "model exported to " + lp + " and " + mps +
                      "; rerun with --import-solution <file> to decode";
        report.solver_status = "exported";
        report.times.solve_ms = ms_since(t_solve);
        report.times.total_ms = ms_since(t_start);
        return report;
    }

    if (cfg.method == "milp" && !cfg.import_solution_path.empty()) {
        MilpModel model = build_milp(t1, t2, mapping, cfg.priors, req, cfg.milp);
        Assignment a = import_solution(model, cfg.import_solution_path);
        expl = decode_solution(model, a);
        report.objective = log_probability(expl, t1, t2, mapping, cfg.priors, req);
        report.solver_status = "imported";
    } else if (cfg.method == "milp") {
        SolveResult r;
        if (cfg.no_partition)
            r = solve_unpartitioned(t1, t2, mapping, cfg.priors, req, cfg.solver,
                                    {cfg.milp, cfg.mode});
        else
            r = solve_partitioned(t1, t2, mapping, cfg.priors, req, cfg.partition, cfg.solver,
                                  {cfg.milp, cfg.mode});
        expl = r.expl;
        report.objective = r.objective;
        report.solver_status = solver_status_name(r.status);
        report.blocks = r.blocks;
    } else {
        MethodOutcome mo = run_method(cfg.method, t1, t2, mapping, cfg.priors, req, cfg.solver,
                                      {cfg.milp, cfg.mode});
        expl = mo.expl;
        report.objective = mo.objective;
        report.solver_status = mo.status;
        report.blocks = mo.blocks;
    }
    report.method = cfg.method;
    report.complete = is_complete(expl, req, t1, t2);
    report.times.solve_ms = ms_since(t_solve);

    // summarize
    auto t_sum = Clock::now();
    report.patterns = summarize(expl, t1, t2, p1, p2, cfg.max_exception_rate);
    report.times.summarize_ms = ms_since(t_sum);

    report.expl = render_explanation(expl, t1, t2);
    if (gold) {
        ScorePair sp = score(expl, t1, t2, *gold);
        report.has_metrics = true;
        report.expl_metrics = sp.expl;
        report.evid_metrics = sp.evid;
    }

    report.times.total_ms = ms_since(t_start);
    if (!cfg.include_io) report.times.total_ms -= report.times.io_ms;
    return report;
}

PreparedInstance prepare_synthetic(const SynthConfig& cfg, ExecMode mode) {
    SynthBundle bundle = generate(cfg);
    PreparedInstance inst;
    inst.gold = bundle.gold;

    Database db1{{bundle.d1.name, bundle.d1}};
    Database db2{{bundle.d2.name, bundle.d2}};
    inst.left_result = query_result_number(evaluate_query(bundle.q1, db1), bundle.q1.agg);
    inst.right_result = query_result_number(evaluate_query(bundle.q2, db2), bundle.q2.agg);
    inst.p1 = extract_provenance(bundle.q1, db1);
    inst.p2 = extract_provenance(bundle.q2, db2);
    inst.t1 = canonicalize(inst.p1, bundle.matches, Side::Left);
    inst.t2 = canonicalize(inst.p2, bundle.matches, Side::Right);
    inst.req = cardinality_req(bundle.matches);

    auto t0 = Clock::now();
    CalibrationConfig ccfg;
    ccfg.labels = bundle.gold.true_matches;
    inst.mapping = calibrate_mapping(inst.t1, inst.t2, bundle.matches, ccfg, mode);
    inst.mapping_ms = ms_since(t0);
    return inst;
}

void bench_grid(std::ostream& out, const std::vector<long long>& ns,
                const std::vector<double>& ds, const std::vector<int>& vs,
                const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& methods,
                const Priors& priors, const SolverConfig& scfg, ExecMode mode) {
    out << "method,n,d,v,seed,expP,expR,expF,evP,evR,evF,solve_ms,status,complete\n";
    for (long long n : ns)
        for (double d : ds)
            for (int v : vs)
                for (std::uint64_t seed : seeds) {
                    SynthConfig cfg;
                    cfg.n = n;
                    cfg.d = d;
                    cfg.v = v;
                    cfg.seed = seed;
                    PreparedInstance inst = prepare_synthetic(cfg, mode);
                    for (const auto& method : methods) {
                        MethodOutcome mo = run_method(method, inst.t1, inst.t2, inst.mapping,
                                                      priors, inst.req, scfg, {{}, mode});
                        ScorePair sp = score(mo.expl, inst.t1, inst.t2, inst.gold);
                        out << mo.method << ',' << n << ',' << d << ',' << v << ',' << seed << ','
                            << sp.expl.precision << ',' << sp.expl.recall << ',' << sp.expl.f1
                            << ',' << sp.evid.precision << ',' << sp.evid.recall << ','
                            << sp.evid.f1 << ',' << mo.solve_ms << ',' << mo.status << ','
                            << (mo.complete ? 1 : 0) << "\n";
                        out.flush();
                    }
                }
}

} // namespace qdiff
