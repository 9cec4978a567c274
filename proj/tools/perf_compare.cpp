// Compares the serial reference implementations of the parallel kernels with
// their OpenMP versions on synthetic inputs and reports wall times.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "qdiff/pipeline.hpp"

using namespace qdiff;

namespace {

double time_ms(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void row(const std::string& name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name.c_str(), serial_ms, parallel_ms,
                parallel_ms > 0 ? serial_ms / parallel_ms : 0.0);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel comparison"};
    long long n = 4000;
    std::uint64_t seed = 7;
    app.add_option("--n", n, "synthetic tuple count");
    app.add_option("--seed", seed, "RNG seed");
    CLI11_PARSE(app, argc, argv);

    SynthConfig cfg;
    cfg.n = n;
    cfg.d = 0.2;
    cfg.v = 1000;
    cfg.seed = seed;
    SynthBundle bundle = generate(cfg);

    Database db1{{bundle.d1.name, bundle.d1}};
    Database db2{{bundle.d2.name, bundle.d2}};
    ProvenanceRelation p1 = extract_provenance(bundle.q1, db1);
    ProvenanceRelation p2 = extract_provenance(bundle.q2, db2);
    CanonicalRelation t1 = canonicalize(p1, bundle.matches, Side::Left);
    CanonicalRelation t2 = canonicalize(p2, bundle.matches, Side::Right);
    CardinalityReq req = cardinality_req(bundle.matches);

    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    // pairwise similarity
    std::vector<CandidatePair> cs, cp;
    double s1 = time_ms([&] { cs = compute_candidates(t1, t2, bundle.matches, 0.0, ExecMode::Serial); });
    double p1ms = time_ms([&] { cp = compute_candidates(t1, t2, bundle.matches, 0.0, ExecMode::Parallel); });
    row("pairwise similarity", s1, p1ms);
    if (cs.size() != cp.size()) {
        std::fprintf(stderr, "kernel outputs differ!\n");
        return 1;
    }

    // calibrated mapping + partitioned solve
    CalibrationConfig ccfg;
    ccfg.labels = bundle.gold.true_matches;
    TupleMapping mapping = calibrate_mapping(t1, t2, bundle.matches, ccfg, ExecMode::Parallel);
    PartitionConfig pcfg;
    pcfg.batch_size = 500;
    Priors priors;
    SolveResult rs, rp;
    double s2 = time_ms([&] {
        rs = solve_partitioned(t1, t2, mapping, priors, req, pcfg, {}, {{}, ExecMode::Serial});
    });
    double p2ms = time_ms([&] {
        rp = solve_partitioned(t1, t2, mapping, priors, req, pcfg, {}, {{}, ExecMode::Parallel});
    });
    row("partitioned block solves", s2, p2ms);
    if (rs.objective != rp.objective) {
        std::fprintf(stderr, "kernel outputs differ!\n");
        return 1;
    }

    // oracle enumeration on a guarded-size instance
    SynthConfig ocfg;
    ocfg.n = 7;
    ocfg.d = 0.3;
    ocfg.v = 8;
    ocfg.seed = seed;
    SynthBundle ob = generate(ocfg);
    Database odb1{{ob.d1.name, ob.d1}}, odb2{{ob.d2.name, ob.d2}};
    CanonicalRelation ot1 = canonicalize(extract_provenance(ob.q1, odb1), ob.matches, Side::Left);
    CanonicalRelation ot2 = canonicalize(extract_provenance(ob.q2, odb2), ob.matches, Side::Right);
    TupleMapping omap = raw_similarity_mapping(ot1, ot2, ob.matches, 0.0, ExecMode::Serial);
    while (omap.matches.size() > static_cast<size_t>(kOracleMaxMatches)) omap.matches.pop_back();
    CardinalityReq oreq = cardinality_req(ob.matches);
    ExplanationSet es, ep;
    double s3 = time_ms([&] {
        es = brute_force_optimal(ot1, ot2, omap, priors, oreq, {false, ExecMode::Serial});
    });
    double p3ms = time_ms([&] {
        ep = brute_force_optimal(ot1, ot2, omap, priors, oreq, {false, ExecMode::Parallel});
    });
    row("oracle enumeration", s3, p3ms);
    if (!(es.delta == ep.delta && es.evidence == ep.evidence)) {
        std::fprintf(stderr, "kernel outputs differ!\n");
        return 1;
    }
    return 0;
}
