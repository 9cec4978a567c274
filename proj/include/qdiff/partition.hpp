#pragma once

#include <vector>

#include "qdiff/milp.hpp"
#include "qdiff/solver.hpp"

namespace qdiff {

struct BipartiteGraph {
    int n1 = 0, n2 = 0;
    struct Edge {
        int l = 0, r = 0;
        double p = 1.0;
    };
    std::vector<Edge> edges;
};

BipartiteGraph make_graph(const CanonicalRelation& T1, const CanonicalRelation& T2,
                          const TupleMapping& mapping);

struct PartitionConfig {
    double theta_low = 0.1;
    double theta_high = 0.9;
    double reward = 100.0;
    int batch_size = 1000;

    void validate() const;
    int derived_k(int total_tuples) const;
    int l_max() const { return batch_size; }
};

struct Partition {
    struct Block {
        std::vector<int> left, right; // original tuple indices
    };
    std::vector<Block> blocks;
    std::vector<int> assign_left, assign_right; // vertex -> block index
};

Partition connected_components(const BipartiteGraph& g);

// Probability-aware weight: matches the solver's reluctance to cut
// high-probability matches.
double edge_weight(double p, const PartitionConfig& cfg);

// Output of the pre-partitioning pass: tuples connected by high-probability
// matches merged into super-vertices, remaining matches rewired and
// reweighted.
struct CoarseGraph {
    std::vector<std::vector<int>> left_members;  // per super-vertex
    std::vector<std::vector<int>> right_members; // per super-vertex
    struct Edge {
        int u = 0, v = 0;
        double weight = 0;
        double p_sum = 0; // raw probability mass, capped at 1 before weighting
    };
    std::vector<Edge> edges;

    int size_of(int v) const {
        return static_cast<int>(left_members[v].size() + right_members[v].size());
    }
    int vertex_count() const { return static_cast<int>(left_members.size()); }
};

CoarseGraph pre_partition(const BipartiteGraph& g, const PartitionConfig& cfg);

// Trivial coarse view (singleton super-vertices) for partitioning a raw graph.
CoarseGraph coarse_identity(const BipartiteGraph& g, const PartitionConfig& cfg);

// Heuristic balanced partitioning: greedy placement by descending component
// size minimizing the incremental weighted cut, one boundary refinement pass.
// Feasible w.r.t. the L_max bound; not guaranteed optimal.
Partition graph_partition(const CoarseGraph& cg, int k, int l_max);

struct SolveOptions {
    MilpOptions milp;
    ExecMode mode = ExecMode::Parallel;
};

struct SolveResult {
    ExplanationSet expl;
    double objective = 0;       // log-probability over the full instance
    double solver_objective = 0; // raw incumbent objective(s)
    SolverStatus status = SolverStatus::Infeasible;
    int blocks = 1;
    bool fallback_used = false;
};

// Algorithm 1 verbatim: one MILP over the whole instance.
SolveResult solve_unpartitioned(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                const TupleMapping& mapping, const Priors& priors,
                                const CardinalityReq& req, const SolverConfig& scfg = {},
                                const SolveOptions& opts = {});

// Exact solve of a sub-instance: split into connected components, solve each
// component's MILP, merge.
SolveResult solve_exact(const CanonicalRelation& T1, const CanonicalRelation& T2,
                        const TupleMapping& mapping, const Priors& priors,
                        const CardinalityReq& req, const SolverConfig& scfg = {},
                        const SolveOptions& opts = {});

// Algorithm 3: pre-partition, balanced partitioning, per-block solves (in
// parallel), deterministic merge. Cut matches are excluded and score as such
// in the reported objective. Falls back to the unpartitioned solve when a
// single block suffices.
SolveResult solve_partitioned(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req, const PartitionConfig& pcfg,
                              const SolverConfig& scfg = {}, const SolveOptions& opts = {});

} // namespace qdiff
