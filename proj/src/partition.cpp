#include "qdiff/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace qdiff {

BipartiteGraph make_graph(const CanonicalRelation& T1, const CanonicalRelation& T2,
                          const TupleMapping& mapping) {
    BipartiteGraph g;
    g.n1 = static_cast<int>(T1.tuples.size());
    g.n2 = static_cast<int>(T2.tuples.size());
    for (const auto& m : mapping.matches) {
        if (m.left < 0 || m.left >= g.n1 || m.right < 0 || m.right >= g.n2)
            fail(ErrorCode::Invalid, "tuple match references a missing canonical row");
        if (!(m.p > 0))
            fail(ErrorCode::Invalid, "tuple match probability must be positive");
        g.edges.push_back({m.left, m.right, m.p});
    }
    return g;
}

void PartitionConfig::validate() const {
    if (!(0 <= theta_low && theta_low < theta_high && theta_high <= 1))
        fail(ErrorCode::Invalid, "need 0 <= theta_low < theta_high <= 1");
    if (!(reward > 1)) fail(ErrorCode::Invalid, "reward must exceed 1");
    if (batch_size < 2) fail(ErrorCode::Invalid, "batch_size must be at least 2");
}

int PartitionConfig::derived_k(int total_tuples) const {
    return std::max(1, (total_tuples + batch_size - 1) / batch_size);
}

double edge_weight(double p, const PartitionConfig& cfg) {
    if (p >= cfg.theta_high) return p * cfg.reward;
    if (p <= cfg.theta_low) return p / cfg.reward;
    return p;
}

namespace {

// union-find over left vertices [0, n1) and right vertices [n1, n1+n2)
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

Partition connected_components(const BipartiteGraph& g) {
    UnionFind uf(g.n1 + g.n2);
    for (const auto& e : g.edges) uf.unite(e.l, g.n1 + e.r);

    Partition part;
    part.assign_left.assign(g.n1, -1);
    part.assign_right.assign(g.n2, -1);
    std::unordered_map<int, int> block_of;
    auto block_for = [&](int root) {
        auto [it, fresh] = block_of.emplace(root, static_cast<int>(part.blocks.size()));
        if (fresh) part.blocks.emplace_back();
        return it->second;
    };
    for (int v = 0; v < g.n1; v++) {
        int b = block_for(uf.find(v));
        part.blocks[b].left.push_back(v);
        part.assign_left[v] = b;
    }
    for (int v = 0; v < g.n2; v++) {
        int b = block_for(uf.find(g.n1 + v));
        part.blocks[b].right.push_back(v);
        part.assign_right[v] = b;
    }
    return part;
}

CoarseGraph pre_partition(const BipartiteGraph& g, const PartitionConfig& cfg) {
    cfg.validate();
    // FindHighProbTuplesDFS: merge across edges with p >= theta_high
    UnionFind uf(g.n1 + g.n2);
    for (const auto& e : g.edges)
        if (e.p >= cfg.theta_high) uf.unite(e.l, g.n1 + e.r);

    CoarseGraph cg;
    std::unordered_map<int, int> super_of;
    auto super_for = [&](int root) {
        auto [it, fresh] = super_of.emplace(root, cg.vertex_count());
        if (fresh) {
            cg.left_members.emplace_back();
            cg.right_members.emplace_back();
        }
        return it->second;
    };
    for (int v = 0; v < g.n1; v++) cg.left_members[super_for(uf.find(v))].push_back(v);
    for (int v = 0; v < g.n2; v++) cg.right_members[super_for(uf.find(g.n1 + v))].push_back(v);

    // UpdateEdgeWeight: rewire the remaining matches, raw probabilities
    // summed per super pair (capped at 1), then reweighted
    std::map<std::pair<int, int>, double> psum;
    for (const auto& e : g.edges) {
        if (e.p >= cfg.theta_high) continue; // merged away
        int u = super_of[uf.find(e.l)];
        int v = super_of[uf.find(g.n1 + e.r)];
        if (u == v) continue; // internal after merging
        psum[{std::min(u, v), std::max(u, v)}] += e.p;
    }
    for (const auto& [uv, sum] : psum) {
        double capped = std::min(sum, 1.0);
        cg.edges.push_back({uv.first, uv.second, edge_weight(capped, cfg), capped});
    }
    return cg;
}

CoarseGraph coarse_identity(const BipartiteGraph& g, const PartitionConfig& cfg) {
    CoarseGraph cg;
    cg.left_members.resize(g.n1 + g.n2);
    cg.right_members.resize(g.n1 + g.n2);
    for (int v = 0; v < g.n1; v++) cg.left_members[v].push_back(v);
    for (int v = 0; v < g.n2; v++) cg.right_members[g.n1 + v].push_back(v);
    std::map<std::pair<int, int>, double> psum;
    for (const auto& e : g.edges) psum[{e.l, g.n1 + e.r}] += e.p;
    for (const auto& [uv, sum] : psum) {
        double capped = std::min(sum, 1.0);
        cg.edges.push_back({uv.first, uv.second, edge_weight(capped, cfg), capped});
    }
    return cg;
}

Partition graph_partition(const CoarseGraph& cg, int k, int l_max) {
    if (k < 1) fail(ErrorCode::Invalid, "k must be at least 1");
    if (l_max < 2) fail(ErrorCode::Invalid, "L_max must be at least 2");
    const int V = cg.vertex_count();
    for (int v = 0; v < V; v++)
        if (cg.size_of(v) > l_max)
            fail(ErrorCode::Infeasible,
                 "super-vertex " + std::to_string(v) + " holds " + std::to_string(cg.size_of(v)) +
                     " tuples, above L_max = " + std::to_string(l_max) +
                     "; raise L_max or lower theta_high");

    // adjacency with weights
    std::vector<std::vector<std::pair<int, double>>> adj(V);
    for (const auto& e : cg.edges) {
        adj[e.u].push_back({e.v, e.weight});
        adj[e.v].push_back({e.u, e.weight});
    }

    // components ordered by total size descending (stable: by smallest member)
    UnionFind uf(V);
    for (const auto& e : cg.edges) uf.unite(e.u, e.v);
    std::map<int, std::vector<int>> comps;
    for (int v = 0; v < V; v++) comps[uf.find(v)].push_back(v);
    std::vector<std::vector<int>> order;
    for (auto& [root, verts] : comps) order.push_back(std::move(verts));
    std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        long long sa = 0, sb = 0;
        for (int v : a) sa += cg.size_of(v);
        for (int v : b) sb += cg.size_of(v);
        if (sa != sb) return sa > sb;
        return a.front() < b.front();
    });

    std::vector<int> assign(V, -1);
    std::vector<long long> load(k, 0);

    // greedy placement: per component, vertices in BFS order from the largest
    // vertex; each goes to the block minimizing the incremental weighted cut
    for (const auto& comp : order) {
        int start = comp.front();
        for (int v : comp)
            if (cg.size_of(v) > cg.size_of(start) || (cg.size_of(v) == cg.size_of(start) && v < start))
                start = v;
        std::vector<int> bfs{start};
        std::vector<char> seen(V, 0);
        seen[start] = 1;
        for (size_t head = 0; head < bfs.size(); head++) {
            int v = bfs[head];
            std::vector<std::pair<int, double>> nbrs = adj[v];
            std::sort(nbrs.begin(), nbrs.end());
            for (const auto& [w, _] : nbrs)
                if (!seen[w]) seen[w] = 1, bfs.push_back(w);
        }
        for (int v : comp)
            if (!seen[v]) bfs.push_back(v); // isolated safety net (shouldn't trigger)

        for (int v : bfs) {
            // cut increase of placing v into block b = total adjacent placed
            // weight - weight into b
            std::vector<double> weight_to(k, 0.0);
            for (const auto& [w, wt] : adj[v])
                if (assign[w] >= 0) weight_to[assign[w]] += wt;
            int best = -1;
            double best_gain = -1;
            for (int b = 0; b < k; b++) {
                if (load[b] + cg.size_of(v) > l_max) continue;
                if (weight_to[b] > best_gain + 1e-15 ||
                    (best >= 0 && weight_to[b] > best_gain - 1e-15 && load[b] < load[best])) {
                    best = b;
                    best_gain = weight_to[b];
                }
            }
            if (best < 0) {
                // bin-packing corner: open a fresh block
                load.push_back(0);
                weight_to.push_back(0);
                best = k++;
            }
            assign[v] = best;
            load[best] += cg.size_of(v);
        }
    }

    // one boundary refinement pass
    for (int v = 0; v < V; v++) {
        std::vector<double> weight_to(k, 0.0);
        for (const auto& [w, wt] : adj[v])
            if (assign[w] >= 0) weight_to[assign[w]] += wt;
        int cur = assign[v];
        int best = cur;
        double best_gain = 0;
        for (const auto& [w, _] : adj[v]) {
            int b = assign[w];
            if (b == cur) continue;
            if (load[b] + cg.size_of(v) > l_max) continue;
            double gain = weight_to[b] - weight_to[cur];
            if (gain > best_gain + 1e-15) {
                best = b;
                best_gain = gain;
            }
        }
        if (best != cur) {
            load[cur] -= cg.size_of(v);
            load[best] += cg.size_of(v);
            assign[v] = best;
        }
    }

    // expand to original tuples, dropping empty blocks
    std::vector<int> remap(k, -1);
    Partition part;
    for (int b = 0; b < k; b++) {
        bool used = false;
        for (int v = 0; v < V; v++)
            if (assign[v] == b) used = true;
        if (used) {
            remap[b] = static_cast<int>(part.blocks.size());
            part.blocks.emplace_back();
        }
    }
    int n1 = 0, n2 = 0;
    for (int v = 0; v < V; v++) {
        n1 += static_cast<int>(cg.left_members[v].size());
        n2 += static_cast<int>(cg.right_members[v].size());
    }
    part.assign_left.assign(n1, -1);
    part.assign_right.assign(n2, -1);
    for (int v = 0; v < V; v++) {
        int b = remap[assign[v]];
        for (int t : cg.left_members[v]) {
            part.blocks[b].left.push_back(t);
            part.assign_left[t] = b;
        }
        for (int t : cg.right_members[v]) {
            part.blocks[b].right.push_back(t);
            part.assign_right[t] = b;
        }
    }
    for (auto& blk : part.blocks) {
        std::sort(blk.left.begin(), blk.left.end());
        std::sort(blk.right.begin(), blk.right.end());
    }
    return part;
}

// ---------------------------------------------------------------------------
// Solving

namespace {

CanonicalRelation induce(const CanonicalRelation& T, const std::vector<int>& rows) {
    CanonicalRelation out;
    out.side = T.side;
    out.query_kind = T.query_kind;
    out.key_attrs = T.key_attrs;
    out.integral_impacts = T.integral_impacts;
    for (int r : rows) out.tuples.push_back(T.tuples[r]);
    return out;
}

void append_remapped(ExplanationSet& into, const ExplanationSet& from,
                     const std::vector<int>& left_rows, const std::vector<int>& right_rows) {
    auto orig = [&](const RowRef& r) {
        return RowRef{r.side, r.side == Side::Left ? left_rows[r.index] : right_rows[r.index]};
    };
    for (const auto& r : from.delta) into.delta.push_back(orig(r));
    for (const auto& vc : from.value_changes) into.value_changes.push_back({orig(vc.row), vc.new_impact});
    for (const auto& m : from.evidence)
        into.evidence.push_back({left_rows[m.left], right_rows[m.right], m.p});
}

// the only complete option for an unmatched tuple under coverage semantics is
// removal; without coverage, keeping it with impact 0 is allowed when better
void explain_isolated(ExplanationSet& e, Side side, int row, double impact, const Priors& priors,
                      bool coverage) {
    if (!coverage) {
        double keep = impact == 0.0 ? priors.log_unchanged() : priors.log_changed();
        if (keep >= priors.log_removed()) {
            if (impact != 0.0) e.value_changes.push_back({{side, row}, 0.0});
            return;
        }
    }
    e.delta.push_back({side, row});
}

struct ComponentTask {
    std::vector<int> left_rows, right_rows;
    std::vector<TupleMatch> matches; // original indices
};

std::vector<ComponentTask> split_components(int n1, int n2, const std::vector<int>& left_rows,
                                            const std::vector<int>& right_rows,
                                            const std::vector<TupleMatch>& matches) {
    UnionFind uf(n1 + n2);
    for (const auto& m : matches) uf.unite(m.left, n1 + m.right);

    std::unordered_map<int, int> comp_of;
    std::vector<ComponentTask> tasks;
    auto comp_for = [&](int root) {
        auto [it, fresh] = comp_of.emplace(root, static_cast<int>(tasks.size()));
        if (fresh) tasks.emplace_back();
        return it->second;
    };
    for (int v : left_rows) tasks[comp_for(uf.find(v))].left_rows.push_back(v);
    for (int v : right_rows) tasks[comp_for(uf.find(n1 + v))].right_rows.push_back(v);
    for (const auto& m : matches) tasks[comp_of[uf.find(m.left)]].matches.push_back(m);
    return tasks;
}

SolveResult solve_component_set(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                const std::vector<ComponentTask>& tasks, const Priors& priors,
                                const CardinalityReq& req, const SolverConfig& scfg,
                                const SolveOptions& opts, const TupleMapping& full_mapping) {
    SolveResult res;
    res.status = SolverStatus::Optimal;
    double solver_obj = 0;

    for (const auto& task : tasks) {
        if (task.matches.empty()) {
            for (int r : task.left_rows)
                explain_isolated(res.expl, Side::Left, r, T1.tuples[r].impact, priors,
                                 opts.milp.coverage);
            for (int r : task.right_rows)
                explain_isolated(res.expl, Side::Right, r, T2.tuples[r].impact, priors,
                                 opts.milp.coverage);
            continue;
        }
        CanonicalRelation sub1 = induce(T1, task.left_rows);
        CanonicalRelation sub2 = induce(T2, task.right_rows);
        std::unordered_map<int, int> lidx, ridx;
        for (size_t i = 0; i < task.left_rows.size(); i++) lidx[task.left_rows[i]] = static_cast<int>(i);
        for (size_t i = 0; i < task.right_rows.size(); i++) ridx[task.right_rows[i]] = static_cast<int>(i);
        TupleMapping sub_map;
        for (const auto& m : task.matches) sub_map.matches.push_back({lidx[m.left], ridx[m.right], m.p});

        MilpModel model = build_milp(sub1, sub2, sub_map, priors, req, opts.milp);
        Assignment a = solve(model, scfg);
        if (a.status == SolverStatus::Infeasible || a.values.empty()) {
            // cannot happen for well-formed inputs: removing everything is
            // always feasible; keep going with that fallback
            res.fallback_used = true;
            for (int r : task.left_rows) res.expl.delta.push_back({Side::Left, r});
            for (int r : task.right_rows) res.expl.delta.push_back({Side::Right, r});
            continue;
        }
        if (a.status == SolverStatus::BoundLimit) res.status = SolverStatus::BoundLimit;
        solver_obj += a.objective;
        append_remapped(res.expl, decode_solution(model, a), task.left_rows, task.right_rows);
    }

    res.expl.normalize();
    res.solver_objective = solver_obj;
    res.objective = log_probability(res.expl, T1, T2, full_mapping, priors, req);
    return res;
}

} // namespace

SolveResult solve_unpartitioned(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                const TupleMapping& mapping, const Priors& priors,
                                const CardinalityReq& req, const SolverConfig& scfg,
                                const SolveOptions& opts) {
    SolveResult res;
    MilpModel model = build_milp(T1, T2, mapping, priors, req, opts.milp);
    Assignment a = solve(model, scfg);
    if (a.status == SolverStatus::Infeasible || a.values.empty()) {
        if (a.status != SolverStatus::Infeasible) {
            // limit hit before any incumbent; fall back to all-removed
            res.fallback_used = true;
            for (size_t i = 0; i < T1.tuples.size(); i++)
                res.expl.delta.push_back({Side::Left, static_cast<int>(i)});
            for (size_t j = 0; j < T2.tuples.size(); j++)
                res.expl.delta.push_back({Side::Right, static_cast<int>(j)});
            res.expl.normalize();
            res.status = SolverStatus::BoundLimit;
            res.objective = log_probability(res.expl, T1, T2, mapping, priors, req);
            return res;
        }
        fail(ErrorCode::Infeasible, "MILP reported infeasible");
    }
    res.expl = decode_solution(model, a);
    res.status = a.status;
    res.solver_objective = a.objective;
    res.objective = log_probability(res.expl, T1, T2, mapping, priors, req);
    return res;
}

SolveResult solve_exact(const CanonicalRelation& T1, const CanonicalRelation& T2,
                        const TupleMapping& mapping, const Priors& priors,
                        const CardinalityReq& req, const SolverConfig& scfg,
                        const SolveOptions& opts) {
    std::vector<int> all_left(T1.tuples.size()), all_right(T2.tuples.size());
    std::iota(all_left.begin(), all_left.end(), 0);
    std::iota(all_right.begin(), all_right.end(), 0);
    auto tasks = split_components(static_cast<int>(T1.tuples.size()),
                                  static_cast<int>(T2.tuples.size()), all_left, all_right,
                                  mapping.matches);
    return solve_component_set(T1, T2, tasks, priors, req, scfg, opts, mapping);
}

SolveResult solve_partitioned(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req, const PartitionConfig& pcfg,
                              const SolverConfig& scfg, const SolveOptions& opts) {
    pcfg.validate();
    const int n1 = static_cast<int>(T1.tuples.size());
    const int n2 = static_cast<int>(T2.tuples.size());
    const int total = n1 + n2;
    const int k = pcfg.derived_k(total);
    if (k <= 1 || pcfg.batch_size >= total)
        return solve_unpartitioned(T1, T2, mapping, priors, req, scfg, opts);

    BipartiteGraph g = make_graph(T1, T2, mapping);
    CoarseGraph cg = pre_partition(g, pcfg);
    Partition part = graph_partition(cg, k, pcfg.l_max());

    // block-internal matches only; cut matches are left unselected
    std::vector<std::vector<TupleMatch>> block_matches(part.blocks.size());
    for (const auto& m : mapping.matches) {
        int bl = part.assign_left[m.left];
        if (bl == part.assign_right[m.right]) block_matches[bl].push_back(m);
    }

    std::vector<SolveResult> block_results(part.blocks.size());
    auto run_block = [&](int b) {
        auto tasks = split_components(n1, n2, part.blocks[b].left, part.blocks[b].right,
                                      block_matches[b]);
        SolveOptions block_opts = opts;
        block_opts.mode = ExecMode::Serial;
        block_results[b] = solve_component_set(T1, T2, tasks, priors, req, scfg, block_opts,
                                               TupleMapping{});
    };

    if (opts.mode == ExecMode::Parallel) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
        for (int b = 0; b < static_cast<int>(part.blocks.size()); b++) run_block(b);
    } else {
        for (int b = 0; b < static_cast<int>(part.blocks.size()); b++) run_block(b);
    }

    SolveResult res;
    res.status = SolverStatus::Optimal;
    res.blocks = static_cast<int>(part.blocks.size());
    for (const auto& br : block_results) {
        res.expl.delta.insert(res.expl.delta.end(), br.expl.delta.begin(), br.expl.delta.end());
        res.expl.value_changes.insert(res.expl.value_changes.end(), br.expl.value_changes.begin(),
                                      br.expl.value_changes.end());
        res.expl.evidence.insert(res.expl.evidence.end(), br.expl.evidence.begin(),
                                 br.expl.evidence.end());
        res.solver_objective += br.solver_objective;
        if (br.status == SolverStatus::BoundLimit) res.status = SolverStatus::BoundLimit;
        res.fallback_used |= br.fallback_used;
    }
    res.expl.normalize();
    res.objective = log_probability(res.expl, T1, T2, mapping, priors, req);
    return res;
}

} // namespace qdiff
