#include "qdiff/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace qdiff {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<TupleMatch> sorted_desc(const TupleMapping& mapping) {
    std::vector<TupleMatch> ms = mapping.matches;
    std::stable_sort(ms.begin(), ms.end(), [](const TupleMatch& a, const TupleMatch& b) {
        if (a.p != b.p) return a.p > b.p;
        if (a.left != b.left) return a.left < b.left;
        return a.right < b.right;
    });
    return ms;
}

// Unmatched tuples become provenance-based explanations; components with
// unequal impacts get one value change on the hub side.
ExplanationSet derive_from_evidence(const std::vector<TupleMatch>& evidence,
                                    const CanonicalRelation& T1, const CanonicalRelation& T2,
                                    const CardinalityReq& req) {
    ExplanationSet e;
    const Side hub = req.hub_side();
    const int hubs = hub == Side::Right ? static_cast<int>(T2.tuples.size())
                                        : static_cast<int>(T1.tuples.size());
    std::vector<double> hub_sum(hubs, 0.0);
    std::vector<char> hub_used(hubs, 0);
    std::vector<char> ml(T1.tuples.size(), 0), mr(T2.tuples.size(), 0);
    for (const auto& m : evidence) {
        ml[m.left] = 1;
        mr[m.right] = 1;
        int h = hub == Side::Right ? m.right : m.left;
        hub_sum[h] += hub == Side::Right ? T1.tuples[m.left].impact : T2.tuples[m.right].impact;
        hub_used[h] = 1;
        e.evidence.push_back(m);
    }
    for (size_t i = 0; i < T1.tuples.size(); i++)
        if (!ml[i]) e.delta.push_back({Side::Left, static_cast<int>(i)});
    for (size_t j = 0; j < T2.tuples.size(); j++)
        if (!mr[j]) e.delta.push_back({Side::Right, static_cast<int>(j)});
    for (int h = 0; h < hubs; h++) {
        if (!hub_used[h]) continue;
        double own = hub == Side::Right ? T2.tuples[h].impact : T1.tuples[h].impact;
        if (std::abs(hub_sum[h] - own) > kImpactTolerance)
            e.value_changes.push_back({{hub, h}, hub_sum[h]});
    }
    e.normalize();
    return e;
}

BaselineResult finish(ExplanationSet e, const std::string& method, double t0,
                      const CanonicalRelation& T1, const CanonicalRelation& T2,
                      const TupleMapping& mapping, const Priors& priors,
                      const CardinalityReq& req) {
    BaselineResult r;
    r.expl = std::move(e);
    r.method = method;
    r.complete = is_complete(r.expl, req, T1, T2);
    r.objective = log_probability(r.expl, T1, T2, mapping, priors, req);
    r.wall_ms = now_ms() - t0;
    return r;
}

} // namespace

BaselineResult threshold_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                 const TupleMapping& mapping, double threshold,
                                 const CardinalityReq& req, const Priors& priors) {
    if (threshold < 0) fail(ErrorCode::Invalid, "threshold must be non-negative");
    double t0 = now_ms();

    // keep passing matches by descending probability while valid; equivalent
    // to dropping the lowest-probability violators
    std::vector<int> dl(T1.tuples.size(), 0), dr(T2.tuples.size(), 0);
    std::vector<TupleMatch> evidence;
    for (const auto& m : sorted_desc(mapping)) {
        if (m.p < threshold) break;
        if (req.left_deg1 && dl[m.left] >= 1) continue;
        if (req.right_deg1 && dr[m.right] >= 1) continue;
        dl[m.left]++;
        dr[m.right]++;
        evidence.push_back(m);
    }
    return finish(derive_from_evidence(evidence, T1, T2, req),
                  "threshold:" + std::to_string(threshold), t0, T1, T2, mapping, priors, req);
}

BaselineResult greedy_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req) {
    priors.validate();
    double t0 = now_ms();
    const double a = priors.log_removed();
    const double b = priors.log_unchanged();
    const double c = priors.log_changed();
    const int n1 = static_cast<int>(T1.tuples.size());
    const int n2 = static_cast<int>(T2.tuples.size());

    // union-find components over matched tuples with side-impact sums; the
    // completeness-relaxed score of a component is (members-1)*b plus b or c
    // depending on balance, an unmatched tuple scores a
    std::vector<int> parent(n1 + n2);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<double> sum_l(n1 + n2, 0), sum_r(n1 + n2, 0);
    std::vector<int> members(n1 + n2, 0);
    std::vector<int> dl(n1, 0), dr(n2, 0);

    auto comp_score = [&](int root) {
        double balance = std::abs(sum_l[root] - sum_r[root]) <= kImpactTolerance ? b : c;
        return (members[root] - 1) * b + balance;
    };

    std::vector<TupleMatch> evidence;
    for (const auto& m : sorted_desc(mapping)) {
        if (req.left_deg1 && dl[m.left] >= 1) continue;
        if (req.right_deg1 && dr[m.right] >= 1) continue;

        int gi = m.left, gj = n1 + m.right;
        int ri = find(gi), rj = find(gj);
        double before = 0, after = 0;
        double match_gain = std::log(m.p) - log_match_excluded(m.p);

        if (dl[m.left] == 0 && dr[m.right] == 0 && ri != rj) {
            // two fresh tuples form or extend nothing: new 2-member component
            before = 2 * a;
            double sl = T1.tuples[m.left].impact, sr = T2.tuples[m.right].impact;
            after = b + (std::abs(sl - sr) <= kImpactTolerance ? b : c);
        } else if (ri == rj) {
            // both endpoints already matched inside one component
            before = comp_score(ri);
            after = before;
        } else {
            auto state = [&](int g, int root, bool matched, double impact, bool left_side) {
                struct S {
                    double sl, sr;
                    int mem;
                    double score;
                } s{};
                if (matched) {
                    s.sl = sum_l[root], s.sr = sum_r[root], s.mem = members[root];
                    s.score = comp_score(root);
                } else {
                    s.sl = left_side ? impact : 0;
                    s.sr = left_side ? 0 : impact;
                    s.mem = 1;
                    s.score = a;
                }
                return s;
            };
            auto si = state(gi, ri, dl[m.left] > 0, T1.tuples[m.left].impact, true);
            auto sj = state(gj, rj, dr[m.right] > 0, T2.tuples[m.right].impact, false);
            before = si.score + sj.score;
            double sl = si.sl + sj.sl, sr = si.sr + sj.sr;
            after = (si.mem + sj.mem - 1) * b +
                    (std::abs(sl - sr) <= kImpactTolerance ? b : c);
        }
        if (after + match_gain <= before) continue; // no improvement

        // commit
        if (dl[m.left] == 0) {
            sum_l[ri] += T1.tuples[m.left].impact;
            members[ri] += 1;
        }
        if (dr[m.right] == 0) {
            sum_r[rj] += T2.tuples[m.right].impact;
            members[rj] += 1;
        }
        if (find(gi) != find(gj)) {
            int ra = find(gi), rb = find(gj);
            parent[ra] = rb;
            sum_l[rb] += sum_l[ra];
            sum_r[rb] += sum_r[ra];
            members[rb] += members[ra];
        }
        dl[m.left]++;
        dr[m.right]++;
        evidence.push_back(m);
    }

    return finish(derive_from_evidence(evidence, T1, T2, req), "greedy", t0, T1, T2, mapping,
                  priors, req);
}

BaselineResult exactcover_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                  const TupleMapping& mapping, const Priors& priors,
                                  const CardinalityReq& req) {
    double t0 = now_ms();
    const int n1 = static_cast<int>(T1.tuples.size());
    const int n2 = static_cast<int>(T2.tuples.size());

    // neighborhoods; a set covers its whole neighborhood when chosen
    std::vector<std::vector<int>> elems_of(n2); // per set: elements
    std::vector<std::vector<int>> sets_of(n1);  // per element: sets
    std::unordered_map<long long, const TupleMatch*> edge_of;
    edge_of.reserve(mapping.matches.size());
    for (const auto& m : mapping.matches) {
        elems_of[m.right].push_back(m.left);
        sets_of[m.left].push_back(m.right);
        edge_of[static_cast<long long>(m.left) * n2 + m.right] = &m;
    }

    // choose non-overlapping sets maximizing covered elements + chosen sets
    MilpModel model;
    std::vector<int> svar(n2, -1);
    for (int j = 0; j < n2; j++) {
        if (elems_of[j].empty()) continue; // empty sets stay unchosen
        svar[j] = model.add_var("s_" + std::to_string(j), VarKind::Binary, 0, 1,
                                1.0 + static_cast<double>(elems_of[j].size()));
    }
    for (int i = 0; i < n1; i++) {
        if (sets_of[i].empty()) continue;
        std::vector<LinTerm> terms;
        for (int j : sets_of[i]) terms.push_back({svar[j], 1});
        model.add_row(std::move(terms), RowSense::Le, 1);
    }

    ExplanationSet e;
    if (!model.vars.empty()) {
        Assignment a = solve(model);
        std::vector<char> covered(n1, 0);
        for (int j = 0; j < n2; j++) {
            if (svar[j] < 0 || a.values[svar[j]] < 0.5) {
                e.delta.push_back({Side::Right, j});
                continue;
            }
            for (int i : elems_of[j]) {
                covered[i] = 1;
                e.evidence.push_back(*edge_of[static_cast<long long>(i) * n2 + j]);
            }
        }
        for (int i = 0; i < n1; i++)
            if (!covered[i]) e.delta.push_back({Side::Left, i});
    } else {
        for (int i = 0; i < n1; i++) e.delta.push_back({Side::Left, i});
        for (int j = 0; j < n2; j++) e.delta.push_back({Side::Right, j});
    }
    e.normalize();
    return finish(std::move(e), "exactcover", t0, T1, T2, mapping, priors, req);
}

} // namespace qdiff
