#include "qdiff/probability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace qdiff {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void Priors::validate() const {
    if (!(alpha > 0.5 && alpha <= 1.0) || !(beta > 0.5 && beta <= 1.0))
        fail(ErrorCode::Invalid, "priors alpha and beta must lie in (0.5, 1]");
}

double Priors::log_removed() const { return std::log(std::max(1.0 - alpha, kOneMinusPFloor)); }
double Priors::log_unchanged() const { return std::log(alpha) + std::log(beta); }
double Priors::log_changed() const {
    return std::log(alpha) + std::log(std::max(1.0 - beta, kOneMinusPFloor));
}

double log_match_excluded(double p) { return std::log(std::max(1.0 - p, kOneMinusPFloor)); }

void ExplanationSet::normalize() {
    std::sort(delta.begin(), delta.end());
    delta.erase(std::unique(delta.begin(), delta.end()), delta.end());
    std::sort(value_changes.begin(), value_changes.end(),
              [](const ValueChange& a, const ValueChange& b) { return a.row < b.row; });
    std::sort(evidence.begin(), evidence.end());
}

bool ExplanationSet::in_delta(const RowRef& r) const {
    return std::binary_search(delta.begin(), delta.end(), r);
}

const ValueChange* ExplanationSet::change_for(const RowRef& r) const {
    auto it = std::lower_bound(value_changes.begin(), value_changes.end(), r,
                               [](const ValueChange& v, const RowRef& key) { return v.row < key; });
    if (it != value_changes.end() && it->row == r) return &*it;
    return nullptr;
}

bool is_valid_mapping(const std::vector<TupleMatch>& evidence, const CardinalityReq& req,
                      const CanonicalRelation& T1, const CanonicalRelation& T2) {
    std::vector<int> dl(T1.tuples.size(), 0), dr(T2.tuples.size(), 0);
    std::set<std::pair<int, int>> seen;
    for (const auto& m : evidence) {
        if (m.left < 0 || m.left >= static_cast<int>(T1.tuples.size())) return false;
        if (m.right < 0 || m.right >= static_cast<int>(T2.tuples.size())) return false;
        if (!seen.insert({m.left, m.right}).second) return false;
        dl[m.left]++;
        dr[m.right]++;
    }
    if (req.left_deg1)
        for (int d : dl)
            if (d > 1) return false;
    if (req.right_deg1)
        for (int d : dr)
            if (d > 1) return false;
    return true;
}

RefinedState apply_explanations(const ExplanationSet& e, const CanonicalRelation& T1,
                                const CanonicalRelation& T2) {
    RefinedState st;
    st.kept_left.assign(T1.tuples.size(), 1);
    st.kept_right.assign(T2.tuples.size(), 1);
    st.impact_left.resize(T1.tuples.size());
    st.impact_right.resize(T2.tuples.size());
    for (size_t i = 0; i < T1.tuples.size(); i++) st.impact_left[i] = T1.tuples[i].impact;
    for (size_t j = 0; j < T2.tuples.size(); j++) st.impact_right[j] = T2.tuples[j].impact;
    for (const auto& r : e.delta)
        (r.side == Side::Left ? st.kept_left : st.kept_right).at(r.index) = 0;
    for (const auto& vc : e.value_changes) {
        auto& impacts = vc.row.side == Side::Left ? st.impact_left : st.impact_right;
        impacts.at(vc.row.index) = vc.new_impact;
    }
    return st;
}

bool impact_equality_holds(const ExplanationSet& e, const CanonicalRelation& T1,
                           const CanonicalRelation& T2) {
    RefinedState st = apply_explanations(e, T1, T2);
    const size_t n1 = T1.tuples.size(), n2 = T2.tuples.size();

    // union-find over left vertices [0, n1) and right vertices [n1, n1+n2)
    std::vector<int> parent(n1 + n2);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& m : e.evidence) {
        if (!st.kept_left.at(m.left) || !st.kept_right.at(m.right)) return false;
        parent[find(m.left)] = find(static_cast<int>(n1) + m.right);
    }

    std::vector<double> sum_left(n1 + n2, 0.0), sum_right(n1 + n2, 0.0);
    std::vector<char> touched(n1 + n2, 0);
    for (size_t i = 0; i < n1; i++) {
        if (!st.kept_left[i]) continue;
        int r = find(static_cast<int>(i));
        sum_left[r] += st.impact_left[i];
        touched[r] = 1;
    }
    for (size_t j = 0; j < n2; j++) {
        if (!st.kept_right[j]) continue;
        int r = find(static_cast<int>(n1 + j));
        sum_right[r] += st.impact_right[j];
        touched[r] = 1;
    }
    for (size_t v = 0; v < n1 + n2; v++) {
        if (!touched[v] || find(static_cast<int>(v)) != static_cast<int>(v)) continue;
        if (std::abs(sum_left[v] - sum_right[v]) > kImpactTolerance) return false;
    }
    // an unmatched kept tuple is a singleton component: the opposite sum is 0,
    // so it passes only with refined impact 0
    return true;
}

namespace {

// Structural sanity shared by log_probability: rows exist, delta and value
// changes are disjoint, evidence is a sub-multiset of the mapping and avoids
// removed rows.
bool structurally_sound(const ExplanationSet& e, const CanonicalRelation& T1,
                        const CanonicalRelation& T2, const TupleMapping& mapping) {
    auto row_ok = [&](const RowRef& r) {
        size_t n = r.side == Side::Left ? T1.tuples.size() : T2.tuples.size();
        return r.index >= 0 && static_cast<size_t>(r.index) < n;
    };
    for (const auto& r : e.delta)
        if (!row_ok(r)) return false;
    for (const auto& vc : e.value_changes) {
        if (!row_ok(vc.row)) return false;
        if (e.in_delta(vc.row)) return false; // Pr(t | t in delta, t in deltaV) = 0
    }
    std::set<std::pair<int, int>> pool;
    for (const auto& m : mapping.matches) pool.insert({m.left, m.right});
    std::set<std::pair<int, int>> used;
    for (const auto& m : e.evidence) {
        if (!pool.count({m.left, m.right})) return false;
        if (!used.insert({m.left, m.right}).second) return false;
        if (e.in_delta({Side::Left, m.left}) || e.in_delta({Side::Right, m.right})) return false;
    }
    return true;
}

} // namespace

bool is_complete(const ExplanationSet& e, const CardinalityReq& req, const CanonicalRelation& T1,
                 const CanonicalRelation& T2) {
    return is_valid_mapping(e.evidence, req, T1, T2) && impact_equality_holds(e, T1, T2);
}

double log_probability(const ExplanationSet& e, const CanonicalRelation& T1,
                       const CanonicalRelation& T2, const TupleMapping& mapping,
                       const Priors& priors, const CardinalityReq& req) {
    priors.validate();
    if (!structurally_sound(e, T1, T2, mapping)) return kNegInf;
    if (!is_complete(e, req, T1, T2)) return kNegInf;

    const double a = priors.log_removed();
    const double b = priors.log_unchanged();
    const double c = priors.log_changed();

    double total = 0;
    auto tuple_factor = [&](Side side, int idx) {
        RowRef r{side, idx};
        if (e.in_delta(r)) return a;
        return e.change_for(r) ? c : b;
    };
    for (size_t i = 0; i < T1.tuples.size(); i++) total += tuple_factor(Side::Left, static_cast<int>(i));
    for (size_t j = 0; j < T2.tuples.size(); j++) total += tuple_factor(Side::Right, static_cast<int>(j));

    std::set<std::pair<int, int>> selected;
    for (const auto& m : e.evidence) selected.insert({m.left, m.right});
    for (const auto& m : mapping.matches) {
        if (selected.count({m.left, m.right}))
            total += std::log(m.p);
        else
            total += log_match_excluded(m.p);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

namespace {

struct OracleCandidate {
    double score = kNegInf;
    ExplanationSet expl;
    bool valid = false;
};

// total order: higher score first, then lexicographically smaller sets
bool candidate_better(const OracleCandidate& a, const OracleCandidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.score != b.score) return a.score > b.score;
    if (a.expl.delta != b.expl.delta) return a.expl.delta < b.expl.delta;
    if (!(a.expl.value_changes == b.expl.value_changes)) {
        return std::lexicographical_compare(a.expl.value_changes.begin(), a.expl.value_changes.end(),
                                            b.expl.value_changes.begin(), b.expl.value_changes.end());
    }
    return std::lexicographical_compare(a.expl.evidence.begin(), a.expl.evidence.end(),
                                        b.expl.evidence.begin(), b.expl.evidence.end());
}

} // namespace

ExplanationSet brute_force_optimal(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                   const TupleMapping& mapping, const Priors& priors,
                                   const CardinalityReq& req, const OracleOptions& opts) {
    priors.validate();
    const int n1 = static_cast<int>(T1.tuples.size());
    const int n2 = static_cast<int>(T2.tuples.size());
    const int m = static_cast<int>(mapping.matches.size());
    if (n1 + n2 > kOracleMaxTuples || m > kOracleMaxMatches)
        fail(ErrorCode::Invalid, "instance too large for the brute-force oracle (" +
                                     std::to_string(n1 + n2) + " tuples, " + std::to_string(m) +
                                     " matches)");

    const double a = priors.log_removed();
    const double b = priors.log_unchanged();
    const double c = priors.log_changed();
    const Side hub = req.hub_side();

    std::vector<double> logp(m), log1mp(m);
    double all_excluded = 0;
    for (int k = 0; k < m; k++) {
        logp[k] = std::log(mapping.matches[k].p);
        log1mp[k] = log_match_excluded(mapping.matches[k].p);
        all_excluded += log1mp[k];
    }

    auto evaluate_mask = [&](std::uint32_t mask) {
        OracleCandidate cand;
        // validity: degree <= 1 on constrained sides
        std::vector<int> dl(n1, 0), dr(n2, 0);
        for (int k = 0; k < m; k++) {
            if (!(mask >> k & 1u)) continue;
            const auto& e = mapping.matches[k];
            dl[e.left]++;
            dr[e.right]++;
            if (req.left_deg1 && dl[e.left] > 1) return cand;
            if (req.right_deg1 && dr[e.right] > 1) return cand;
        }

        double score = all_excluded;
        ExplanationSet expl;

        // per-hub component sums; leaves keep their impacts, an unbalanced
        // component corrects the hub (one value change)
        std::vector<double> hub_sum(hub == Side::Right ? n2 : n1, 0.0);
        std::vector<char> hub_used(hub_sum.size(), 0);
        for (int k = 0; k < m; k++) {
            if (!(mask >> k & 1u)) continue;
            const auto& e = mapping.matches[k];
            score += logp[k] - log1mp[k];
            int h = hub == Side::Right ? e.right : e.left;
            double leaf_impact =
                hub == Side::Right ? T1.tuples[e.left].impact : T2.tuples[e.right].impact;
            hub_sum[h] += leaf_impact;
            hub_used[h] = 1;
            expl.evidence.push_back(e);
        }

        // matched tuples
        for (size_t h = 0; h < hub_sum.size(); h++) {
            if (!hub_used[h]) continue;
            double own =
                hub == Side::Right ? T2.tuples[h].impact : T1.tuples[h].impact;
            if (std::abs(hub_sum[h] - own) > kImpactTolerance) {
                expl.value_changes.push_back({{hub, static_cast<int>(h)}, hub_sum[h]});
                score += c;
            } else {
                score += b;
            }
        }
        // leaf side has degree <= 1, so one kept-unchanged factor per edge
        for (int k = 0; k < m; k++) {
            if (!(mask >> k & 1u)) continue;
            score += b;
        }

        // unmatched tuples: remove, or (lenient mode) keep with impact 0
        auto handle_unmatched = [&](Side side, int idx, double impact) {
            double keep = impact == 0.0 ? b : c;
            if (opts.allow_unmatched_kept && keep >= a) {
                if (impact != 0.0)
                    expl.value_changes.push_back({{side, idx}, 0.0});
                score += keep;
            } else {
                expl.delta.push_back({side, idx});
                score += a;
            }
        };
        for (int i = 0; i < n1; i++)
            if (dl[i] == 0) handle_unmatched(Side::Left, i, T1.tuples[i].impact);
        for (int j = 0; j < n2; j++)
            if (dr[j] == 0) handle_unmatched(Side::Right, j, T2.tuples[j].impact);

        expl.normalize();
        cand.score = score;
        cand.expl = std::move(expl);
        cand.valid = true;
        return cand;
    };

    const std::uint64_t total = 1ull << m;
    OracleCandidate best;

    if (opts.mode == ExecMode::Parallel) {
#if defined(_OPENMP)
#pragma omp parallel
        {
            OracleCandidate local;
#pragma omp for schedule(static)
            for (long long mask = 0; mask < static_cast<long long>(total); mask++) {
                OracleCandidate cand = evaluate_mask(static_cast<std::uint32_t>(mask));
                if (candidate_better(cand, local)) local = std::move(cand);
            }
#pragma omp critical
            {
                if (candidate_better(local, best)) best = std::move(local);
            }
        }
#else
        for (std::uint64_t mask = 0; mask < total; mask++) {
            OracleCandidate cand = evaluate_mask(static_cast<std::uint32_t>(mask));
            if (candidate_better(cand, best)) best = std::move(cand);
        }
#endif
    } else {
        for (std::uint64_t mask = 0; mask < total; mask++) {
            OracleCandidate cand = evaluate_mask(static_cast<std::uint32_t>(mask));
            if (candidate_better(cand, best)) best = std::move(cand);
        }
    }

    if (!best.valid) fail(ErrorCode::Infeasible, "oracle found no complete explanation set");
    return best.expl;
}

} // namespace qdiff
