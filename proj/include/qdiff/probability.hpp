#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdiff/matching.hpp"

namespace qdiff {

// A priori probabilities that a tuple is covered by both queries (alpha) and
// carries a correct impact (beta). Both live in (0.5, 1].
struct Priors {
    double alpha = 0.9;
    double beta = 0.9;

    void validate() const;
    double log_removed() const;   // a = log(1 - alpha)
    double log_unchanged() const; // b = log(alpha) + log(beta)
    double log_changed() const;   // c = log(alpha) + log(1 - beta)
};

// Excluded matches contribute log(1 - p); exact p = 1 is clamped so feasible
// solutions stay finite.
inline constexpr double kOneMinusPFloor = 1e-12;
double log_match_excluded(double p);

struct RowRef {
    Side side = Side::Left;
    int index = 0;
};

inline bool operator<(const RowRef& a, const RowRef& b) {
    if (a.side != b.side) return a.side == Side::Left;
    return a.index < b.index;
}
inline bool operator==(const RowRef& a, const RowRef& b) {
    return a.side == b.side && a.index == b.index;
}

struct ValueChange {
    RowRef row;
    double new_impact = 0.0;
};

inline bool operator<(const ValueChange& a, const ValueChange& b) {
    if (!(a.row == b.row)) return a.row < b.row;
    return a.new_impact < b.new_impact;
}
inline bool operator==(const ValueChange& a, const ValueChange& b) {
    return a.row == b.row && a.new_impact == b.new_impact;
}

// E = (delta, value_changes | evidence): provenance-based explanations,
// value-based explanations, and the evidence mapping backing them.
struct ExplanationSet {
    std::vector<RowRef> delta;          // sorted, unique
    std::vector<ValueChange> value_changes; // sorted by row
    std::vector<TupleMatch> evidence;   // sorted by (left, right)

    void normalize(); // sort + dedupe, keeps comparisons canonical
    bool in_delta(const RowRef& r) const;
    const ValueChange* change_for(const RowRef& r) const;
};

bool is_valid_mapping(const std::vector<TupleMatch>& evidence, const CardinalityReq& req,
                      const CanonicalRelation& T1, const CanonicalRelation& T2);

// Apply the explanations: kept flags and refined impacts per side.
struct RefinedState {
    std::vector<char> kept_left, kept_right;
    std::vector<double> impact_left, impact_right;
};
RefinedState apply_explanations(const ExplanationSet& e, const CanonicalRelation& T1,
                                const CanonicalRelation& T2);

inline constexpr double kImpactTolerance = 1e-9;

// Every connected component of the evidence graph over the refined relations
// balances its two sides' impacts. Kept tuples outside any component form
// singleton components and fail unless their refined impact is 0.
bool impact_equality_holds(const ExplanationSet& e, const CanonicalRelation& T1,
                           const CanonicalRelation& T2);

bool is_complete(const ExplanationSet& e, const CardinalityReq& req, const CanonicalRelation& T1,
                 const CanonicalRelation& T2);

// log Pr(E | T1, T2, M): -inf when E is malformed or incomplete, otherwise
// the sum of per-tuple factors and per-match factors. Matches incident to
// removed tuples are structurally excluded and score as excluded.
double log_probability(const ExplanationSet& e, const CanonicalRelation& T1,
                       const CanonicalRelation& T2, const TupleMapping& mapping,
                       const Priors& priors, const CardinalityReq& req);

struct OracleOptions {
    // When false (default, mirroring the MILP coverage constraints), every
    // kept tuple must be matched. When true, an unmatched tuple may stay with
    // its impact corrected to 0.
    bool allow_unmatched_kept = false;
    ExecMode mode = ExecMode::Parallel;
};

inline constexpr int kOracleMaxTuples = 14;
inline constexpr int kOracleMaxMatches = 22;

// Exhaustive optimum for guarded-size instances; the testing oracle for the
// MILP path. Deterministic tie-break: highest log-probability, then
// lexicographically smallest delta, value changes, evidence.
ExplanationSet brute_force_optimal(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                   const TupleMapping& mapping, const Priors& priors,
                                   const CardinalityReq& req, const OracleOptions& opts = {});

} // namespace qdiff
