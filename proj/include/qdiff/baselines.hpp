#pragma once

#include "qdiff/partition.hpp"

namespace qdiff {

struct BaselineResult {
    ExplanationSet expl;
    std::string method;
    double wall_ms = 0;
    bool complete = false; // baselines do not guarantee completeness
    double objective = 0;  // log-probability (-inf when incomplete)
};

// Keep matches with p >= threshold, drop lowest-p violators until valid,
// remove unmatched tuples, rebalance unequal components on the hub side.
BaselineResult threshold_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                 const TupleMapping& mapping, double threshold,
                                 const CardinalityReq& req, const Priors& priors);

// Descending-probability greedy: accept a match when it keeps the mapping
// valid and improves the completeness-relaxed score.
BaselineResult greedy_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req);

// Exact-Cover adaptation: left tuples are elements, right tuples are sets
// covering their match neighborhoods; chosen sets must not overlap; maximize
// covered elements plus chosen sets. Impacts and probabilities are ignored.
BaselineResult exactcover_explain(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                  const TupleMapping& mapping, const Priors& priors,
                                  const CardinalityReq& req);

} // namespace qdiff
