#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdiff/canonical.hpp"

namespace qdiff {

// Probabilistic candidate correspondence between canonical tuples, by index.
struct TupleMatch {
    int left = 0;
    int right = 0;
    double p = 1.0; // in (0, 1]
};

inline bool operator<(const TupleMatch& a, const TupleMatch& b) {
    if (a.left != b.left) return a.left < b.left;
    if (a.right != b.right) return a.right < b.right;
    return a.p < b.p;
}
inline bool operator==(const TupleMatch& a, const TupleMatch& b) {
    return a.left == b.left && a.right == b.right && a.p == b.p;
}

struct TupleMapping {
    std::vector<TupleMatch> matches;
};

struct CalibrationConfig {
    int bucket_count = 50;
    // Known-true (left row_id, right row_id) pairs, e.g. from a gold standard.
    std::vector<std::pair<std::string, std::string>> labels;
    double candidate_floor = 0.0; // keep pairs with similarity strictly above
};

double jaccard_sim(const std::string& a, const std::string& b);
double euclidean_sim(double a, double b);

double tuple_similarity(const CanonicalTuple& t1, const CanonicalTuple& t2,
                        const std::vector<AttributeMatch>& matches, const CanonicalRelation& T1,
                        const CanonicalRelation& T2);

struct CandidatePair {
    int left = 0;
    int right = 0;
    double sim = 0.0;
};

// All cross pairs with similarity strictly above the floor, ordered by
// (left, right). The parallel mode fans out over left rows and is
// result-identical to the serial reference.
std::vector<CandidatePair> compute_candidates(const CanonicalRelation& T1,
                                              const CanonicalRelation& T2,
                                              const std::vector<AttributeMatch>& matches,
                                              double candidate_floor,
                                              ExecMode mode = ExecMode::Parallel);

// Similarity-to-probability bucketing: equal-width similarity buckets, each
// pair's probability is the true ratio among its bucket's labeled pairs;
// unlabeled buckets borrow the nearest labeled bucket (ties toward lower
// similarity). Pairs ending at probability 0 are dropped.
TupleMapping calibrate_mapping(const CanonicalRelation& T1, const CanonicalRelation& T2,
                               const std::vector<AttributeMatch>& matches,
                               const CalibrationConfig& cfg, ExecMode mode = ExecMode::Parallel);

// Label-free fallback: probability := similarity.
TupleMapping raw_similarity_mapping(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                    const std::vector<AttributeMatch>& matches,
                                    double candidate_floor, ExecMode mode = ExecMode::Parallel);

} // namespace qdiff
