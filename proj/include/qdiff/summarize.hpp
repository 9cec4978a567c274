#pragma once

#include "qdiff/probability.hpp"

namespace qdiff {

// Conjunctive attribute-value pattern over one side's provenance schema.
struct Pattern {
    Side side = Side::Left;
    std::vector<std::pair<std::string, std::string>> conjuncts; // attr, normalized value
    int covered = 0;    // explanation tuples matched
    int exceptions = 0; // non-explanation tuples matched
};

std::string render_pattern(const Pattern& p);

// Greedy weighted set cover over single- and two-attribute candidate
// patterns; uncovered explanation tuples fall back to singleton patterns.
std::vector<Pattern> summarize(const ExplanationSet& e, const CanonicalRelation& T1,
                               const CanonicalRelation& T2, const ProvenanceRelation& P1,
                               const ProvenanceRelation& P2, double max_exception_rate = 0.1);

} // namespace qdiff
