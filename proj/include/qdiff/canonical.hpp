#pragma once

#include <string>
#include <vector>

#include "qdiff/core.hpp"

namespace qdiff {

enum class MatchRel : std::uint8_t { Equivalent, LessGeneral, MoreGeneral };

const char* match_rel_name(MatchRel r);
MatchRel match_rel_from_name(const std::string& name);

// Declared semantic relation between attribute sets of the two provenance
// schemas. Supplied as input; we never derive these.
struct AttributeMatch {
    std::vector<std::string> left_attrs;
    MatchRel rel = MatchRel::Equivalent;
    std::vector<std::string> right_attrs;
};

// Which sides of the evidence mapping are restricted to degree <= 1.
// less-general constrains the left side, more-general the right, equivalent
// both. Mixed match lists constrain the union of what each match implies.
struct CardinalityReq {
    bool left_deg1 = true;
    bool right_deg1 = true;

    // Components of the evidence graph are oriented around the hub side,
    // whose tuples may have degree > 1. With both sides constrained the
    // orientation is arbitrary; we use the right side.
    Side hub_side() const { return left_deg1 ? Side::Right : Side::Left; }
    bool deg1(Side s) const { return s == Side::Left ? left_deg1 : right_deg1; }
};

bool check_comparable(const std::vector<AttributeMatch>& matches);
CardinalityReq cardinality_req(const std::vector<AttributeMatch>& matches);

// Matching attributes of one side in declared order, duplicates removed.
std::vector<std::string> matching_attrs(const std::vector<AttributeMatch>& matches, Side side);

struct CanonicalTuple {
    std::string row_id;               // unique within the relation
    std::vector<std::string> key;     // normalized matching-attribute values
    double impact = 0.0;
    std::vector<int> source_rows;     // indices into the provenance relation
};

struct CanonicalRelation {
    Side side = Side::Left;
    AggKind query_kind = AggKind::None;
    std::vector<Attribute> key_attrs;
    std::vector<CanonicalTuple> tuples;
    bool integral_impacts = true;

    double total_impact() const;
    int index_of(const std::string& row_id) const; // -1 when absent
};

// Group-by on the side's matching attributes with SUM(impact). AVG/MAX/MIN
// provenance is passed through ungrouped; colliding keys get a "#k" row-id
// suffix but keep the raw key for similarity.
CanonicalRelation canonicalize(const ProvenanceRelation& p,
                               const std::vector<AttributeMatch>& matches, Side side);

} // namespace qdiff
