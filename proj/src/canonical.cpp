#include "qdiff/canonical.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qdiff {

const char* match_rel_name(MatchRel r) {
    switch (r) {
        case MatchRel::Equivalent: return "equiv";
        case MatchRel::LessGeneral: return "less_general";
        case MatchRel::MoreGeneral: return "more_general";
    }
    return "?";
}

MatchRel match_rel_from_name(const std::string& name) {
    if (name == "equiv" || name == "equivalent") return MatchRel::Equivalent;
    if (name == "less_general") return MatchRel::LessGeneral;
    if (name == "more_general") return MatchRel::MoreGeneral;
    fail(ErrorCode::Parse, "unknown attribute-match relation '" + name + "'");
}

bool check_comparable(const std::vector<AttributeMatch>& matches) { return !matches.empty(); }

CardinalityReq cardinality_req(const std::vector<AttributeMatch>& matches) {
    CardinalityReq req{false, false};
    for (const auto& m : matches) {
        switch (m.rel) {
            case MatchRel::Equivalent: req.left_deg1 = req.right_deg1 = true; break;
            case MatchRel::LessGeneral: req.left_deg1 = true; break;
            case MatchRel::MoreGeneral: req.right_deg1 = true; break;
        }
    }
    return req;
}

std::vector<std::string> matching_attrs(const std::vector<AttributeMatch>& matches, Side side) {
    std::vector<std::string> attrs;
    std::set<std::string> seen;
    for (const auto& m : matches)
        for (const auto& a : (side == Side::Left ? m.left_attrs : m.right_attrs))
            if (seen.insert(a).second) attrs.push_back(a);
    return attrs;
}

double CanonicalRelation::total_impact() const {
    double t = 0;
    for (const auto& tu : tuples) t += tu.impact;
    return t;
}

int CanonicalRelation::index_of(const std::string& row_id) const {
    for (size_t i = 0; i < tuples.size(); i++)
        if (tuples[i].row_id == row_id) return static_cast<int>(i);
    return -1;
}

namespace {

std::string join_key(const std::vector<std::string>& key) {
    std::string id;
    for (size_t i = 0; i < key.size(); i++) {
        if (i) id += '|';
        id += key[i];
    }
    return id;
}

} // namespace

CanonicalRelation canonicalize(const ProvenanceRelation& p,
                               const std::vector<AttributeMatch>& matches, Side side) {
    if (!check_comparable(matches))
        fail(ErrorCode::Incomparable, "queries are not comparable: no attribute matches");

    CanonicalRelation out;
    out.side = side;
    out.query_kind = p.query_kind;
    out.integral_impacts = p.integral_impacts;

    std::vector<int> cols;
    for (const auto& attr : matching_attrs(matches, side)) {
        int c = -1;
        for (size_t i = 0; i < p.schema.size(); i++)
            if (p.schema[i].name == attr) c = static_cast<int>(i);
        if (c < 0)
            fail(ErrorCode::Query, "matching attribute '" + attr + "' is not in the " +
                                       side_name(side) + " provenance schema");
        cols.push_back(c);
        out.key_attrs.push_back(p.schema[c]);
    }

    auto key_of = [&](const ProvenanceTuple& t) {
        std::vector<std::string> key;
        key.reserve(cols.size());
        for (int c : cols) key.push_back(value_key(t.values[c]));
        return key;
    };

    bool one_to_one = p.query_kind == AggKind::Avg || p.query_kind == AggKind::Max ||
                      p.query_kind == AggKind::Min;

    if (!one_to_one) {
        // group by key, SUM(impact); first-seen order
        std::map<std::string, size_t> index;
        for (size_t i = 0; i < p.tuples.size(); i++) {
            std::vector<std::string> key = key_of(p.tuples[i]);
            std::string id = join_key(key);
            auto it = index.find(id);
            if (it == index.end()) {
                CanonicalTuple ct;
                ct.row_id = id;
                ct.key = std::move(key);
                ct.impact = p.tuples[i].impact;
                ct.source_rows = {static_cast<int>(i)};
                index.emplace(id, out.tuples.size());
                out.tuples.push_back(std::move(ct));
            } else {
                out.tuples[it->second].impact += p.tuples[i].impact;
                out.tuples[it->second].source_rows.push_back(static_cast<int>(i));
            }
        }
    } else {
        // strict one-to-one kinds stay ungrouped; disambiguate colliding ids
        std::map<std::string, int> seen;
        for (size_t i = 0; i < p.tuples.size(); i++) {
            CanonicalTuple ct;
            ct.key = key_of(p.tuples[i]);
            std::string id = join_key(ct.key);
            int n = ++seen[id];
            ct.row_id = n == 1 ? id : id + "#" + std::to_string(n);
            ct.impact = p.tuples[i].impact;
            ct.source_rows = {static_cast<int>(i)};
            out.tuples.push_back(std::move(ct));
        }
    }
    return out;
}

} // namespace qdiff
