#pragma once

// shared fixtures for the unit and acceptance suites

#include <random>
#include <set>
#include <string>
#include <vector>

#include "qdiff/matching.hpp"

namespace qdiff::testing {

inline CanonicalRelation relation_of(Side side,
                                     const std::vector<std::pair<std::string, double>>& rows,
                                     AggKind kind = AggKind::Count) {
    CanonicalRelation t;
    t.side = side;
    t.query_kind = kind;
    t.key_attrs = {{"k", ValueKind::Text}};
    t.integral_impacts = true;
    for (const auto& [key, impact] : rows) {
        CanonicalTuple ct;
        ct.row_id = fold_case(trim(key));
        ct.key = {ct.row_id};
        ct.impact = impact;
        if (impact != static_cast<double>(static_cast<long long>(impact)))
            t.integral_impacts = false;
        t.tuples.push_back(std::move(ct));
    }
    return t;
}

// canonical relations of the running example's first two queries
inline CanonicalRelation fig3_left() {
    return relation_of(Side::Left, {{"accounting", 1},
                                    {"cs", 2},
                                    {"ece", 1},
                                    {"ee", 1},
                                    {"management", 1},
                                    {"design", 1}});
}

inline CanonicalRelation fig3_right() {
    return relation_of(Side::Right, {{"accounting", 1},
                                     {"cse", 1},
                                     {"ece", 1},
                                     {"ee", 1},
                                     {"management", 1},
                                     {"design", 1}});
}

// the running example's candidate mapping; pair (cs, cse) carries 0.9
inline TupleMapping fig3_mapping() {
    TupleMapping m;
    m.matches = {{0, 0, 1.0}, {1, 1, 0.9}, {2, 2, 1.0}, {3, 3, 1.0}, {4, 4, 1.0}, {5, 5, 1.0}};
    return m;
}

struct RandomInstance {
    CanonicalRelation t1, t2;
    TupleMapping mapping;
    CardinalityReq req;
};

// guarded-size instances for oracle comparisons: impacts in [1, 5],
// probabilities off the clamp boundary unless allow_p1 is set
inline RandomInstance random_instance(std::mt19937_64& rng, int max_tuples = 12,
                                      int max_matches = 20, bool allow_p1 = true) {
    RandomInstance inst;
    int n1 = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_tuples - 1));
    int n2 = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_tuples - n1 >= 1
                                                                     ? max_tuples - n1
                                                                     : 1));
    std::vector<std::pair<std::string, double>> rows1, rows2;
    for (int i = 0; i < n1; i++)
        rows1.push_back({"l" + std::to_string(i), 1.0 + static_cast<double>(rng() % 5)});
    for (int j = 0; j < n2; j++)
        rows2.push_back({"r" + std::to_string(j), 1.0 + static_cast<double>(rng() % 5)});
    inst.t1 = relation_of(Side::Left, rows1, AggKind::Sum);
    inst.t2 = relation_of(Side::Right, rows2, AggKind::Sum);

    int want = static_cast<int>(rng() % static_cast<unsigned>(max_matches + 1));
    std::set<std::pair<int, int>> seen;
    for (int k = 0; k < want; k++) {
        int i = static_cast<int>(rng() % static_cast<unsigned>(n1));
        int j = static_cast<int>(rng() % static_cast<unsigned>(n2));
        if (!seen.insert({i, j}).second) continue;
        double p;
        switch (rng() % 6) {
            case 0: p = 0.05 + 0.01 * static_cast<double>(rng() % 20); break;
            case 1: p = 0.45 + 0.01 * static_cast<double>(rng() % 20); break;
            case 2: p = allow_p1 ? 1.0 : 0.95; break;
            default: p = 0.70 + 0.01 * static_cast<double>(rng() % 29); break;
        }
        inst.mapping.matches.push_back({i, j, p});
    }
    std::sort(inst.mapping.matches.begin(), inst.mapping.matches.end());

    switch (rng() % 3) {
        case 0: inst.req = {true, true}; break;
        case 1: inst.req = {true, false}; break;
        default: inst.req = {false, true}; break;
    }
    return inst;
}

} // namespace qdiff::testing
