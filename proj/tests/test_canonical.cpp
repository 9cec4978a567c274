#include <doctest.h>

#include <random>

#include "qdiff/canonical.hpp"
#include "qdiff/json_io.hpp"

using namespace qdiff;

namespace {

std::string data_path(const std::string& name) {
    return std::string(TEST_DATA_DIR) + "/" + name;
}

ProvenanceRelation fig2_provenance(const std::string& db, const std::string& query) {
    Database d = load_database(data_path(db));
    QuerySpec q = load_query(data_path(query));
    return extract_provenance(q, d);
}

} // namespace

TEST_SUITE_BEGIN("canonical");

TEST_CASE("comparability is non-emptiness of the match list") {
    CHECK(check_comparable({{{"program"}, MatchRel::Equivalent, {"major"}}}));
    CHECK(check_comparable({{{"program"}, MatchRel::LessGeneral, {"college"}}}));
    CHECK_FALSE(check_comparable(load_matches(data_path("fig2/matches_q1_q4.json"))));
}

TEST_CASE("cardinality requirements per relation symbol") {
    CardinalityReq eq = cardinality_req({{{"a"}, MatchRel::Equivalent, {"b"}}});
    CHECK(eq.left_deg1);
    CHECK(eq.right_deg1);
    CHECK(eq.hub_side() == Side::Right);

    CardinalityReq less = cardinality_req({{{"a"}, MatchRel::LessGeneral, {"b"}}});
    CHECK(less.left_deg1);
    CHECK_FALSE(less.right_deg1);
    CHECK(less.hub_side() == Side::Right);

    CardinalityReq more = cardinality_req({{{"a"}, MatchRel::MoreGeneral, {"b"}}});
    CHECK_FALSE(more.left_deg1);
    CHECK(more.right_deg1);
    CHECK(more.hub_side() == Side::Left);
}

TEST_CASE("canonicalization of the running example") {
    auto matches = load_matches(data_path("fig2/matches_q1_q2.json"));

    CanonicalRelation t1 =
        canonicalize(fig2_provenance("fig2/db1.json", "fig2/q1.json"), matches, Side::Left);
    REQUIRE(t1.tuples.size() == 6);
    int cs = t1.index_of("cs");
    REQUIRE(cs >= 0);
    CHECK(t1.tuples[cs].impact == 2.0);
    CHECK(t1.tuples[cs].source_rows.size() == 2);

    CanonicalRelation t2 =
        canonicalize(fig2_provenance("fig2/db2.json", "fig2/q2.json"), matches, Side::Right);
    CHECK(t2.tuples.size() == 6);
    for (const auto& t : t2.tuples) CHECK(t.impact == 1.0);
}

TEST_CASE("single-tuple provenance canonicalizes to itself") {
    ProvenanceRelation p;
    p.schema = {{"k", ValueKind::Text}};
    p.query_kind = AggKind::Count;
    p.tuples = {{{std::string("Only")}, 1.0}};
    CanonicalRelation t = canonicalize(p, {{{"k"}, MatchRel::Equivalent, {"k"}}}, Side::Left);
    REQUIRE(t.tuples.size() == 1);
    CHECK(t.tuples[0].row_id == "only");
    CHECK(t.tuples[0].impact == 1.0);
}

TEST_CASE("impact totals survive grouping and |T| <= |P|") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 25; round++) {
        ProvenanceRelation p;
        p.schema = {{"k", ValueKind::Text}, {"x", ValueKind::Integer}};
        p.query_kind = round % 2 ? AggKind::Sum : AggKind::Count;
        int rows = static_cast<int>(rng() % 30);
        for (int i = 0; i < rows; i++) {
            std::string key(1, static_cast<char>('a' + rng() % 6));
            double impact = p.query_kind == AggKind::Count ? 1.0 : 1.0 + double(rng() % 9);
            p.tuples.push_back({{key, 1LL}, impact});
        }
        CanonicalRelation t = canonicalize(p, {{{"k"}, MatchRel::Equivalent, {"k"}}}, Side::Left);
        CHECK(t.tuples.size() <= p.tuples.size());
        CHECK(t.total_impact() == doctest::Approx(p.total_impact()).epsilon(1e-12));

        // idempotence: regrouping the grouped relation reproduces it
        ProvenanceRelation again;
        again.schema = {{"k", ValueKind::Text}};
        again.query_kind = p.query_kind;
        for (const auto& ct : t.tuples) again.tuples.push_back({{ct.key[0]}, ct.impact});
        CanonicalRelation t2 =
            canonicalize(again, {{{"k"}, MatchRel::Equivalent, {"k"}}}, Side::Left);
        REQUIRE(t2.tuples.size() == t.tuples.size());
        for (size_t i = 0; i < t.tuples.size(); i++) {
            CHECK(t2.tuples[i].row_id == t.tuples[i].row_id);
            CHECK(t2.tuples[i].impact == doctest::Approx(t.tuples[i].impact));
        }
    }
}

TEST_CASE("AVG/MAX/MIN provenance stays ungrouped with disambiguated ids") {
    ProvenanceRelation p;
    p.schema = {{"k", ValueKind::Text}};
    p.query_kind = AggKind::Max;
    p.tuples = {{{std::string("dup")}, 3.0}, {{std::string("dup")}, 5.0}};
    CanonicalRelation t = canonicalize(p, {{{"k"}, MatchRel::Equivalent, {"k"}}}, Side::Left);
    REQUIRE(t.tuples.size() == 2);
    CHECK(t.tuples[0].row_id == "dup");
    CHECK(t.tuples[1].row_id == "dup#2");
    CHECK(t.tuples[0].key == t.tuples[1].key);
}

TEST_CASE("grouping keys fold case and trim whitespace") {
    ProvenanceRelation p;
    p.schema = {{"k", ValueKind::Text}};
    p.query_kind = AggKind::Count;
    p.tuples = {{{std::string("  CS ")}, 1.0}, {{std::string("cs")}, 1.0}};
    CanonicalRelation t = canonicalize(p, {{{"k"}, MatchRel::Equivalent, {"k"}}}, Side::Left);
    REQUIRE(t.tuples.size() == 1);
    CHECK(t.tuples[0].impact == 2.0);
}

TEST_CASE("unknown matching attribute is an error") {
    ProvenanceRelation p;
    p.schema = {{"k", ValueKind::Text}};
    p.query_kind = AggKind::Count;
    CHECK_THROWS_AS(canonicalize(p, {{{"nope"}, MatchRel::Equivalent, {"k"}}}, Side::Left), Error);
}

TEST_SUITE_END();
