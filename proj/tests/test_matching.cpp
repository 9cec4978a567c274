#include <doctest.h>

#include <random>
#include <set>

#include "qdiff/matching.hpp"

using namespace qdiff;

namespace {

CanonicalRelation text_relation(Side side, const std::vector<std::pair<std::string, double>>& rows) {
    CanonicalRelation t;
    t.side = side;
    t.query_kind = AggKind::Count;
    t.key_attrs = {{"k", ValueKind::Text}};
    for (const auto& [key, impact] : rows) {
        CanonicalTuple ct;
        ct.row_id = fold_case(trim(key));
        ct.key = {ct.row_id};
        ct.impact = impact;
        t.tuples.push_back(std::move(ct));
    }
    return t;
}

const std::vector<AttributeMatch> kTextMatch = {{{"k"}, MatchRel::Equivalent, {"k"}}};

} // namespace

TEST_SUITE_BEGIN("matching");

TEST_CASE("token jaccard similarity") {
    CHECK(jaccard_sim("computer science", "computer engineering") == doctest::Approx(1.0 / 3));
    CHECK(jaccard_sim("ECE", "ECE") == 1.0);
    CHECK(jaccard_sim("art", "design") == 0.0);
    CHECK(jaccard_sim("", "") == 1.0);
    CHECK(jaccard_sim("A b", "a B") == 1.0); // case folded
}

TEST_CASE("normalized euclidean similarity") {
    CHECK(euclidean_sim(3, 3) == 1.0);
    CHECK(euclidean_sim(3, 5) == doctest::Approx(0.2));
    CHECK(euclidean_sim(0, 3) == doctest::Approx(0.1));
}

TEST_CASE("tuple similarity averages per-match similarities") {
    CanonicalRelation t1;
    t1.side = Side::Left;
    t1.key_attrs = {{"name", ValueKind::Text}, {"x", ValueKind::Integer}};
    CanonicalRelation t2;
    t2.side = Side::Right;
    t2.key_attrs = {{"name", ValueKind::Text}, {"x", ValueKind::Integer}};
    CanonicalTuple a{"a", {"ece", "3"}, 1.0, {}};
    CanonicalTuple b{"b", {"ece", "5"}, 1.0, {}};
    std::vector<AttributeMatch> matches = {{{"name"}, MatchRel::Equivalent, {"name"}},
                                           {{"x"}, MatchRel::Equivalent, {"x"}}};
    // jaccard 1.0 and euclidean 0.2 average to 0.6
    CHECK(tuple_similarity(a, b, matches, t1, t2) == doctest::Approx(0.6));

    std::vector<AttributeMatch> text_only = {{{"name"}, MatchRel::Equivalent, {"name"}}};
    CHECK(tuple_similarity(a, b, text_only, t1, t2) == 1.0);
    CanonicalTuple c{"c", {"art", "3"}, 1.0, {}};
    CHECK(tuple_similarity(a, c, text_only, t1, t2) == 0.0);
}

TEST_CASE("similarity is symmetric") {
    std::mt19937_64 rng(3);
    auto word = [&] {
        std::string w;
        for (int i = 0; i < 1 + int(rng() % 3); i++) w += char('a' + rng() % 4);
        return w;
    };
    CanonicalRelation t1, t2;
    t1.key_attrs = t2.key_attrs = {{"k", ValueKind::Text}};
    t2.side = Side::Right;
    for (int round = 0; round < 200; round++) {
        std::string sa = word() + " " + word();
        std::string sb = word() + " " + word();
        CanonicalTuple a{"a", {sa}, 1, {}};
        CanonicalTuple b{"b", {sb}, 1, {}};
        CHECK(tuple_similarity(a, b, kTextMatch, t1, t2) ==
              tuple_similarity(b, a, kTextMatch, t2, t1));
    }
}

TEST_CASE("candidate generation prunes at the floor; serial equals parallel") {
    CanonicalRelation t1 = text_relation(
        Side::Left, {{"alpha beta", 1}, {"gamma delta", 1}, {"alpha gamma", 1}, {"zz qq", 1}});
    CanonicalRelation t2 = text_relation(
        Side::Right, {{"alpha beta", 1}, {"delta gamma", 1}, {"beta gamma", 1}, {"yy ww", 1}});

    auto serial = compute_candidates(t1, t2, kTextMatch, 0.0, ExecMode::Serial);
    auto parallel = compute_candidates(t1, t2, kTextMatch, 0.0, ExecMode::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); i++) {
        CHECK(serial[i].left == parallel[i].left);
        CHECK(serial[i].right == parallel[i].right);
        CHECK(serial[i].sim == parallel[i].sim);
    }
    for (const auto& c : serial) CHECK(c.sim > 0.0);

    auto floored = compute_candidates(t1, t2, kTextMatch, 0.5, ExecMode::Serial);
    for (const auto& c : floored) CHECK(c.sim > 0.5);
}

TEST_CASE("calibration assigns bucket true-ratios") {
    // one bucket (k = 1): probability is the global true ratio among labeled
    CanonicalRelation t1 = text_relation(Side::Left, {{"a b", 1}, {"c d", 1}, {"e f", 1}});
    CanonicalRelation t2 = text_relation(Side::Right, {{"a b", 1}, {"c d", 1}, {"x f", 1}});
    CalibrationConfig cfg;
    cfg.bucket_count = 1;
    // (e f)'s true counterpart is not a candidate, so its pair is labeled false
    cfg.labels = {{"a b", "a b"}, {"c d", "c d"}, {"e f", "absent"}};
    TupleMapping m = calibrate_mapping(t1, t2, kTextMatch, cfg);
    // candidates: (a b, a b) sim 1, (c d, c d) sim 1, (e f, x f) sim 1/3:
    // 3 labeled pairs, 2 true, every pair gets 2/3
    REQUIRE(m.matches.size() == 3);
    for (const auto& match : m.matches) CHECK(match.p == doctest::Approx(2.0 / 3));
}

TEST_CASE("all-true buckets give probability 1 and zero-ratio pairs are dropped") {
    CanonicalRelation t1 = text_relation(Side::Left, {{"a b", 1}, {"m n", 1}, {"m z orig", 1}});
    CanonicalRelation t2 = text_relation(Side::Right, {{"a b", 1}, {"m z", 1}});
    CalibrationConfig cfg;
    cfg.bucket_count = 2; // buckets [0,0.5) and [0.5,1]
    cfg.labels = {{"a b", "a b"}, {"m z orig", "m z"}};
    TupleMapping m = calibrate_mapping(t1, t2, kTextMatch, cfg);
    // top bucket holds both true pairs: ratio 1.0. the false pair
    // (m n, m z) sits alone in the low bucket, labeled via its right row,
    // ratio 0 -> dropped
    REQUIRE(m.matches.size() == 2);
    for (const auto& match : m.matches) {
        CHECK(match.p == 1.0);
        CHECK(t1.tuples[match.left].row_id != "m n");
    }
}

TEST_CASE("unlabeled buckets interpolate from the nearest labeled bucket") {
    // labeled rows: only the identical pair; the low-similarity pair between
    // unlabeled rows borrows the nearest labeled bucket's ratio (1.0)
    CanonicalRelation t1 = text_relation(Side::Left, {{"a b", 1}, {"u v", 1}});
    CanonicalRelation t2 = text_relation(Side::Right, {{"a b", 1}, {"u w", 1}});
    CalibrationConfig cfg;
    cfg.bucket_count = 4;
    cfg.labels = {{"a b", "a b"}};
    TupleMapping m = calibrate_mapping(t1, t2, kTextMatch, cfg);
    REQUIRE(m.matches.size() == 2);
    CHECK(m.matches[0].p == 1.0);
    CHECK(m.matches[1].p == 1.0); // interpolated
}

TEST_CASE("calibration without labels is an error; raw mode is the fallback") {
    CanonicalRelation t1 = text_relation(Side::Left, {{"a b", 1}});
    CanonicalRelation t2 = text_relation(Side::Right, {{"a c", 1}});
    CalibrationConfig cfg;
    CHECK_THROWS_AS(calibrate_mapping(t1, t2, kTextMatch, cfg), Error);

    TupleMapping raw = raw_similarity_mapping(t1, t2, kTextMatch, 0.0);
    REQUIRE(raw.matches.size() == 1);
    CHECK(raw.matches[0].p == doctest::Approx(1.0 / 3));
}

TEST_CASE("mapping probabilities are valid and pairs unique") {
    std::mt19937_64 rng(17);
    auto phrase = [&] {
        std::string s;
        for (int w = 0; w < 3; w++) s += (w ? " " : "") + std::string(1, char('a' + rng() % 8));
        return s;
    };
    for (int round = 0; round < 10; round++) {
        std::vector<std::pair<std::string, double>> rows1, rows2;
        for (int i = 0; i < 12; i++) rows1.push_back({phrase() + std::to_string(i), 1});
        for (int i = 0; i < 12; i++) rows2.push_back({phrase() + std::to_string(i), 1});
        CanonicalRelation t1 = text_relation(Side::Left, rows1);
        CanonicalRelation t2 = text_relation(Side::Right, rows2);
        TupleMapping m = raw_similarity_mapping(t1, t2, kTextMatch, 0.0);
        std::set<std::pair<int, int>> seen;
        for (const auto& match : m.matches) {
            CHECK(match.p > 0);
            CHECK(match.p <= 1);
            CHECK(seen.insert({match.left, match.right}).second);
        }
    }
}

TEST_SUITE_END();
