#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "qdiff/json_io.hpp"
#include "qdiff/pipeline.hpp"
#include "qdiff/synthgen.hpp"

using namespace qdiff;

TEST_SUITE_BEGIN("synthgen");

TEST_CASE("d = 0 produces identical datasets and a clean gold standard") {
    SynthConfig cfg;
    cfg.n = 50;
    cfg.d = 0.0;
    cfg.v = 30;
    cfg.seed = 3;
    SynthBundle b = generate(cfg);
    CHECK(b.d1.rows.size() == 50);
    CHECK(b.d2.rows.size() == 50);
    CHECK(b.gold.dropped.empty());
    CHECK(b.gold.corrupted.empty());
    CHECK(b.gold.true_matches.size() == 50);
    for (size_t i = 0; i < 50; i++) CHECK(value_key(b.d1.rows[i][2]) == value_key(b.d2.rows[i][2]));
}

TEST_CASE("gold counts are forced by the difference ratio") {
    SynthConfig cfg;
    cfg.n = 100;
    cfg.d = 0.2;
    cfg.v = 50;
    cfg.seed = 9;
    SynthBundle b = generate(cfg);
    CHECK(b.gold.dropped.size() == 20);
    CHECK(b.gold.corrupted.size() == 20);
    CHECK(b.gold.true_matches.size() == 80);
    CHECK(b.d1.rows.size() + b.d2.rows.size() == 180);

    // dropped and corrupted keys are disjoint (corruption hits survivors)
    std::set<std::string> dropped_keys;
    for (const auto& [side, key] : b.gold.dropped) dropped_keys.insert(key);
    for (const auto& c : b.gold.corrupted) CHECK(dropped_keys.count(c.key) == 0);
}

TEST_CASE("generation is deterministic in the seed") {
    SynthConfig cfg;
    cfg.n = 40;
    cfg.d = 0.3;
    cfg.v = 20;
    cfg.seed = 77;
    SynthBundle a = generate(cfg), b = generate(cfg);
    REQUIRE(a.d1.rows.size() == b.d1.rows.size());
    for (size_t i = 0; i < a.d1.rows.size(); i++)
        CHECK(value_key(a.d1.rows[i][1]) == value_key(b.d1.rows[i][1]));
    CHECK(a.gold.dropped == b.gold.dropped);
    CHECK(a.gold.true_matches == b.gold.true_matches);

    cfg.seed = 78;
    SynthBundle c = generate(cfg);
    bool any_diff = a.d1.rows.size() != c.d1.rows.size();
    for (size_t i = 0; !any_diff && i < std::min(a.d1.rows.size(), c.d1.rows.size()); i++)
        any_diff = value_key(a.d1.rows[i][1]) != value_key(c.d1.rows[i][1]);
    CHECK(any_diff);
}

TEST_CASE("query difference equals the signed gold deltas") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        SynthConfig cfg;
        cfg.n = 200;
        cfg.d = 0.25;
        cfg.v = 100;
        cfg.seed = seed;
        SynthBundle b = generate(cfg);
        Database db1{{b.d1.name, b.d1}}, db2{{b.d2.name, b.d2}};
        double q1 = query_result_number(evaluate_query(b.q1, db1), AggKind::Sum);
        double q2 = query_result_number(evaluate_query(b.q2, db2), AggKind::Sum);

        // recompute the expected difference from the gold record
        std::map<std::string, long long> val_of;
        for (const auto& row : b.d1.rows) val_of[value_key(row[1])] = std::get<long long>(row[2]);
        double expect = 0;
        for (const auto& [side, key] : b.gold.dropped) {
            // the tuple remains on `side`; find its value there
            const Relation& rel = side == Side::Left ? b.d1 : b.d2;
            for (const auto& row : rel.rows)
                if (value_key(row[1]) == key)
                    expect += (side == Side::Left ? 1.0 : -1.0) *
                              static_cast<double>(std::get<long long>(row[2]));
        }
        for (const auto& c : b.gold.corrupted)
            expect += (c.side == Side::Left ? 1.0 : -1.0) *
                      static_cast<double>(c.corrupted - c.original);
        CHECK(q1 - q2 == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("smaller vocabularies create more candidate matches on average") {
    double per_seed_small = 0, per_seed_large = 0;
    const int seeds = 20;
    for (int s = 1; s <= seeds; s++) {
        for (int v : {40, 400}) {
            SynthConfig cfg;
            cfg.n = 60;
            cfg.d = 0.2;
            cfg.v = v;
            cfg.seed = static_cast<std::uint64_t>(s);
            SynthBundle b = generate(cfg);
            Database db1{{b.d1.name, b.d1}}, db2{{b.d2.name, b.d2}};
            CanonicalRelation t1 =
                canonicalize(extract_provenance(b.q1, db1), b.matches, Side::Left);
            CanonicalRelation t2 =
                canonicalize(extract_provenance(b.q2, db2), b.matches, Side::Right);
            auto cands = compute_candidates(t1, t2, b.matches, 0.0, ExecMode::Serial);
            (v == 40 ? per_seed_small : per_seed_large) += static_cast<double>(cands.size());
        }
    }
    CHECK(per_seed_small / seeds > per_seed_large / seeds);
}

TEST_CASE("bundles round-trip through the file formats") {
    SynthConfig cfg;
    cfg.n = 30;
    cfg.d = 0.2;
    cfg.v = 25;
    cfg.seed = 5;
    SynthBundle b = generate(cfg);
    std::string dir = (std::filesystem::temp_directory_path() / "qdiff_bundle").string();
    write_synth_bundle(dir, b);

    Database db1 = load_database(dir + "/db1.json");
    Database db2 = load_database(dir + "/db2.json");
    CHECK(db1.at("table1").rows.size() == b.d1.rows.size());
    CHECK(db2.at("table2").rows.size() == b.d2.rows.size());

    GoldStandard gold = load_gold(dir + "/gold.json");
    CHECK(gold.dropped == b.gold.dropped);
    CHECK(gold.true_matches == b.gold.true_matches);
    CHECK(gold.corrupted.size() == b.gold.corrupted.size());

    auto labels = load_labels(dir + "/labels.json");
    CHECK(labels == b.gold.true_matches);

    auto matches = load_matches(dir + "/matches.json");
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].rel == MatchRel::Equivalent);

    QuerySpec q1 = load_query(dir + "/q1.json");
    CHECK(q1.agg == AggKind::Sum);
    CHECK(q1.agg_attr == "val");
}

TEST_SUITE_END();
