#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "qdiff/baselines.hpp"

using namespace qdiff;
using namespace qdiff::testing;

TEST_SUITE_BEGIN("baselines");

TEST_CASE("threshold keeps exactly the passing matches when already valid") {
    Priors priors;
    CanonicalRelation t1 = fig3_left(), t2 = fig3_right();
    TupleMapping mapping = fig3_mapping();

    BaselineResult r = threshold_explain(t1, t2, mapping, 0.0, {true, true}, priors);
    CHECK(r.expl.evidence.size() == mapping.matches.size());

    // theta above every probability: empty evidence, everything removed
    BaselineResult none = threshold_explain(t1, t2, mapping, 1.1, {true, true}, priors);
    CHECK(none.expl.evidence.empty());
    CHECK(none.expl.delta.size() == 12);
}

TEST_CASE("threshold at 0.9 loses low-probability true matches") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 1}, {"b", 1}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"a", 1}, {"b", 1}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 1.0}, {1, 1, 0.6}};
    BaselineResult r = threshold_explain(t1, t2, mapping, 0.9, {true, true}, priors);
    CHECK(r.expl.evidence.size() == 1);
    // the 0.6 pair lands in delta on both sides: recall loss
    CHECK(r.expl.delta.size() == 2);
}

TEST_CASE("threshold drops violating matches lowest-probability first") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 1}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"x", 1}, {"y", 1}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.95}, {0, 1, 0.92}};
    BaselineResult r = threshold_explain(t1, t2, mapping, 0.9, {true, true}, priors);
    REQUIRE(r.expl.evidence.size() == 1);
    CHECK(r.expl.evidence[0].p == doctest::Approx(0.95));
}

TEST_CASE("greedy accepts improving matches and rebalances components") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 2}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"a", 2}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.9}};
    BaselineResult r = greedy_explain(t1, t2, mapping, priors, {true, true});
    CHECK(r.expl.evidence.size() == 1);
    CHECK(r.expl.delta.empty());
    CHECK(r.complete);
}

TEST_CASE("the A/B gadget: greedy takes the wrong pair, the solver does not") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 1}, {"b", 1}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"a'", 1}, {"b'", 1}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.8}, {0, 1, 0.9}, {1, 0, 0.5}, {1, 1, 0.8}};

    BaselineResult greedy = greedy_explain(t1, t2, mapping, priors, {true, true});
    // (a, b') has the highest probability and gets taken first
    bool has_ab = false, has_aa = false;
    for (const auto& m : greedy.expl.evidence) {
        if (m.left == 0 && m.right == 1) has_ab = true;
        if (m.left == 0 && m.right == 0) has_aa = true;
    }
    CHECK(has_ab);
    CHECK_FALSE(has_aa);

    SolveResult milp = solve_unpartitioned(t1, t2, mapping, priors, {true, true});
    REQUIRE(milp.expl.evidence.size() == 2);
    CHECK(milp.expl.evidence[0].left == 0);
    CHECK(milp.expl.evidence[0].right == 0);
    CHECK(milp.expl.evidence[1].left == 1);
    CHECK(milp.expl.evidence[1].right == 1);
    CHECK(milp.objective > greedy.objective);
}

TEST_CASE("greedy objective never beats the exact solver") {
    std::mt19937_64 rng(321);
    Priors priors;
    for (int round = 0; round < 25; round++) {
        RandomInstance inst = random_instance(rng, 10, 14);
        BaselineResult greedy = greedy_explain(inst.t1, inst.t2, inst.mapping, priors, inst.req);
        SolveResult exact = solve_unpartitioned(inst.t1, inst.t2, inst.mapping, priors, inst.req);
        CHECK(greedy.objective <= exact.objective + 1e-6);
        if (!greedy.complete) CHECK(greedy.objective == -std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("incomplete baseline results carry the flag instead of failing") {
    Priors priors;
    // impacts that cannot balance without value changes, and a mapping the
    // threshold baseline refuses to use
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 5}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"a", 1}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.4}};
    BaselineResult r = threshold_explain(t1, t2, mapping, 0.9, {true, true}, priors);
    CHECK(r.expl.evidence.empty());
    CHECK(r.expl.delta.size() == 2);
    CHECK(r.complete); // removing everything is complete
    // greedy with all p below 0.5 may refuse the match; flag reflects it
    BaselineResult g = greedy_explain(t1, t2, mapping, priors, {true, true});
    CHECK(g.complete == is_complete(g.expl, {true, true}, t1, t2));
}

TEST_CASE("exact cover: disjoint perfect matching covers everything") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 1}, {"b", 1}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"a", 1}, {"b", 1}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.9}, {1, 1, 0.9}};
    BaselineResult r = exactcover_explain(t1, t2, mapping, priors, {true, true});
    CHECK(r.expl.delta.empty());
    CHECK(r.expl.evidence.size() == 2);
}

TEST_CASE("exact cover: uncovered elements and unchosen sets land in delta") {
    Priors priors;
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 1}, {"b", 1}, {"c", 1}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"s1", 2}, {"s2", 2}});
    TupleMapping mapping;
    // s1 covers {a, b}; s2 covers {b, c}: overlapping neighborhoods, only one
    // set can be chosen; element with no candidate set goes to delta
    mapping.matches = {{0, 0, 0.9}, {1, 0, 0.9}, {1, 1, 0.9}, {2, 1, 0.9}};
    BaselineResult r = exactcover_explain(t1, t2, mapping, priors, {true, false});
    // best: choose one set (2 covered + 1 chosen); the other set and the
    // uncovered element are delta
    CHECK(r.expl.evidence.size() == 2);
    CHECK(r.expl.delta.size() == 2);

    CanonicalRelation lonely = relation_of(Side::Left, {{"z", 1}});
    CanonicalRelation empty_right = relation_of(Side::Right, {});
    BaselineResult r2 = exactcover_explain(lonely, empty_right, {}, priors, {true, true});
    REQUIRE(r2.expl.delta.size() == 1);
    CHECK(r2.expl.delta[0] == RowRef{Side::Left, 0});
}

TEST_CASE("exact cover ignores impacts where the solver weighs them") {
    Priors priors;
    // the count-maximizing choice differs from the probability-aware one:
    // set s1 covers two elements but forces an impact mismatch
    CanonicalRelation t1 = relation_of(Side::Left, {{"a", 5}, {"b", 5}});
    CanonicalRelation t2 = relation_of(Side::Right, {{"s1", 1}, {"s2", 10}});
    TupleMapping mapping;
    mapping.matches = {{0, 0, 0.6}, {1, 0, 0.6}, {0, 1, 0.55}, {1, 1, 0.55}};
    BaselineResult cover = exactcover_explain(t1, t2, mapping, priors, {true, false});
    SolveResult milp = solve_unpartitioned(t1, t2, mapping, priors, {true, false});
    // cover picks s1 (covers both elements, never minds impacts 5+5 vs 1)
    bool cover_uses_s1 = false;
    for (const auto& m : cover.expl.evidence) cover_uses_s1 |= m.right == 0;
    CHECK(cover_uses_s1);
    // the solver prefers s2, whose impact 10 balances 5+5 without changes
    bool milp_uses_s2 = !milp.expl.evidence.empty();
    for (const auto& m : milp.expl.evidence) milp_uses_s2 &= m.right == 1;
    CHECK(milp_uses_s2);
    CHECK(milp.expl.delta != cover.expl.delta);
}

TEST_CASE("exact cover evidence is a valid many-to-one mapping") {
    std::mt19937_64 rng(99);
    Priors priors;
    for (int round = 0; round < 15; round++) {
        RandomInstance inst = random_instance(rng, 10, 16);
        BaselineResult r =
            exactcover_explain(inst.t1, inst.t2, inst.mapping, priors, inst.req);
        // each element is covered by at most one chosen set
        CHECK(is_valid_mapping(r.expl.evidence, {true, false}, inst.t1, inst.t2));
    }
}

TEST_SUITE_END();
