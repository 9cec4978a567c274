#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <algorithm>

#include "qdiff/core.hpp"
#include "qdiff/json_io.hpp"

using namespace qdiff;

namespace {

std::string data_path(const std::string& name) {
    return std::string(TEST_DATA_DIR) + "/" + name;
}

std::string temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    return path.string();
}

QuerySpec count_query(const std::string& rel) {
    QuerySpec q;
    q.source.relation = rel;
    q.agg = AggKind::Count;
    return q;
}

} // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("load_csv parses the running-example dataset") {
    Relation d1 = load_csv(data_path("fig2/d1.csv"), "D1",
                           {{"Program", ValueKind::Text}, {"Degree", ValueKind::Text}});
    CHECK(d1.rows.size() == 7);
    CHECK(std::get<std::string>(d1.rows[1][0]) == "CS");
}

TEST_CASE("load_csv accepts an empty data file with a valid header") {
    std::string path = temp_file("qdiff_empty.csv", "a,b\n");
    Relation r =
        load_csv(path, "empty", {{"a", ValueKind::Text}, {"b", ValueKind::Integer}});
    CHECK(r.rows.empty());
}

TEST_CASE("load_csv reports type errors with position") {
    std::string path = temp_file("qdiff_bad.csv", "a\n12\nnope\n");
    try {
        load_csv(path, "bad", {{"a", ValueKind::Integer}});
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects NULL-like empty cells and duplicate attributes") {
    std::string path = temp_file("qdiff_null.csv", "a,b\n1,\n");
    CHECK_THROWS_AS(load_csv(path, "n", {{"a", ValueKind::Integer}, {"b", ValueKind::Text}}),
                    Error);
    CHECK_THROWS_AS(load_csv(path, "n", {{"a", ValueKind::Text}, {"a", ValueKind::Text}}), Error);
}

TEST_CASE("quoted CSV fields with embedded separators survive") {
    std::string path = temp_file("qdiff_quote.csv", "a,b\n\"x, y\",\"he said \"\"hi\"\"\"\n");
    Relation r = load_csv(path, "q", {{"a", ValueKind::Text}, {"b", ValueKind::Text}});
    REQUIRE(r.rows.size() == 1);
    CHECK(std::get<std::string>(r.rows[0][0]) == "x, y");
    CHECK(std::get<std::string>(r.rows[0][1]) == "he said \"hi\"");
}

TEST_CASE("running example query results: 7, 6, 5, 4") {
    Database db;
    db.emplace("D1", load_csv(data_path("fig2/d1.csv"), "D1",
                              {{"Program", ValueKind::Text}, {"Degree", ValueKind::Text}}));
    db.emplace("D2", load_csv(data_path("fig2/d2.csv"), "D2",
                              {{"Univ", ValueKind::Text}, {"Major", ValueKind::Text}}));
    db.emplace("D3", load_csv(data_path("fig2/d3.csv"), "D3",
                              {{"College", ValueKind::Text}, {"Num_bach", ValueKind::Integer}}));
    db.emplace("D4", load_csv(data_path("fig2/d4.csv"), "D4",
                              {{"Campus", ValueKind::Text}, {"Num_major", ValueKind::Integer}}));

    CHECK(query_result_number(evaluate_query(count_query("D1"), db), AggKind::Count) == 7);

    QuerySpec q2 = count_query("D2");
    Condition c;
    c.attr = "Univ";
    c.op = CmpOp::Eq;
    c.literal = Value(std::string("A"));
    q2.where = c;
    CHECK(query_result_number(evaluate_query(q2, db), AggKind::Count) == 6);

    QuerySpec q3;
    q3.source.relation = "D3";
    q3.agg = AggKind::Sum;
    q3.agg_attr = "Num_bach";
    CHECK(query_result_number(evaluate_query(q3, db), AggKind::Sum) == 5);

    QuerySpec q4;
    q4.source.relation = "D4";
    q4.agg = AggKind::Sum;
    q4.agg_attr = "Num_major";
    CHECK(query_result_number(evaluate_query(q4, db), AggKind::Sum) == 4);
}

TEST_CASE("aggregates over empty selections") {
    Database db;
    Relation r;
    r.name = "t";
    r.schema = {{"x", ValueKind::Integer}};
    db.emplace("t", r);

    CHECK(query_result_number(evaluate_query(count_query("t"), db), AggKind::Count) == 0);

    QuerySpec sum;
    sum.source.relation = "t";
    sum.agg = AggKind::Sum;
    sum.agg_attr = "x";
    CHECK(query_result_number(evaluate_query(sum, db), AggKind::Sum) == 0);

    QuerySpec avg = sum;
    avg.agg = AggKind::Avg;
    CHECK_THROWS_AS(evaluate_query(avg, db), Error);
}

TEST_CASE("provenance impacts follow the query kind") {
    Database db;
    db.emplace("D1", load_csv(data_path("fig2/d1.csv"), "D1",
                              {{"Program", ValueKind::Text}, {"Degree", ValueKind::Text}}));
    db.emplace("D3", load_csv(data_path("fig2/d3.csv"), "D3",
                              {{"College", ValueKind::Text}, {"Num_bach", ValueKind::Integer}}));

    ProvenanceRelation p1 = extract_provenance(count_query("D1"), db);
    CHECK(p1.tuples.size() == 7);
    for (const auto& t : p1.tuples) CHECK(t.impact == 1.0);

    QuerySpec q3;
    q3.source.relation = "D3";
    q3.agg = AggKind::Sum;
    q3.agg_attr = "Num_bach";
    ProvenanceRelation p3 = extract_provenance(q3, db);
    REQUIRE(p3.tuples.size() == 3);
    CHECK(p3.tuples[0].impact == 2.0);
    CHECK(p3.tuples[1].impact == 2.0);
    CHECK(p3.tuples[2].impact == 1.0);

    QuerySpec none = count_query("D1");
    none.agg = AggKind::None;
    Condition c;
    c.attr = "Program";
    c.op = CmpOp::Eq;
    c.literal = Value(std::string("NoSuch"));
    none.where = c;
    CHECK(extract_provenance(none, db).tuples.empty());
}

TEST_CASE("provenance re-aggregation reproduces the query result") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 20; round++) {
        Relation r;
        r.name = "t";
        r.schema = {{"grp", ValueKind::Text}, {"x", ValueKind::Integer}};
        int rows = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < rows; i++) {
            std::string g(1, static_cast<char>('a' + rng() % 5));
            long long x = 1 + static_cast<long long>(rng() % 9);
            r.rows.push_back({g, x});
        }
        Database db;
        db.emplace("t", r);

        for (AggKind agg : {AggKind::Sum, AggKind::Count, AggKind::Max, AggKind::Min, AggKind::Avg}) {
            QuerySpec q;
            q.source.relation = "t";
            q.agg = agg;
            q.agg_attr = "x";
            double result = query_result_number(evaluate_query(q, db), agg);
            ProvenanceRelation p = extract_provenance(q, db);
            double re = 0;
            switch (agg) {
                case AggKind::Sum:
                case AggKind::Count:
                    for (const auto& t : p.tuples) re += t.impact;
                    break;
                case AggKind::Max:
                    re = p.tuples.front().impact;
                    for (const auto& t : p.tuples) re = std::max(re, t.impact);
                    break;
                case AggKind::Min:
                    re = p.tuples.front().impact;
                    for (const auto& t : p.tuples) re = std::min(re, t.impact);
                    break;
                case AggKind::Avg: {
                    for (const auto& t : p.tuples) re += t.impact;
                    re /= static_cast<double>(p.tuples.size());
                    break;
                }
                default: break;
            }
            CHECK(result == doctest::Approx(re).epsilon(1e-12));
        }
    }
}

TEST_CASE("join and union sources evaluate bottom-up") {
    Relation school;
    school.name = "School";
    school.schema = {{"ID", ValueKind::Integer}, {"Name", ValueKind::Text}};
    school.rows = {{1LL, std::string("A")}, {2LL, std::string("B")}};
    Relation stats;
    stats.name = "Stats";
    stats.schema = {{"ID", ValueKind::Integer}, {"bach", ValueKind::Integer}};
    stats.rows = {{1LL, 90LL}, {1LL, 3LL}, {2LL, 5LL}};
    Database db;
    db.emplace("School", school);
    db.emplace("Stats", stats);

    QuerySpec q;
    q.source.kind = SourceNode::Kind::Join;
    q.source.left = std::make_shared<SourceNode>();
    q.source.left->relation = "School";
    q.source.right = std::make_shared<SourceNode>();
    q.source.right->relation = "Stats";
    q.source.join_on = {{"ID", "ID"}};
    Condition c;
    c.attr = "Name";
    c.op = CmpOp::Eq;
    c.literal = Value(std::string("A"));
    q.where = c;
    q.agg = AggKind::Sum;
    q.agg_attr = "bach";
    CHECK(query_result_number(evaluate_query(q, db), AggKind::Sum) == 93);

    QuerySpec u = count_query("School");
    u.source.kind = SourceNode::Kind::Union;
    auto m1 = std::make_shared<SourceNode>();
    m1->relation = "School";
    u.source.members = {m1, m1};
    CHECK(query_result_number(evaluate_query(u, db), AggKind::Count) == 4);
}

TEST_CASE("unknown relations and attributes are query errors") {
    Database db;
    CHECK_THROWS_AS(evaluate_query(count_query("nope"), db), Error);

    Relation r;
    r.name = "t";
    r.schema = {{"x", ValueKind::Integer}};
    r.rows = {{1LL}};
    db.emplace("t", r);
    QuerySpec q;
    q.source.relation = "t";
    q.agg = AggKind::Sum;
    q.agg_attr = "missing";
    CHECK_THROWS_AS(evaluate_query(q, db), Error);
}

TEST_SUITE_END();
