#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "qdiff/solver.hpp"

using namespace qdiff;
using namespace qdiff::testing;

namespace {

// small raw models exercise the simplex without the encoder
MilpModel raw_model() { return MilpModel{}; }

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("lp: maximize a bounded variable") {
    MilpModel m = raw_model();
    m.add_var("x", VarKind::Continuous, 0, 1, 1.0);
    LpResult r = solve_lp(m);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
    CHECK(r.values[0] == doctest::Approx(1.0));
}

TEST_CASE("lp: contradictory constraints are infeasible") {
    MilpModel m = raw_model();
    int x = m.add_var("x", VarKind::Continuous, 0, 10, 1.0);
    m.add_row({{x, 1}}, RowSense::Ge, 2);
    m.add_row({{x, 1}}, RowSense::Le, 1);
    CHECK(solve_lp(m).status == LpStatus::Infeasible);
}

TEST_CASE("lp: equality rows and negative objective coefficients") {
    MilpModel m = raw_model();
    int x = m.add_var("x", VarKind::Continuous, 0, 10, -1.0);
    int y = m.add_var("y", VarKind::Continuous, 0, 10, 2.0);
    m.add_row({{x, 1}, {y, 1}}, RowSense::Eq, 4);
    m.add_row({{y, 1}, {x, -1}}, RowSense::Le, 2);
    LpResult r = solve_lp(m);
    REQUIRE(r.status == LpStatus::Optimal);
    // best: y as large as possible subject to y - x <= 2, x + y = 4
    CHECK(r.values[x] == doctest::Approx(1.0));
    CHECK(r.values[y] == doctest::Approx(3.0));
    CHECK(r.objective == doctest::Approx(5.0));
}

TEST_CASE("lp: independent blocks solve separately and sum") {
    MilpModel m = raw_model();
    int x = m.add_var("x", VarKind::Continuous, 0, 5, 1.0);
    int y = m.add_var("y", VarKind::Continuous, 0, 5, 1.0);
    int z = m.add_var("z", VarKind::Continuous, -2, 7, 3.0);
    m.add_row({{x, 1}}, RowSense::Le, 4);
    m.add_row({{y, 2}}, RowSense::Le, 6);
    (void)z; // free variable, no rows
    LpResult r = solve_lp(m);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.values[x] == doctest::Approx(4.0));
    CHECK(r.values[y] == doctest::Approx(3.0));
    CHECK(r.values[z] == doctest::Approx(7.0));
    CHECK(r.objective == doctest::Approx(4 + 3 + 21));
}

TEST_CASE("branch and bound solves small integer programs to optimality") {
    // knapsack-like: maximize 5a + 4b + 3c, 2a + 3b + c <= 4, binaries
    MilpModel m = raw_model();
    int a = m.add_var("a", VarKind::Binary, 0, 1, 5);
    int b = m.add_var("b", VarKind::Binary, 0, 1, 4);
    int c = m.add_var("c", VarKind::Binary, 0, 1, 3);
    m.add_row({{a, 2}, {b, 3}, {c, 1}}, RowSense::Le, 4);
    Assignment sol = solve(m);
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(8.0));
    CHECK(sol.values[a] == doctest::Approx(1.0));
    CHECK(sol.values[b] == doctest::Approx(0.0));
    CHECK(sol.values[c] == doctest::Approx(1.0));
}

TEST_CASE("relaxation bounds the integer optimum") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 30; round++) {
        MilpModel m = raw_model();
        int n = 3 + static_cast<int>(rng() % 5);
        for (int j = 0; j < n; j++)
            m.add_var("v" + std::to_string(j), VarKind::Binary, 0, 1,
                      static_cast<double>(rng() % 19) - 9.0);
        int rows = 1 + static_cast<int>(rng() % 4);
        for (int r = 0; r < rows; r++) {
            std::vector<LinTerm> terms;
            for (int j = 0; j < n; j++)
                if (rng() % 2) terms.push_back({j, static_cast<double>(rng() % 5) + 1});
            if (terms.empty()) terms.push_back({0, 1});
            m.add_row(std::move(terms), RowSense::Le, static_cast<double>(rng() % 7) + 1);
        }
        LpResult rel = solve_lp(m);
        Assignment in = solve(m);
        REQUIRE(rel.status == LpStatus::Optimal);
        REQUIRE(in.status == SolverStatus::Optimal);
        CHECK(rel.objective >= in.objective - 1e-9);
    }
}

TEST_CASE("solver determinism: identical model gives identical assignment") {
    std::mt19937_64 rng(77);
    RandomInstance inst = random_instance(rng, 9, 12);
    Priors priors;
    MilpModel m = build_milp(inst.t1, inst.t2, inst.mapping, priors, inst.req);
    Assignment a = solve(m), b = solve(m);
    CHECK(a.objective == b.objective);
    CHECK(a.values == b.values);
}

TEST_CASE("node limit produces a bound-limit status") {
    std::mt19937_64 rng(123);
    RandomInstance inst = random_instance(rng, 10, 14);
    Priors priors;
    MilpModel m = build_milp(inst.t1, inst.t2, inst.mapping, priors, inst.req);
    SolverConfig cfg;
    cfg.node_limit = 1;
    Assignment a = solve(m, cfg);
    CHECK(a.status != SolverStatus::Optimal);
}

TEST_CASE("returned optima satisfy all constraints within tolerance") {
    std::mt19937_64 rng(222);
    Priors priors;
    for (int round = 0; round < 20; round++) {
        RandomInstance inst = random_instance(rng, 10, 12);
        MilpModel m = build_milp(inst.t1, inst.t2, inst.mapping, priors, inst.req);
        Assignment a = solve(m);
        REQUIRE(a.status == SolverStatus::Optimal);
        for (const auto& row : m.rows) {
            double lhs = 0;
            for (const auto& t : row.terms) lhs += t.coef * a.values[t.var];
            double tol = 1e-6 * (1 + std::abs(row.rhs));
            switch (row.sense) {
                case RowSense::Le: CHECK(lhs <= row.rhs + tol); break;
                case RowSense::Ge: CHECK(lhs >= row.rhs - tol); break;
                case RowSense::Eq: CHECK(std::abs(lhs - row.rhs) <= tol); break;
            }
        }
        for (size_t j = 0; j < m.vars.size(); j++) {
            if (m.vars[j].kind == VarKind::Continuous) continue;
            CHECK(std::abs(a.values[j] - std::llround(a.values[j])) <= 1e-6);
        }
    }
}

TEST_CASE("export/import round trip reproduces the objective") {
    std::mt19937_64 rng(55);
    RandomInstance inst = random_instance(rng, 8, 10);
    Priors priors;
    MilpModel m = build_milp(inst.t1, inst.t2, inst.mapping, priors, inst.req);
    Assignment a = solve(m);
    REQUIRE(a.status == SolverStatus::Optimal);

    std::string sol = temp_path("qdiff_sol.txt");
    export_solution(m, a, sol);
    Assignment back = import_solution(m, sol);
    CHECK(back.objective == doctest::Approx(a.objective).epsilon(1e-9));

    export_model(m, ModelFormat::Lp, temp_path("qdiff_model.lp"));
    export_model(m, ModelFormat::Mps, temp_path("qdiff_model.mps"));

    // dumps are deterministic byte-for-byte
    std::ostringstream s1, s2;
    write_model(m, ModelFormat::Lp, s1);
    write_model(m, ModelFormat::Lp, s2);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("solution files missing a variable name the gap") {
    MilpModel m = raw_model();
    m.add_var("x", VarKind::Binary, 0, 1, 1.0);
    m.add_var("y", VarKind::Binary, 0, 1, 1.0);
    std::string path = temp_path("qdiff_partial.txt");
    {
        std::ofstream out(path);
        out << "x 1\n";
    }
    try {
        import_solution(m, path);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("y") != std::string::npos);
    }
}

TEST_CASE("imported solutions violating constraints are rejected") {
    MilpModel m = raw_model();
    int x = m.add_var("x", VarKind::Binary, 0, 1, 1.0);
    m.add_row({{x, 1}}, RowSense::Le, 0);
    std::string path = temp_path("qdiff_bad_sol.txt");
    {
        std::ofstream out(path);
        out << "x 1\n";
    }
    CHECK_THROWS_AS(import_solution(m, path), Error);
}

TEST_SUITE_END();
