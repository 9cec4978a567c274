#pragma once

#include <string>
#include <vector>

#include "qdiff/milp.hpp"

namespace qdiff {

enum class SolverStatus : std::uint8_t { Optimal, Infeasible, BoundLimit };

const char* solver_status_name(SolverStatus s);

struct Assignment {
    std::vector<double> values; // per model variable
    double objective = 0.0;     // includes the model constant
    SolverStatus status = SolverStatus::Infeasible;

    double value_of(const MilpModel& model, const std::string& name) const;
};

struct SolverConfig {
    double int_tol = 1e-6;    // integrality tolerance
    double gap_tol = 0.0;     // accepted objective gap (0 = proven optimum)
    long long node_limit = -1;
    double time_limit_sec = -1;
};

enum class LpStatus : std::uint8_t { Optimal, Infeasible };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values;
    double objective = 0.0; // includes the model constant
};

// Continuous relaxation under the given variable bounds, solved per
// independent block with a bounded-variable primal simplex (Dantzig pricing,
// Bland fallback on stalling). Deterministic.
LpResult solve_lp(const MilpModel& model, const std::vector<double>& lo,
                  const std::vector<double>& hi);
LpResult solve_lp(const MilpModel& model);

// Depth-first branch and bound with best-bound pruning, most-fractional
// branching (index tie-break). Returns the proven optimum unless a node or
// time limit stops the search first.
Assignment solve(const MilpModel& model, const SolverConfig& cfg = {});

enum class ModelFormat : std::uint8_t { Lp, Mps };

void export_model(const MilpModel& model, ModelFormat format, const std::string& path);
void write_model(const MilpModel& model, ModelFormat format, std::ostream& out);

// Reads "name value" lines produced by an external solver, checks every
// constraint within tolerance and returns the completed assignment.
Assignment import_solution(const MilpModel& model, const std::string& path,
                           double feas_tol = 1e-6);

// Writes the assignment in the same "name value" format.
void export_solution(const MilpModel& model, const Assignment& a, const std::string& path);

} // namespace qdiff
