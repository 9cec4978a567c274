#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdiff/probability.hpp"

namespace qdiff {

enum class VarKind : std::uint8_t { Binary, Integer, Continuous };
enum class RowSense : std::uint8_t { Le, Eq, Ge };

struct MilpVar {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lo = 0.0;
    double hi = 0.0;
};

struct LinTerm {
    int var = 0;
    double coef = 0.0;
};

struct LinRow {
    std::vector<LinTerm> terms;
    RowSense sense = RowSense::Le;
    double rhs = 0.0;
};

struct MilpOptions {
    // Coverage constraints (sum z >= 1 - x on both sides) pin the feasible
    // set to explanations where every kept tuple is matched. Disabling them
    // allows kept-but-unmatched tuples with impact forced to 0.
    bool coverage = true;
};

// Variables, linear constraints and the log-probability objective produced
// by the MILP transformation of an instance.
struct MilpModel {
    std::vector<MilpVar> vars;
    std::vector<LinRow> rows;
    std::vector<double> obj; // objective coefficient per variable, maximize
    double obj_constant = 0.0;

    // model constants: a = log(1-alpha), b = log(alpha*beta),
    // c = log(alpha*(1-beta)); L/U bound the (scaled) impact domain; impacts
    // are scaled by 10^scale_pow so integer variables have integral domains.
    double const_a = 0, const_b = 0, const_c = 0;
    double bound_L = 0, bound_U = 0;
    int scale_pow = 0;
    double scale = 1.0;

    std::map<std::string, int> var_index;

    // decode metadata
    struct TupleSlots {
        int x = -1, y = -1, w = -1, istar = -1, p = -1;
    };
    int n1 = 0, n2 = 0;
    std::vector<TupleSlots> tuple_slots; // global tuple index: left then right
    std::vector<int> z_slot;             // per encoded match
    std::vector<int> iaux_slot;          // per encoded match
    TupleMapping mapping;                // the encoded matches
    std::vector<double> scaled_impact;   // per global tuple
    std::vector<double> orig_impact;     // per global tuple, unscaled
    CardinalityReq req;
    MilpOptions opts;

    int add_var(const std::string& name, VarKind kind, double lo, double hi, double obj_coef);
    void add_row(std::vector<LinTerm> terms, RowSense sense, double rhs);

    int global_index(Side side, int idx) const {
        return side == Side::Left ? idx : n1 + idx;
    }
    Side side_of(int g) const { return g < n1 ? Side::Left : Side::Right; }
    int local_of(int g) const { return g < n1 ? g : g - n1; }
};

// Skeleton with constants, scaling and metadata but no variables yet.
MilpModel make_model_skeleton(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req, const MilpOptions& opts = {});

// x_i, y_i, w_i, Istar_i, P_i plus the y-link and P-linearization rows and
// the tuple's objective terms.
void encode_tuple(MilpModel& model, int global_index);
// z_{i,j} with the exclusion rows z <= 1-x on both endpoints and the match
// objective terms.
void encode_match(MilpModel& model, int match_index);
// Degree rows per the cardinality requirement, plus coverage rows when
// enabled.
void encode_valid_mapping(MilpModel& model);
// Iaux_{i,j} product linearizations and per-hub balance rows.
void encode_impact_equality(MilpModel& model);

MilpModel build_milp(const CanonicalRelation& T1, const CanonicalRelation& T2,
                     const TupleMapping& mapping, const Priors& priors, const CardinalityReq& req,
                     const MilpOptions& opts = {});

struct Assignment; // solver.hpp

ExplanationSet decode_solution(const MilpModel& model, const Assignment& assignment);

// Objective value of an assignment vector, including the model constant,
// summed in variable order.
double model_objective(const MilpModel& model, const std::vector<double>& values);

} // namespace qdiff
