#include "qdiff/milp.hpp"

#include <algorithm>
#include <cmath>

#include "qdiff/solver.hpp"

namespace qdiff {

int MilpModel::add_var(const std::string& name, VarKind kind, double lo, double hi,
                       double obj_coef) {
    int idx = static_cast<int>(vars.size());
    vars.push_back({name, kind, lo, hi});
    obj.push_back(obj_coef);
    var_index.emplace(name, idx);
    return idx;
}

void MilpModel::add_row(std::vector<LinTerm> terms, RowSense sense, double rhs) {
    rows.push_back({std::move(terms), sense, rhs});
}

namespace {

int pick_scale_pow(const std::vector<double>& impacts, bool integral) {
    if (integral) return 0;
    for (int s = 0; s <= 6; s++) {
        double scale = std::pow(10.0, s);
        bool ok = true;
        for (double v : impacts)
            if (std::abs(v * scale - std::llround(v * scale)) > 1e-9) {
                ok = false;
                break;
            }
        if (ok) return s;
    }
    return 6;
}

} // namespace

MilpModel make_model_skeleton(const CanonicalRelation& T1, const CanonicalRelation& T2,
                              const TupleMapping& mapping, const Priors& priors,
                              const CardinalityReq& req, const MilpOptions& opts) {
    priors.validate();

    MilpModel m;
    m.n1 = static_cast<int>(T1.tuples.size());
    m.n2 = static_cast<int>(T2.tuples.size());
    m.mapping = mapping;
    m.req = req;
    m.opts = opts;
    m.const_a = priors.log_removed();
    m.const_b = priors.log_unchanged();
    m.const_c = priors.log_changed();

    for (const auto& t : T1.tuples) m.orig_impact.push_back(t.impact);
    for (const auto& t : T2.tuples) m.orig_impact.push_back(t.impact);
    for (double v : m.orig_impact)
        if (v < 0) fail(ErrorCode::Invalid, "negative impacts are not encodable");

    m.scale_pow = pick_scale_pow(m.orig_impact, T1.integral_impacts && T2.integral_impacts);
    m.scale = std::pow(10.0, m.scale_pow);
    for (double v : m.orig_impact)
        m.scaled_impact.push_back(static_cast<double>(std::llround(v * m.scale)));

    double total_left = 0, total_right = 0, max_single = 0;
    for (int g = 0; g < m.n1; g++) total_left += m.scaled_impact[g];
    for (int g = m.n1; g < m.n1 + m.n2; g++) total_right += m.scaled_impact[g];
    for (double v : m.scaled_impact) max_single = std::max(max_single, v);
    m.bound_L = 0;
    m.bound_U = std::max(std::max(total_left, total_right), max_single) + m.scale;

    for (const auto& e : mapping.matches) {
        if (e.left < 0 || e.left >= m.n1 || e.right < 0 || e.right >= m.n2)
            fail(ErrorCode::Invalid, "tuple match references a missing canonical row");
        if (!(e.p > 0.0 && e.p <= 1.0))
            fail(ErrorCode::Invalid, "tuple match probability must lie in (0, 1]");
    }

    m.tuple_slots.resize(m.n1 + m.n2);
    m.z_slot.assign(mapping.matches.size(), -1);
    m.iaux_slot.assign(mapping.matches.size(), -1);
    return m;
}

void encode_tuple(MilpModel& m, int g) {
    const double U = m.bound_U;
    const double gap = 1.0; // one scaled impact unit, the smallest deviation
    const double I = m.scaled_impact.at(g);
    const double b = m.const_b, c = m.const_c;
    // P_i attains values in {0, b, c}; its linearization uses family bounds
    const double Lp = std::min(std::min(b, c), 0.0);
    const double Up = 0.0;
    const std::string sg = std::to_string(g);

    auto& slots = m.tuple_slots.at(g);
    slots.x = m.add_var("x_" + sg, VarKind::Binary, 0, 1, m.const_a);
    slots.y = m.add_var("y_" + sg, VarKind::Binary, 0, 1, 0);
    slots.w = m.add_var("w_" + sg, VarKind::Binary, 0, 1, 0);
    slots.istar = m.add_var("Istar_" + sg, VarKind::Integer, 0, U, 0);
    slots.p = m.add_var("P_" + sg, VarKind::Continuous, Lp, Up, 1.0);

    // y = 1  <=>  Istar = I; y = 0 forces |Istar - I| >= gap via the sign
    // binary w (w = 0: deviation above, w = 1: deviation below)
    m.add_row({{slots.istar, 1}, {slots.y, U}}, RowSense::Le, I + U);
    m.add_row({{slots.istar, -1}, {slots.y, U}}, RowSense::Le, U - I);
    m.add_row({{slots.istar, 1}, {slots.y, gap}, {slots.w, 2 * U}}, RowSense::Ge, I + gap);
    m.add_row({{slots.istar, -1}, {slots.y, gap}, {slots.w, -2 * U}}, RowSense::Ge,
              gap - 2 * U - I);

    // P = 0 when x = 1, else P = y*b + (1-y)*c
    m.add_row({{slots.p, 1}, {slots.x, Lp}}, RowSense::Ge, Lp);
    m.add_row({{slots.p, 1}, {slots.x, Up}}, RowSense::Le, Up);
    m.add_row({{slots.p, 1}, {slots.y, -(b - c)}, {slots.x, Up}}, RowSense::Ge, c);
    m.add_row({{slots.p, 1}, {slots.y, -(b - c)}, {slots.x, Lp}}, RowSense::Le, c);
}

void encode_match(MilpModel& m, int k) {
    const auto& e = m.mapping.matches.at(k);
    const int gl = m.global_index(Side::Left, e.left);
    const int gr = m.global_index(Side::Right, e.right);
    const double logp = std::log(e.p);
    const double log1mp = log_match_excluded(e.p);

    int z = m.add_var("z_" + std::to_string(gl) + "_" + std::to_string(gr), VarKind::Binary, 0, 1,
                      logp - log1mp);
    m.z_slot.at(k) = z;
    m.obj_constant += log1mp;

    // a removed endpoint excludes the match
    m.add_row({{z, 1}, {m.tuple_slots[gl].x, 1}}, RowSense::Le, 1);
    m.add_row({{z, 1}, {m.tuple_slots[gr].x, 1}}, RowSense::Le, 1);
}

void encode_valid_mapping(MilpModel& m) {
    std::vector<std::vector<int>> inc(m.n1 + m.n2);
    for (size_t k = 0; k < m.mapping.matches.size(); k++) {
        const auto& e = m.mapping.matches[k];
        inc[m.global_index(Side::Left, e.left)].push_back(m.z_slot[k]);
        inc[m.global_index(Side::Right, e.right)].push_back(m.z_slot[k]);
    }

    for (int g = 0; g < m.n1 + m.n2; g++) {
        bool constrained = m.req.deg1(m.side_of(g));
        if (constrained && !inc[g].empty()) {
            std::vector<LinTerm> terms;
            for (int z : inc[g]) terms.push_back({z, 1});
            m.add_row(std::move(terms), RowSense::Le, 1);
        }
        if (m.opts.coverage) {
            std::vector<LinTerm> terms;
            for (int z : inc[g]) terms.push_back({z, 1});
            terms.push_back({m.tuple_slots[g].x, 1});
            m.add_row(std::move(terms), RowSense::Ge, 1);
        }
    }
}

void encode_impact_equality(MilpModel& m) {
    const double U = m.bound_U;
    const double L = m.bound_L;
    const Side hub = m.req.hub_side();

    const int hub_count = hub == Side::Right ? m.n2 : m.n1;
    std::vector<std::vector<int>> hub_aux(hub_count);

    for (size_t k = 0; k < m.mapping.matches.size(); k++) {
        const auto& e = m.mapping.matches[k];
        const int gl = m.global_index(Side::Left, e.left);
        const int gr = m.global_index(Side::Right, e.right);
        const int leaf_g = hub == Side::Right ? gl : gr;
        const int hub_local = hub == Side::Right ? e.right : e.left;
        const int z = m.z_slot[k];
        const int leaf_istar = m.tuple_slots[leaf_g].istar;

        // Iaux = z * Istar(leaf)
        int aux = m.add_var("Iaux_" + std::to_string(gl) + "_" + std::to_string(gr),
                            VarKind::Continuous, 0, U, 0);
        m.iaux_slot[k] = aux;
        m.add_row({{aux, 1}, {z, -U}}, RowSense::Le, 0);
        m.add_row({{aux, 1}, {z, -L}}, RowSense::Ge, 0);
        m.add_row({{aux, 1}, {leaf_istar, -1}, {z, -L}}, RowSense::Le, -L);
        m.add_row({{aux, 1}, {leaf_istar, -1}, {z, -U}}, RowSense::Ge, -U);
        hub_aux[hub_local].push_back(aux);
    }

    // strengthening rows: when a selected match pairs its endpoints
    // exclusively (one-to-one requirement, or no other candidates on either
    // end), unequal original impacts force a change on one side. These keep
    // the relaxation bound tight where the big-M rows alone let both y float.
    {
        std::vector<int> cand_deg(m.n1 + m.n2, 0);
        for (const auto& e : m.mapping.matches) {
            cand_deg[m.global_index(Side::Left, e.left)]++;
            cand_deg[m.global_index(Side::Right, e.right)]++;
        }
        for (size_t k = 0; k < m.mapping.matches.size(); k++) {
            const auto& e = m.mapping.matches[k];
            const int gl = m.global_index(Side::Left, e.left);
            const int gr = m.global_index(Side::Right, e.right);
            if (m.scaled_impact[gl] == m.scaled_impact[gr]) continue;
            bool exclusive = (m.req.left_deg1 && m.req.right_deg1) ||
                             (cand_deg[gl] == 1 && cand_deg[gr] == 1);
            if (!exclusive) continue;
            m.add_row({{m.tuple_slots[gl].y, 1}, {m.tuple_slots[gr].y, 1}, {m.z_slot[k], 1}},
                      RowSense::Le, 2);
        }
    }

    // per-hub balance, suspended when the hub is removed:
    // |sum Iaux - Istar(hub)| <= U * x(hub)
    for (int h = 0; h < hub_count; h++) {
        const int hg = m.global_index(hub, h);
        std::vector<LinTerm> up, down;
        for (int aux : hub_aux[h]) {
            up.push_back({aux, 1});
            down.push_back({aux, 1});
        }
        up.push_back({m.tuple_slots[hg].istar, -1});
        up.push_back({m.tuple_slots[hg].x, -U});
        m.add_row(std::move(up), RowSense::Le, 0);
        down.push_back({m.tuple_slots[hg].istar, -1});
        down.push_back({m.tuple_slots[hg].x, U});
        m.add_row(std::move(down), RowSense::Ge, 0);
    }

    // without coverage rows, a kept-but-unmatched leaf must zero its impact:
    // Istar <= U*x + U*(sum of incident z)
    if (!m.opts.coverage) {
        const Side leaf_side = hub == Side::Right ? Side::Left : Side::Right;
        const int leaf_count = leaf_side == Side::Left ? m.n1 : m.n2;
        std::vector<std::vector<int>> inc(leaf_count);
        for (size_t k = 0; k < m.mapping.matches.size(); k++) {
            const auto& e = m.mapping.matches[k];
            inc[leaf_side == Side::Left ? e.left : e.right].push_back(m.z_slot[k]);
        }
        for (int l = 0; l < leaf_count; l++) {
            const int lg = m.global_index(leaf_side, l);
            std::vector<LinTerm> terms{{m.tuple_slots[lg].istar, 1},
                                       {m.tuple_slots[lg].x, -U}};
            for (int z : inc[l]) terms.push_back({z, -U});
            m.add_row(std::move(terms), RowSense::Le, 0);
        }
    }
}

MilpModel build_milp(const CanonicalRelation& T1, const CanonicalRelation& T2,
                     const TupleMapping& mapping, const Priors& priors, const CardinalityReq& req,
                     const MilpOptions& opts) {
    MilpModel m = make_model_skeleton(T1, T2, mapping, priors, req, opts);
    for (int g = 0; g < m.n1 + m.n2; g++) encode_tuple(m, g);
    for (size_t k = 0; k < mapping.matches.size(); k++) encode_match(m, static_cast<int>(k));
    encode_valid_mapping(m);
    encode_impact_equality(m);
    return m;
}

ExplanationSet decode_solution(const MilpModel& m, const Assignment& assignment) {
    if (assignment.status == SolverStatus::Infeasible)
        fail(ErrorCode::Infeasible, "cannot decode an infeasible assignment");
    const auto& v = assignment.values;

    ExplanationSet e;
    for (int g = 0; g < m.n1 + m.n2; g++) {
        const auto& s = m.tuple_slots[g];
        RowRef row{m.side_of(g), m.local_of(g)};
        if (v.at(s.x) > 0.5) {
            e.delta.push_back(row);
        } else if (v.at(s.y) < 0.5) {
            double scaled = std::llround(v.at(s.istar));
            e.value_changes.push_back({row, scaled / m.scale});
        }
    }
    for (size_t k = 0; k < m.mapping.matches.size(); k++)
        if (v.at(m.z_slot[k]) > 0.5) e.evidence.push_back(m.mapping.matches[k]);
    e.normalize();
    return e;
}

double model_objective(const MilpModel& m, const std::vector<double>& values) {
    double total = m.obj_constant;
    for (size_t i = 0; i < m.obj.size(); i++)
        if (m.obj[i] != 0) total += m.obj[i] * values.at(i);
    return total;
}

} // namespace qdiff
