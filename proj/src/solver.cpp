#include "qdiff/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace qdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr int kBlandTrigger = 50; // consecutive degenerate pivots

double feas_tol(double v) { return 1e-9 * (1.0 + std::abs(v)); }

} // namespace

const char* solver_status_name(SolverStatus s) {
    switch (s) {
        case SolverStatus::Optimal: return "optimal";
        case SolverStatus::Infeasible: return "infeasible";
        case SolverStatus::BoundLimit: return "bound-limit";
    }
    return "?";
}

double Assignment::value_of(const MilpModel& model, const std::string& name) const {
    auto it = model.var_index.find(name);
    if (it == model.var_index.end()) fail(ErrorCode::Invalid, "unknown variable '" + name + "'");
    return values.at(it->second);
}

// ---------------------------------------------------------------------------
// The constraint/variable graph splits into independent blocks; each LP solve
// runs a dense bounded-variable simplex per block. The structure is static
// for a model, only bounds change between branch-and-bound nodes.

namespace {

struct Block {
    std::vector<int> vars;
    std::vector<int> rows;
};

struct BlockStructure {
    std::vector<Block> blocks;
    std::vector<int> free_vars;     // appear in no row
    std::vector<int> constant_rows; // rows without variables
};

BlockStructure decompose(const MilpModel& model) {
    const int n = static_cast<int>(model.vars.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    std::vector<char> in_row(n, 0);
    for (const auto& row : model.rows) {
        if (row.terms.empty()) continue;
        int first = row.terms[0].var;
        for (const auto& t : row.terms) {
            in_row[t.var] = 1;
            parent[find(t.var)] = find(first);
        }
    }

    BlockStructure bs;
    std::vector<int> block_of(n, -1);
    for (int v = 0; v < n; v++) {
        if (!in_row[v]) {
            bs.free_vars.push_back(v);
            continue;
        }
        int root = find(v);
        if (block_of[root] < 0) {
            block_of[root] = static_cast<int>(bs.blocks.size());
            bs.blocks.emplace_back();
        }
        bs.blocks[block_of[root]].vars.push_back(v);
    }
    for (size_t r = 0; r < model.rows.size(); r++) {
        if (model.rows[r].terms.empty())
            bs.constant_rows.push_back(static_cast<int>(r));
        else
            bs.blocks[block_of[find(model.rows[r].terms[0].var)]].rows.push_back(
                static_cast<int>(r));
    }
    return bs;
}

bool constant_row_feasible(const LinRow& row) {
    switch (row.sense) {
        case RowSense::Le: return 0.0 <= row.rhs + feas_tol(row.rhs);
        case RowSense::Ge: return 0.0 >= row.rhs - feas_tol(row.rhs);
        case RowSense::Eq: return std::abs(row.rhs) <= feas_tol(row.rhs);
    }
    return false;
}

// Bounded-variable primal simplex on one block, dense row-major tableau data
// with an explicit basis inverse. Deterministic: Dantzig pricing with index
// tie-breaks, Bland's rule after a degenerate stall.
class BlockSimplex {
  public:
    BlockSimplex(const MilpModel& model, const Block& block) : block_(block) {
        m_ = static_cast<int>(block.rows.size());
        n_ = static_cast<int>(block.vars.size());
        N_ = n_ + m_;
        std::unordered_map<int, int> col_of;
        col_of.reserve(n_);
        for (int j = 0; j < n_; j++) col_of[block.vars[j]] = j;

        A_.assign(static_cast<size_t>(m_) * N_, 0.0);
        b_.assign(std::max(m_, 1), 0.0);
        lo_.assign(N_, 0.0);
        hi_.assign(N_, 0.0);
        cost_.assign(N_, 0.0);

        for (int i = 0; i < m_; i++) {
            const auto& row = model.rows[block.rows[i]];
            for (const auto& t : row.terms) at(i, col_of[t.var]) += t.coef;
            b_[i] = row.rhs;
            int s = n_ + i;
            at(i, s) = 1.0;
            switch (row.sense) {
                case RowSense::Le: lo_[s] = 0, hi_[s] = kInf; break;
                case RowSense::Ge: lo_[s] = -kInf, hi_[s] = 0; break;
                case RowSense::Eq: lo_[s] = 0, hi_[s] = 0; break;
            }
        }
        for (int j = 0; j < n_; j++) cost_[j] = model.obj[block.vars[j]];
    }

    LpStatus solve(const std::vector<double>& lo, const std::vector<double>& hi,
                   std::vector<double>& model_values, double& obj_out) {
        for (int j = 0; j < n_; j++) {
            lo_[j] = lo[block_.vars[j]];
            hi_[j] = hi[block_.vars[j]];
            if (lo_[j] > hi_[j] + feas_tol(lo_[j])) return LpStatus::Infeasible;
        }

        basis_.resize(m_);
        std::iota(basis_.begin(), basis_.end(), n_);
        pos_.assign(N_, -1);
        for (int i = 0; i < m_; i++) pos_[basis_[i]] = i;
        at_upper_.assign(N_, 0);
        for (int j = 0; j < n_; j++)
            at_upper_[j] = std::isfinite(lo_[j]) ? 0 : 1;
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; i++) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
        xb_.assign(m_, 0.0);
        for (int i = 0; i < m_; i++) {
            double v = b_[i];
            for (int j = 0; j < n_; j++) v -= at(i, j) * nb_value(j);
            xb_[i] = v;
        }

        if (!iterate(true)) return LpStatus::Infeasible;
        iterate(false);

        for (int j = 0; j < n_; j++)
            model_values[block_.vars[j]] = pos_[j] >= 0 ? xb_[pos_[j]] : nb_value(j);
        obj_out = 0;
        for (int j = 0; j < n_; j++)
            obj_out += cost_[j] * model_values[block_.vars[j]];
        return LpStatus::Optimal;
    }

  private:
    double& at(int r, int c) { return A_[static_cast<size_t>(r) * N_ + c]; }
    double at(int r, int c) const { return A_[static_cast<size_t>(r) * N_ + c]; }
    double nb_value(int j) const { return at_upper_[j] ? hi_[j] : lo_[j]; }

    // violation sign of a basic value: +1 above upper, -1 below lower
    int violation_sign(int i) const {
        int v = basis_[i];
        if (xb_[i] > hi_[v] + feas_tol(hi_[v])) return 1;
        if (xb_[i] < lo_[v] - feas_tol(lo_[v])) return -1;
        return 0;
    }

    // Runs phase 1 (drive basics into their bounds) or phase 2 (optimize).
    // Returns false only when phase 1 proves infeasibility.
    bool iterate(bool phase1) {
        const long long max_iters = 2000 + 200LL * N_;
        int degenerate_run = 0;
        std::vector<double> y(m_), u(m_);

        for (long long iter = 0; iter < max_iters; iter++) {
            // basic cost vector
            bool any_violation = false;
            for (int i = 0; i < m_; i++) {
                int s = phase1 ? violation_sign(i) : 0;
                if (s != 0) any_violation = true;
                y[i] = phase1 ? static_cast<double>(s) : cost_[basis_[i]];
            }
            if (phase1 && !any_violation) return true;

            // y^T binv
            std::vector<double> yb(m_, 0.0);
            for (int i = 0; i < m_; i++) {
                if (y[i] == 0.0) continue;
                const double* row = binv_.data() + static_cast<size_t>(i) * m_;
                for (int k = 0; k < m_; k++) yb[k] += y[i] * row[k];
            }

            // pricing: pick entering variable and direction
            const bool bland = degenerate_run >= kBlandTrigger;
            int enter = -1, dir = 0;
            double best = phase1 ? -kCostTol : kCostTol;
            for (int j = 0; j < N_; j++) {
                if (pos_[j] >= 0) continue;
                if (hi_[j] - lo_[j] < kPivotTol) continue; // fixed
                double dot = 0;
                for (int i = 0; i < m_; i++)
                    if (yb[i] != 0.0) dot += yb[i] * at(i, j);
                // moving x_j by dx changes basics by -binv*A_j*dx; phase-1
                // objective f (total violation) changes at rate -dot, the
                // phase-2 objective at rate cost_j - dot
                double gain_up, gain_down;
                if (phase1) {
                    gain_up = dot;   // f decreases when dot > 0
                    gain_down = -dot;
                } else {
                    gain_up = cost_[j] - dot;
                    gain_down = dot - cost_[j];
                }
                int d = 0;
                double g = 0;
                if (!at_upper_[j] && gain_up > kCostTol) d = 1, g = gain_up;
                else if (at_upper_[j] && gain_down > kCostTol) d = -1, g = gain_down;
                if (d == 0) continue;
                if (bland) {
                    enter = j, dir = d;
                    break;
                }
                if (g > best) best = g, enter = j, dir = d;
            }
            if (enter < 0) return !phase1 || !any_violation_left();

            // direction through the basis
            for (int i = 0; i < m_; i++) {
                double v = 0;
                const double* row = binv_.data() + static_cast<size_t>(i) * m_;
                for (int k = 0; k < m_; k++) v += row[k] * at(k, enter);
                u[i] = v;
            }

            // ratio test: a feasible basic blocks at the bound it approaches;
            // a violated basic blocks only when moving back toward its range
            double t_limit = hi_[enter] - lo_[enter]; // bound flip
            int leave_pos = -1;
            double leave_to = 0; // bound the leaving basic lands on
            for (int i = 0; i < m_; i++) {
                double rate = -dir * u[i];
                if (std::abs(rate) <= kPivotTol) continue;
                int v = basis_[i];
                int vio = phase1 ? violation_sign(i) : 0;
                double cap;
                if (rate > 0) {
                    if (vio > 0) continue; // already above, drifting further
                    cap = vio < 0 ? lo_[v] : hi_[v];
                } else {
                    if (vio < 0) continue;
                    cap = vio > 0 ? hi_[v] : lo_[v];
                }
                if (!std::isfinite(cap)) continue;
                double t = std::max((cap - xb_[i]) / rate, 0.0);
                if (t < t_limit - 1e-12) {
                    t_limit = t;
                    leave_pos = i;
                    leave_to = cap;
                } else if (leave_pos >= 0 && t <= t_limit + 1e-12 && basis_[i] < basis_[leave_pos]) {
                    leave_pos = i;
                    leave_to = cap;
                }
            }

            if (!std::isfinite(t_limit))
                fail(ErrorCode::Invalid, "LP ray with unbounded improvement (internal error)");

            degenerate_run = t_limit <= 1e-11 ? degenerate_run + 1 : 0;

            if (leave_pos < 0) {
                // bound flip, no basis change
                for (int i = 0; i < m_; i++) xb_[i] -= dir * u[i] * t_limit;
                at_upper_[enter] = at_upper_[enter] ? 0 : 1;
                continue;
            }

            // pivot
            for (int i = 0; i < m_; i++) xb_[i] -= dir * u[i] * t_limit;
            int leaving = basis_[leave_pos];
            pos_[leaving] = -1;
            at_upper_[leaving] = leave_to == hi_[leaving] ? 1 : 0;
            xb_[leave_pos] = nb_value(enter) + dir * t_limit;
            basis_[leave_pos] = enter;
            pos_[enter] = leave_pos;

            double pivot = u[leave_pos];
            double* prow = binv_.data() + static_cast<size_t>(leave_pos) * m_;
            for (int k = 0; k < m_; k++) prow[k] /= pivot;
            for (int i = 0; i < m_; i++) {
                if (i == leave_pos || std::abs(u[i]) <= 0.0) continue;
                double f = u[i];
                double* row = binv_.data() + static_cast<size_t>(i) * m_;
                for (int k = 0; k < m_; k++) row[k] -= f * prow[k];
            }
        }
        fail(ErrorCode::Invalid, "simplex iteration limit exceeded (numerical trouble)");
    }

    bool any_violation_left() const {
        for (int i = 0; i < m_; i++)
            if (violation_sign(i) != 0) return true;
        return false;
    }

    const Block& block_;
    int m_ = 0, n_ = 0, N_ = 0;
    std::vector<double> A_, b_, lo_, hi_, cost_;
    std::vector<int> basis_, pos_;
    std::vector<char> at_upper_;
    std::vector<double> binv_, xb_;
};

LpResult solve_lp_structured(const MilpModel& model, const BlockStructure& bs,
                             const std::vector<double>& lo, const std::vector<double>& hi) {
    LpResult res;
    res.values.assign(model.vars.size(), 0.0);
    double obj = model.obj_constant;

    for (int r : bs.constant_rows)
        if (!constant_row_feasible(model.rows[r])) return res;

    for (int v : bs.free_vars) {
        if (lo[v] > hi[v] + feas_tol(lo[v])) return res;
        res.values[v] = model.obj[v] > 0 ? hi[v] : lo[v];
        obj += model.obj[v] * res.values[v];
    }
    for (const auto& block : bs.blocks) {
        BlockSimplex simplex(model, block);
        double block_obj = 0;
        if (simplex.solve(lo, hi, res.values, block_obj) == LpStatus::Infeasible) return res;
        obj += block_obj;
    }
    res.status = LpStatus::Optimal;
    res.objective = obj;
    return res;
}

} // namespace

LpResult solve_lp(const MilpModel& model, const std::vector<double>& lo,
                  const std::vector<double>& hi) {
    return solve_lp_structured(model, decompose(model), lo, hi);
}

LpResult solve_lp(const MilpModel& model) {
    std::vector<double> lo, hi;
    for (const auto& v : model.vars) lo.push_back(v.lo), hi.push_back(v.hi);
    return solve_lp(model, lo, hi);
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

bool var_is_integral(const MilpVar& v) { return v.kind != VarKind::Continuous; }

int pick_branch_var(const MilpModel& model, const std::vector<double>& x, double int_tol) {
    int best = -1;
    double best_score = int_tol;
    for (size_t j = 0; j < model.vars.size(); j++) {
        if (!var_is_integral(model.vars[j])) continue;
        double frac = x[j] - std::floor(x[j]);
        double dist = std::min(frac, 1.0 - frac);
        if (dist > best_score + 1e-15) {
            best_score = dist;
            best = static_cast<int>(j);
        }
    }
    return best;
}

bool row_holds(const MilpModel& model, const LinRow& row, const std::vector<double>& x) {
    double lhs = 0;
    for (const auto& t : row.terms) lhs += t.coef * x[t.var];
    double tol = 1e-7 * (1 + std::abs(row.rhs));
    switch (row.sense) {
        case RowSense::Le: return lhs <= row.rhs + tol;
        case RowSense::Ge: return lhs >= row.rhs - tol;
        case RowSense::Eq: return std::abs(lhs - row.rhs) <= tol;
    }
    return false;
}

// Fractional integer variables with zero objective weight (sign binaries and
// the like) often sit at interior values of a degenerate face. Rounding them
// in place is free when every incident row stays satisfied, and saves a
// branch each.
void repair_free_integers(const MilpModel& model,
                          const std::vector<std::vector<int>>& rows_of_var,
                          const std::vector<double>& lo, const std::vector<double>& hi,
                          std::vector<double>& x, double int_tol) {
    for (size_t j = 0; j < model.vars.size(); j++) {
        if (!var_is_integral(model.vars[j]) || model.obj[j] != 0) continue;
        double frac = x[j] - std::floor(x[j]);
        if (std::min(frac, 1.0 - frac) <= int_tol) continue;
        double original = x[j];
        for (double cand : {std::floor(original), std::ceil(original)}) {
            if (cand < lo[j] - 1e-9 || cand > hi[j] + 1e-9) continue;
            x[j] = cand;
            bool ok = true;
            for (int r : rows_of_var[j])
                if (!row_holds(model, model.rows[r], x)) {
                    ok = false;
                    break;
                }
            if (ok) break;
            x[j] = original;
        }
    }
}

} // namespace

Assignment solve(const MilpModel& model, const SolverConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto out_of_time = [&] {
        if (cfg.time_limit_sec < 0) return false;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
               cfg.time_limit_sec;
    };

    BlockStructure bs = decompose(model);
    std::vector<std::vector<int>> rows_of_var(model.vars.size());
    for (size_t r = 0; r < model.rows.size(); r++)
        for (const auto& t : model.rows[r].terms) rows_of_var[t.var].push_back(static_cast<int>(r));
    std::vector<double> lo, hi;
    for (const auto& v : model.vars) lo.push_back(v.lo), hi.push_back(v.hi);

    Assignment incumbent;
    incumbent.status = SolverStatus::Infeasible;
    double incumbent_obj = -kInf;
    bool limit_hit = false;

    struct Item {
        bool undo = false;
        int var = -1;
        double lo = 0, hi = 0; // bounds to apply (enter) or restore (undo)
    };
    std::vector<Item> stack;
    stack.push_back({false, -1, 0, 0}); // root
    long long nodes = 0;

    while (!stack.empty()) {
        Item item = stack.back();
        stack.pop_back();
        if (item.undo) {
            lo[item.var] = item.lo;
            hi[item.var] = item.hi;
            continue;
        }
        if (item.var >= 0) {
            stack.push_back({true, item.var, lo[item.var], hi[item.var]});
            lo[item.var] = item.lo;
            hi[item.var] = item.hi;
        }

        nodes++;
        if ((cfg.node_limit >= 0 && nodes > cfg.node_limit) || out_of_time()) {
            limit_hit = true;
            break;
        }

        LpResult rel = solve_lp_structured(model, bs, lo, hi);
        if (rel.status == LpStatus::Infeasible) continue;
        // the 1e-7 slack absorbs relaxation noise on ties; improvements
        // below it are beneath the reporting tolerance
        if (rel.objective <= incumbent_obj + cfg.gap_tol + 1e-7) continue;

        repair_free_integers(model, rows_of_var, lo, hi, rel.values, cfg.int_tol);
        int branch = pick_branch_var(model, rel.values, cfg.int_tol);
        if (branch < 0) {
            incumbent.values = rel.values;
            incumbent.objective = rel.objective;
            incumbent.status = SolverStatus::Optimal;
            incumbent_obj = rel.objective;
            continue;
        }

        double x = rel.values[branch];
        double fl = std::floor(x), ce = std::ceil(x);
        Item down{false, branch, lo[branch], fl};
        Item up{false, branch, ce, hi[branch]};
        // dive toward the nearer integer first (LIFO: push the far child first)
        if (x - fl >= 0.5) {
            stack.push_back(down);
            stack.push_back(up);
        } else {
            stack.push_back(up);
            stack.push_back(down);
        }
    }

    if (limit_hit) incumbent.status = SolverStatus::BoundLimit;
    return incumbent;
}

} // namespace qdiff
