#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qdiff/solver.hpp"

namespace qdiff {

namespace {

// fixed 12-significant-digit printing keeps dumps byte-stable
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_lp(const MilpModel& m, std::ostream& out) {
    out << "\\ generated model\n";
    out << "Maximize\n";
    out << " obj:";
    bool first = true;
    for (size_t j = 0; j < m.vars.size(); j++) {
        if (m.obj[j] == 0) continue;
        double c = m.obj[j];
        out << (c < 0 ? " - " : (first ? " " : " + ")) << num(std::abs(c)) << " " << m.vars[j].name;
        first = false;
    }
    if (m.obj_constant != 0) {
        double c = m.obj_constant;
        out << (c < 0 ? " - " : (first ? " " : " + ")) << num(std::abs(c));
        first = false;
    }
    if (first) out << " 0";
    out << "\nSubject To\n";
    for (size_t r = 0; r < m.rows.size(); r++) {
        const auto& row = m.rows[r];
        out << " c" << r << ":";
        bool f2 = true;
        for (const auto& t : row.terms) {
            double c = t.coef;
            out << (c < 0 ? " - " : (f2 ? " " : " + ")) << num(std::abs(c)) << " "
                << m.vars[t.var].name;
            f2 = false;
        }
        if (f2) out << " 0";
        switch (row.sense) {
            case RowSense::Le: out << " <= "; break;
            case RowSense::Ge: out << " >= "; break;
            case RowSense::Eq: out << " = "; break;
        }
        out << num(row.rhs) << "\n";
    }
    out << "Bounds\n";
    for (const auto& v : m.vars) {
        if (v.kind == VarKind::Binary) continue; // implied by Binaries section
        out << " " << num(v.lo) << " <= " << v.name << " <= " << num(v.hi) << "\n";
    }
    bool any_bin = false, any_int = false;
    for (const auto& v : m.vars) {
        any_bin |= v.kind == VarKind::Binary;
        any_int |= v.kind == VarKind::Integer;
    }
    if (any_bin) {
        out << "Binaries\n";
        for (const auto& v : m.vars)
            if (v.kind == VarKind::Binary) out << " " << v.name << "\n";
    }
    if (any_int) {
        out << "Generals\n";
        for (const auto& v : m.vars)
            if (v.kind == VarKind::Integer) out << " " << v.name << "\n";
    }
    out << "End\n";
}

void write_mps(const MilpModel& m, std::ostream& out) {
    out << "NAME          MODEL\n";
    out << "ROWS\n";
    out << " N  OBJ\n";
    for (size_t r = 0; r < m.rows.size(); r++) {
        char s = m.rows[r].sense == RowSense::Le ? 'L' : (m.rows[r].sense == RowSense::Ge ? 'G' : 'E');
        out << " " << s << "  C" << r << "\n";
    }

    // column-major terms
    std::vector<std::vector<std::pair<std::string, double>>> cols(m.vars.size());
    for (size_t j = 0; j < m.vars.size(); j++)
        if (m.obj[j] != 0) cols[j].push_back({"OBJ", m.obj[j]});
    for (size_t r = 0; r < m.rows.size(); r++)
        for (const auto& t : m.rows[r].terms)
            cols[t.var].push_back({"C" + std::to_string(r), t.coef});

    auto field = [](const std::string& s) {
        std::string f = s;
        if (f.size() < 10) f.resize(10, ' ');
        return f;
    };

    out << "COLUMNS\n";
    bool in_int = false;
    int marker = 0;
    for (size_t j = 0; j < m.vars.size(); j++) {
        bool is_int = m.vars[j].kind != VarKind::Continuous;
        if (is_int != in_int) {
            out << "    MARKER" << std::string(17, ' ') << "'MARKER'" << std::string(17, ' ')
                << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
            in_int = is_int;
            marker++;
        }
        for (const auto& [rowname, coef] : cols[j])
            out << "    " << field(m.vars[j].name) << field(rowname) << num(coef) << "\n";
        if (cols[j].empty())
            out << "    " << field(m.vars[j].name) << field("OBJ") << "0\n";
    }
    if (in_int)
        out << "    MARKER" << std::string(17, ' ') << "'MARKER'" << std::string(17, ' ')
            << "'INTEND'\n";

    out << "RHS\n";
    for (size_t r = 0; r < m.rows.size(); r++)
        if (m.rows[r].rhs != 0)
            out << "    " << field("RHS") << field("C" + std::to_string(r)) << num(m.rows[r].rhs)
                << "\n";
    if (m.obj_constant != 0)
        out << "    " << field("RHS") << field("OBJ") << num(-m.obj_constant) << "\n";

    out << "BOUNDS\n";
    for (const auto& v : m.vars) {
        if (v.kind == VarKind::Binary) {
            out << " BV " << field("BND") << field(v.name) << "\n";
        } else {
            out << " LO " << field("BND") << field(v.name) << num(v.lo) << "\n";
            out << " UP " << field("BND") << field(v.name) << num(v.hi) << "\n";
        }
    }
    out << "ENDATA\n";
}

} // namespace

void write_model(const MilpModel& model, ModelFormat format, std::ostream& out) {
    if (format == ModelFormat::Lp)
        write_lp(model, out);
    else
        write_mps(model, out);
}

void export_model(const MilpModel& model, ModelFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_model(model, format, out);
    if (!out.flush()) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

Assignment import_solution(const MilpModel& model, const std::string& path, double feas_tol) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open solution file '" + path + "'");

    std::vector<double> values(model.vars.size(), 0.0);
    std::vector<char> seen(model.vars.size(), 0);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        std::string name;
        double value;
        if (!(ls >> name >> value))
            fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": expected 'name value'");
        auto it = model.var_index.find(name);
        if (it == model.var_index.end())
            fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": unknown variable '" +
                                       name + "'");
        values[it->second] = value;
        seen[it->second] = 1;
    }
    for (size_t j = 0; j < seen.size(); j++)
        if (!seen[j])
            fail(ErrorCode::Parse, path + ": solution is missing variable '" + model.vars[j].name + "'");

    // bounds, integrality and row feasibility
    for (size_t j = 0; j < model.vars.size(); j++) {
        const auto& v = model.vars[j];
        double tol = feas_tol * (1 + std::abs(values[j]));
        if (values[j] < v.lo - tol || values[j] > v.hi + tol)
            fail(ErrorCode::Invalid, "solution value of '" + v.name + "' violates its bounds");
        if (v.kind != VarKind::Continuous &&
            std::abs(values[j] - std::llround(values[j])) > feas_tol)
            fail(ErrorCode::Invalid, "solution value of '" + v.name + "' is not integral");
    }
    for (size_t r = 0; r < model.rows.size(); r++) {
        const auto& row = model.rows[r];
        double lhs = 0;
        for (const auto& t : row.terms) lhs += t.coef * values[t.var];
        double tol = feas_tol * (1 + std::abs(row.rhs));
        bool ok = row.sense == RowSense::Le   ? lhs <= row.rhs + tol
                  : row.sense == RowSense::Ge ? lhs >= row.rhs - tol
                                              : std::abs(lhs - row.rhs) <= tol;
        if (!ok)
            fail(ErrorCode::Invalid,
                 "solution violates constraint c" + std::to_string(r) + " beyond tolerance");
    }

    Assignment a;
    a.values = std::move(values);
    a.objective = model_objective(model, a.values);
    a.status = SolverStatus::Optimal;
    return a;
}

void export_solution(const MilpModel& model, const Assignment& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    char buf[64];
    for (size_t j = 0; j < model.vars.size(); j++) {
        std::snprintf(buf, sizeof(buf), "%.17g", a.values.at(j));
        out << model.vars[j].name << " " << buf << "\n";
    }
    if (!out.flush()) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

} // namespace qdiff
