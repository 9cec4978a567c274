#include "qdiff/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace qdiff {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
    return s.substr(b, e - b);
}

std::string fold_case(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const char* value_kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::Text: return "text";
        case ValueKind::Integer: return "integer";
        case ValueKind::Real: return "real";
    }
    return "?";
}

ValueKind value_kind_from_name(const std::string& name) {
    if (name == "text") return ValueKind::Text;
    if (name == "integer") return ValueKind::Integer;
    if (name == "real") return ValueKind::Real;
    fail(ErrorCode::Parse, "unknown value kind '" + name + "'");
}

bool value_is_numeric(const Value& v) { return !std::holds_alternative<std::string>(v); }

double value_as_real(const Value& v) {
    if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    fail(ErrorCode::Query, "value is not numeric");
}

std::string value_to_string(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<long long>(&v)) return std::to_string(*i);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v));
    return buf;
}

std::string value_key(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return fold_case(trim(*s));
    if (const auto* i = std::get_if<long long>(&v)) return std::to_string(*i);
    double d = std::get<double>(v);
    if (d == std::floor(d) && std::abs(d) < 1e15) {
        return std::to_string(static_cast<long long>(d));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

int Relation::attr_index(const std::string& attr) const {
    for (size_t i = 0; i < schema.size(); i++)
        if (schema[i].name == attr) return static_cast<int>(i);
    return -1;
}

int Relation::require_attr(const std::string& attr) const {
    int i = attr_index(attr);
    if (i < 0) fail(ErrorCode::Query, "unknown attribute '" + attr + "' in relation '" + name + "'");
    return i;
}

const char* agg_kind_name(AggKind k) {
    switch (k) {
        case AggKind::None: return "none";
        case AggKind::Sum: return "SUM";
        case AggKind::Count: return "COUNT";
        case AggKind::Avg: return "AVG";
        case AggKind::Max: return "MAX";
        case AggKind::Min: return "MIN";
    }
    return "?";
}

AggKind agg_kind_from_name(const std::string& name) {
    std::string n = fold_case(name);
    if (n == "none") return AggKind::None;
    if (n == "sum") return AggKind::Sum;
    if (n == "count") return AggKind::Count;
    if (n == "avg" || n == "average") return AggKind::Avg;
    if (n == "max") return AggKind::Max;
    if (n == "min") return AggKind::Min;
    fail(ErrorCode::Parse, "unknown aggregate '" + name + "'");
}

double ProvenanceRelation::total_impact() const {
    double t = 0;
    for (const auto& tu : tuples) t += tu.impact;
    return t;
}

// ---------------------------------------------------------------------------
// CSV loading (RFC 4180 style: quoted fields, "" escapes, CRLF tolerated)

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open CSV file '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    size_t line = 1;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (size_t i = 0; i < data.size(); i++) {
        char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    i++;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
                if (c == '\n') line++;
            }
        } else if (c == '"') {
            if (field_started && !field.empty())
                fail(ErrorCode::Parse, path + ":" + std::to_string(line) + ": stray quote inside field");
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; the '\n' (if any) ends the record
        } else if (c == '\n') {
            end_record();
            line++;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) fail(ErrorCode::Parse, path + ": unterminated quoted field");
    if (!field.empty() || !record.empty()) end_record();
    return records;
}

Value parse_cell(const std::string& raw, ValueKind kind, const std::string& path, size_t row,
                 size_t col) {
    auto pos = [&] { return path + ": row " + std::to_string(row) + ", column " + std::to_string(col); };
    std::string s = trim(raw);
    if (s.empty()) fail(ErrorCode::Parse, pos() + ": empty cell (NULLs are not supported)");
    switch (kind) {
        case ValueKind::Text: return raw;
        case ValueKind::Integer: {
            long long v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                fail(ErrorCode::Parse, pos() + ": '" + s + "' is not an integer");
            return v;
        }
        case ValueKind::Real: {
            char* endp = nullptr;
            double v = std::strtod(s.c_str(), &endp);
            if (endp != s.c_str() + s.size() || !std::isfinite(v))
                fail(ErrorCode::Parse, pos() + ": '" + s + "' is not a real number");
            return v;
        }
    }
    fail(ErrorCode::Parse, pos() + ": bad kind");
}

} // namespace

Relation load_csv(const std::string& path, const std::string& name,
                  const std::vector<Attribute>& schema) {
    if (schema.empty()) fail(ErrorCode::Invalid, "relation '" + name + "' has an empty schema");
    {
        std::set<std::string> seen;
        for (const auto& a : schema)
            if (!seen.insert(a.name).second)
                fail(ErrorCode::Parse, "duplicate attribute name '" + a.name + "' in relation '" + name + "'");
    }

    auto records = parse_csv(path);
    if (records.empty()) fail(ErrorCode::Parse, path + ": missing header row");

    const auto& header = records[0];
    if (header.size() != schema.size())
        fail(ErrorCode::Parse, path + ": header has " + std::to_string(header.size()) +
                                   " columns, schema declares " + std::to_string(schema.size()));
    for (size_t i = 0; i < schema.size(); i++) {
        if (trim(header[i]) != schema[i].name)
            fail(ErrorCode::Parse, path + ": header column " + std::to_string(i + 1) + " is '" +
                                       trim(header[i]) + "', expected '" + schema[i].name + "'");
    }

    Relation rel;
    rel.name = name;
    rel.schema = schema;
    for (size_t r = 1; r < records.size(); r++) {
        const auto& rec = records[r];
        if (rec.size() == 1 && trim(rec[0]).empty()) continue; // trailing blank line
        if (rec.size() != schema.size())
            fail(ErrorCode::Parse, path + ": row " + std::to_string(r + 1) + " has " +
                                       std::to_string(rec.size()) + " fields, expected " +
                                       std::to_string(schema.size()));
        std::vector<Value> row;
        row.reserve(schema.size());
        for (size_t c = 0; c < schema.size(); c++)
            row.push_back(parse_cell(rec[c], schema[c].kind, path, r + 1, c + 1));
        rel.rows.push_back(std::move(row));
    }
    return rel;
}

// ---------------------------------------------------------------------------
// Query evaluation

namespace {

int cmp_values(const Value& a, const Value& b) {
    if (value_is_numeric(a) && value_is_numeric(b)) {
        double x = value_as_real(a), y = value_as_real(b);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    std::string x = value_key(a), y = value_key(b);
    return x < y ? -1 : (x > y ? 1 : 0);
}

bool eval_condition(const Condition& c, const Relation& rel, const std::vector<Value>& row) {
    switch (c.kind) {
        case Condition::Kind::And:
            for (const auto& ch : c.children)
                if (!eval_condition(ch, rel, row)) return false;
            return true;
        case Condition::Kind::Or:
            for (const auto& ch : c.children)
                if (eval_condition(ch, rel, row)) return true;
            return false;
        case Condition::Kind::Not:
            return !eval_condition(c.children.at(0), rel, row);
        case Condition::Kind::Cmp: {
            const Value& lhs = row[rel.require_attr(c.attr)];
            Value rhs;
            if (c.rhs_attr)
                rhs = row[rel.require_attr(*c.rhs_attr)];
            else if (c.literal)
                rhs = *c.literal;
            else
                fail(ErrorCode::Query, "comparison without right-hand side");
            int r = cmp_values(lhs, rhs);
            switch (c.op) {
                case CmpOp::Eq: return r == 0;
                case CmpOp::Ne: return r != 0;
                case CmpOp::Lt: return r < 0;
                case CmpOp::Le: return r <= 0;
                case CmpOp::Gt: return r > 0;
                case CmpOp::Ge: return r >= 0;
            }
            return false;
        }
    }
    return false;
}

Relation join_relations(const Relation& a, const Relation& b,
                        const std::vector<std::pair<std::string, std::string>>& on) {
    if (on.empty()) fail(ErrorCode::Query, "join of '" + a.name + "' and '" + b.name + "' has no predicates");
    Relation out;
    out.name = a.name + "_join_" + b.name;

    std::set<std::string> left_names;
    for (const auto& at : a.schema) left_names.insert(at.name);
    std::set<std::string> collisions;
    for (const auto& at : b.schema)
        if (left_names.count(at.name)) collisions.insert(at.name);

    for (const auto& at : a.schema) {
        Attribute q = at;
        if (collisions.count(at.name)) q.name = a.name + "." + at.name;
        out.schema.push_back(q);
    }
    for (const auto& at : b.schema) {
        Attribute q = at;
        if (collisions.count(at.name)) q.name = b.name + "." + at.name;
        out.schema.push_back(q);
    }

    std::vector<int> la, rb;
    for (const auto& [l, r] : on) {
        la.push_back(a.require_attr(l));
        rb.push_back(b.require_attr(r));
    }

    // hash join on the concatenated key of the right side
    std::unordered_map<std::string, std::vector<size_t>> index;
    for (size_t j = 0; j < b.rows.size(); j++) {
        std::string key;
        for (int col : rb) key += value_key(b.rows[j][col]) + '\x1f';
        index[key].push_back(j);
    }
    for (const auto& row : a.rows) {
        std::string key;
        for (int col : la) key += value_key(row[col]) + '\x1f';
        auto it = index.find(key);
        if (it == index.end()) continue;
        for (size_t j : it->second) {
            std::vector<Value> combined = row;
            combined.insert(combined.end(), b.rows[j].begin(), b.rows[j].end());
            out.rows.push_back(std::move(combined));
        }
    }
    return out;
}

} // namespace

Relation evaluate_source(const SourceNode& src, const Database& db) {
    switch (src.kind) {
        case SourceNode::Kind::Relation: {
            auto it = db.find(src.relation);
            if (it == db.end()) fail(ErrorCode::Query, "unknown relation '" + src.relation + "'");
            return it->second;
        }
        case SourceNode::Kind::Join:
            return join_relations(evaluate_source(*src.left, db), evaluate_source(*src.right, db),
                                  src.join_on);
        case SourceNode::Kind::Union: {
            if (src.members.empty()) fail(ErrorCode::Query, "union with no members");
            Relation out = evaluate_source(*src.members[0], db);
            for (size_t i = 1; i < src.members.size(); i++) {
                Relation next = evaluate_source(*src.members[i], db);
                if (next.schema.size() != out.schema.size())
                    fail(ErrorCode::Query, "union members have different schemas");
                for (size_t c = 0; c < out.schema.size(); c++)
                    if (next.schema[c].name != out.schema[c].name ||
                        next.schema[c].kind != out.schema[c].kind)
                        fail(ErrorCode::Query, "union members have different schemas");
                out.rows.insert(out.rows.end(), next.rows.begin(), next.rows.end());
                out.name += "_union_" + next.name;
            }
            return out;
        }
        case SourceNode::Kind::Subquery: {
            const QuerySpec& q = *src.subquery;
            if (q.agg != AggKind::None)
                fail(ErrorCode::Query, "aggregate subqueries are not supported as sources");
            return evaluate_query(q, db);
        }
    }
    fail(ErrorCode::Query, "bad source node");
}

namespace {

Relation select_rows(const QuerySpec& q, const Database& db) {
    Relation src = evaluate_source(q.source, db);
    if (!q.where) return src;
    Relation out;
    out.name = src.name;
    out.schema = src.schema;
    for (const auto& row : src.rows)
        if (eval_condition(*q.where, src, row)) out.rows.push_back(row);
    return out;
}

} // namespace

Relation evaluate_query(const QuerySpec& q, const Database& db) {
    Relation sel = select_rows(q, db);

    if (q.agg == AggKind::None) {
        if (q.project.empty()) return sel;
        Relation out;
        out.name = sel.name;
        std::vector<int> cols;
        for (const auto& attr : q.project) {
            int c = sel.require_attr(attr);
            cols.push_back(c);
            out.schema.push_back(sel.schema[c]);
        }
        for (const auto& row : sel.rows) {
            std::vector<Value> projected;
            projected.reserve(cols.size());
            for (int c : cols) projected.push_back(row[c]);
            out.rows.push_back(std::move(projected));
        }
        return out;
    }

    Relation out;
    out.name = sel.name;
    if (q.agg == AggKind::Count) {
        out.schema.push_back({"count", ValueKind::Integer});
        out.rows.push_back({static_cast<long long>(sel.rows.size())});
        return out;
    }

    int col = sel.require_attr(q.agg_attr);
    if (sel.schema[col].kind == ValueKind::Text)
        fail(ErrorCode::Query, "aggregate attribute '" + q.agg_attr + "' is not numeric");
    bool integral = sel.schema[col].kind == ValueKind::Integer;
    std::string out_name = fold_case(std::string(agg_kind_name(q.agg))) + "_" + q.agg_attr;

    if (sel.rows.empty()) {
        if (q.agg == AggKind::Sum) {
            out.schema.push_back({out_name, sel.schema[col].kind});
            out.rows.push_back({integral ? Value(0LL) : Value(0.0)});
            return out;
        }
        fail(ErrorCode::Query, std::string(agg_kind_name(q.agg)) + " over an empty selection");
    }

    double acc = value_as_real(sel.rows[0][col]);
    for (size_t i = 1; i < sel.rows.size(); i++) {
        double v = value_as_real(sel.rows[i][col]);
        switch (q.agg) {
            case AggKind::Sum:
            case AggKind::Avg: acc += v; break;
            case AggKind::Max: acc = std::max(acc, v); break;
            case AggKind::Min: acc = std::min(acc, v); break;
            default: break;
        }
    }
    if (q.agg == AggKind::Avg) {
        out.schema.push_back({out_name, ValueKind::Real});
        out.rows.push_back({acc / static_cast<double>(sel.rows.size())});
    } else {
        out.schema.push_back({out_name, integral ? ValueKind::Integer : ValueKind::Real});
        if (integral)
            out.rows.push_back({static_cast<long long>(std::llround(acc))});
        else
            out.rows.push_back({acc});
    }
    return out;
}

double query_result_number(const Relation& result, AggKind agg) {
    if (agg == AggKind::None) return static_cast<double>(result.rows.size());
    return value_as_real(result.rows.at(0).at(0));
}

ProvenanceRelation extract_provenance(const QuerySpec& q, const Database& db) {
    Relation sel = select_rows(q, db);

    ProvenanceRelation pr;
    pr.schema = sel.schema;
    pr.query_kind = q.agg;
    pr.integral_impacts = true;

    int col = -1;
    if (q.agg != AggKind::None && q.agg != AggKind::Count) {
        col = sel.require_attr(q.agg_attr);
        if (sel.schema[col].kind == ValueKind::Text)
            fail(ErrorCode::Query, "aggregate attribute '" + q.agg_attr + "' is not numeric");
        pr.integral_impacts = sel.schema[col].kind == ValueKind::Integer;
    }
    if (q.agg == AggKind::Avg && sel.rows.empty())
        fail(ErrorCode::Query, "AVG over an empty selection");

    for (const auto& row : sel.rows) {
        ProvenanceTuple t;
        t.values = row;
        t.impact = (col < 0) ? 1.0 : value_as_real(row[col]);
        pr.tuples.push_back(std::move(t));
    }
    return pr;
}

} // namespace qdiff
