#include "qdiff/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace qdiff {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, path + ": " + e.what());
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush()) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

Value value_from_json(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer() || j.is_number_unsigned()) return j.get<long long>();
    if (j.is_number_float()) return j.get<double>();
    fail(ErrorCode::Parse, "literal must be a string or number");
}

CmpOp op_from_string(const std::string& s) {
    if (s == "=" || s == "==" || s == "eq") return CmpOp::Eq;
    if (s == "!=" || s == "<>" || s == "ne") return CmpOp::Ne;
    if (s == "<" || s == "lt") return CmpOp::Lt;
    if (s == "<=" || s == "le") return CmpOp::Le;
    if (s == ">" || s == "gt") return CmpOp::Gt;
    if (s == ">=" || s == "ge") return CmpOp::Ge;
    fail(ErrorCode::Parse, "unknown comparison operator '" + s + "'");
}

Condition condition_from_json(const json& j);

std::vector<Condition> children_from_json(const json& j) {
    std::vector<Condition> out;
    for (const auto& c : j) out.push_back(condition_from_json(c));
    return out;
}

Condition condition_from_json(const json& j) {
    Condition c;
    if (j.contains("and")) {
        c.kind = Condition::Kind::And;
        c.children = children_from_json(j.at("and"));
        return c;
    }
    if (j.contains("or")) {
        c.kind = Condition::Kind::Or;
        c.children = children_from_json(j.at("or"));
        return c;
    }
    if (j.contains("not")) {
        c.kind = Condition::Kind::Not;
        c.children.push_back(condition_from_json(j.at("not")));
        return c;
    }
    c.kind = Condition::Kind::Cmp;
    c.attr = j.at("attr").get<std::string>();
    c.op = op_from_string(j.value("op", "="));
    if (j.contains("attr2"))
        c.rhs_attr = j.at("attr2").get<std::string>();
    else
        c.literal = value_from_json(j.at("value"));
    return c;
}

SourceNode source_from_json(const json& j);

QuerySpec query_from_json(const json& j) {
    QuerySpec q;
    q.source = source_from_json(j.at("source"));
    if (j.contains("where")) q.where = condition_from_json(j.at("where"));
    if (j.contains("select")) {
        const auto& sel = j.at("select");
        if (sel.contains("aggregate")) {
            const auto& agg = sel.at("aggregate");
            q.agg = agg_kind_from_name(agg.at("fn").get<std::string>());
            if (q.agg != AggKind::Count) q.agg_attr = agg.at("attribute").get<std::string>();
            if (q.agg == AggKind::None) fail(ErrorCode::Parse, "aggregate fn cannot be 'none'");
        } else if (sel.contains("attributes")) {
            q.project = sel.at("attributes").get<std::vector<std::string>>();
        }
    }
    return q;
}

SourceNode source_from_json(const json& j) {
    SourceNode s;
    if (j.is_string()) {
        s.kind = SourceNode::Kind::Relation;
        s.relation = j.get<std::string>();
        return s;
    }
    if (j.contains("relation")) {
        s.kind = SourceNode::Kind::Relation;
        s.relation = j.at("relation").get<std::string>();
        return s;
    }
    if (j.contains("join")) {
        const auto& jj = j.at("join");
        s.kind = SourceNode::Kind::Join;
        s.left = std::make_shared<SourceNode>(source_from_json(jj.at("left")));
        s.right = std::make_shared<SourceNode>(source_from_json(jj.at("right")));
        for (const auto& on : jj.at("on"))
            s.join_on.push_back({on.at("left").get<std::string>(), on.at("right").get<std::string>()});
        return s;
    }
    if (j.contains("union")) {
        s.kind = SourceNode::Kind::Union;
        for (const auto& u : j.at("union"))
            s.members.push_back(std::make_shared<SourceNode>(source_from_json(u)));
        return s;
    }
    if (j.contains("query")) {
        s.kind = SourceNode::Kind::Subquery;
        s.subquery = std::make_shared<QuerySpec>(query_from_json(j.at("query")));
        return s;
    }
    fail(ErrorCode::Parse, "source must be a relation, join, union or query");
}

} // namespace

Database load_database(const std::string& path) {
    json doc = read_json(path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    Database db;
    for (const auto& rj : doc.at("relations")) {
        std::string name = rj.at("name").get<std::string>();
        std::vector<Attribute> schema;
        for (const auto& aj : rj.at("schema"))
            schema.push_back(
                {aj.at("name").get<std::string>(), value_kind_from_name(aj.at("kind").get<std::string>())});
        std::filesystem::path csv = rj.at("csv").get<std::string>();
        if (csv.is_relative()) csv = base / csv;
        if (db.count(name)) fail(ErrorCode::Parse, path + ": duplicate relation '" + name + "'");
        db.emplace(name, load_csv(csv.string(), name, schema));
    }
    return db;
}

QuerySpec load_query(const std::string& path) { return query_from_json(read_json(path)); }

std::vector<AttributeMatch> load_matches(const std::string& path) {
    json doc = read_json(path);
    std::vector<AttributeMatch> out;
    for (const auto& mj : doc) {
        AttributeMatch m;
        m.left_attrs = mj.at("left_attrs").get<std::vector<std::string>>();
        m.rel = match_rel_from_name(mj.at("relation").get<std::string>());
        m.right_attrs = mj.at("right_attrs").get<std::vector<std::string>>();
        if (m.left_attrs.empty() || m.right_attrs.empty())
            fail(ErrorCode::Parse, path + ": attribute match with an empty side");
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_labels(const std::string& path) {
    json doc = read_json(path);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& lj : doc) {
        if (!lj.is_array() || lj.size() != 2)
            fail(ErrorCode::Parse, path + ": each label is a [left, right] pair");
        out.push_back({lj[0].get<std::string>(), lj[1].get<std::string>()});
    }
    return out;
}

TupleMapping load_mapping(const std::string& path, const CanonicalRelation& T1,
                          const CanonicalRelation& T2) {
    json doc = read_json(path);
    std::unordered_map<std::string, int> left_ix, right_ix;
    for (size_t i = 0; i < T1.tuples.size(); i++) left_ix[T1.tuples[i].row_id] = static_cast<int>(i);
    for (size_t j = 0; j < T2.tuples.size(); j++) right_ix[T2.tuples[j].row_id] = static_cast<int>(j);

    TupleMapping mapping;
    for (const auto& mj : doc) {
        std::string l = mj.at("left").get<std::string>();
        std::string r = mj.at("right").get<std::string>();
        double p = mj.at("p").get<double>();
        auto li = left_ix.find(fold_case(trim(l)));
        if (li == left_ix.end()) li = left_ix.find(l);
        auto ri = right_ix.find(fold_case(trim(r)));
        if (ri == right_ix.end()) ri = right_ix.find(r);
        if (li == left_ix.end())
            fail(ErrorCode::Parse, path + ": unknown left row '" + l + "'");
        if (ri == right_ix.end())
            fail(ErrorCode::Parse, path + ": unknown right row '" + r + "'");
        if (!(p > 0 && p <= 1))
            fail(ErrorCode::Parse, path + ": probability of (" + l + ", " + r + ") outside (0, 1]");
        mapping.matches.push_back({li->second, ri->second, p});
    }
    std::sort(mapping.matches.begin(), mapping.matches.end());
    for (size_t i = 1; i < mapping.matches.size(); i++)
        if (mapping.matches[i].left == mapping.matches[i - 1].left &&
            mapping.matches[i].right == mapping.matches[i - 1].right)
            fail(ErrorCode::Parse, path + ": duplicate tuple match");
    return mapping;
}

void save_mapping(const std::string& path, const TupleMapping& mapping,
                  const CanonicalRelation& T1, const CanonicalRelation& T2) {
    ordered_json doc = ordered_json::array();
    for (const auto& m : mapping.matches) {
        ordered_json mj;
        mj["left"] = T1.tuples.at(m.left).row_id;
        mj["right"] = T2.tuples.at(m.right).row_id;
        mj["p"] = m.p;
        doc.push_back(std::move(mj));
    }
    write_text(path, doc.dump(2) + "\n");
}

GoldStandard load_gold(const std::string& path) {
    json doc = read_json(path);
    GoldStandard gold;
    for (const auto& dj : doc.value("dropped", json::array())) {
        Side s = dj.at("side").get<std::string>() == "left" ? Side::Left : Side::Right;
        gold.dropped.push_back({s, dj.at("key").get<std::string>()});
    }
    for (const auto& cj : doc.value("corrupted", json::array())) {
        GoldStandard::Corruption c;
        c.key = cj.at("key").get<std::string>();
        c.original = cj.at("original").get<long long>();
        c.corrupted = cj.at("corrupted").get<long long>();
        c.side = cj.value("side", "left") == "left" ? Side::Left : Side::Right;
        gold.corrupted.push_back(std::move(c));
    }
    for (const auto& tj : doc.value("true_matches", json::array()))
        gold.true_matches.push_back({tj[0].get<std::string>(), tj[1].get<std::string>()});
    return gold;
}

void save_gold(const std::string& path, const GoldStandard& gold) {
    ordered_json doc;
    doc["dropped"] = ordered_json::array();
    for (const auto& [side, key] : gold.dropped)
        doc["dropped"].push_back({{"side", side_name(side)}, {"key", key}});
    doc["corrupted"] = ordered_json::array();
    for (const auto& c : gold.corrupted)
        doc["corrupted"].push_back({{"key", c.key},
                                    {"original", c.original},
                                    {"corrupted", c.corrupted},
                                    {"side", side_name(c.side)}});
    doc["true_matches"] = ordered_json::array();
    for (const auto& [l, r] : gold.true_matches) doc["true_matches"].push_back({l, r});
    write_text(path, doc.dump(2) + "\n");
}

void write_csv(const std::string& path, const Relation& rel) {
    std::string out;
    auto cell = [](const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q += c;
        }
        return q + "\"";
    };
    for (size_t i = 0; i < rel.schema.size(); i++)
        out += (i ? "," : "") + cell(rel.schema[i].name);
    out += "\n";
    for (const auto& row : rel.rows) {
        for (size_t i = 0; i < row.size(); i++) out += (i ? "," : "") + cell(value_to_string(row[i]));
        out += "\n";
    }
    write_text(path, out);
}

void write_synth_bundle(const std::string& dir, const SynthBundle& bundle) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create directory '" + dir + "'");
    auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

    write_csv(at("d1.csv"), bundle.d1);
    write_csv(at("d2.csv"), bundle.d2);

    auto db_doc = [](const Relation& rel, const std::string& csv) {
        ordered_json schema = ordered_json::array();
        for (const auto& a : rel.schema)
            schema.push_back({{"name", a.name}, {"kind", value_kind_name(a.kind)}});
        ordered_json doc;
        doc["relations"] = {{{"name", rel.name}, {"csv", csv}, {"schema", schema}}};
        return doc;
    };
    write_text(at("db1.json"), db_doc(bundle.d1, "d1.csv").dump(2) + "\n");
    write_text(at("db2.json"), db_doc(bundle.d2, "d2.csv").dump(2) + "\n");

    auto query_doc = [](const QuerySpec& q) {
        ordered_json doc;
        doc["source"] = {{"relation", q.source.relation}};
        doc["select"] = {{"aggregate",
                          {{"fn", agg_kind_name(q.agg)}, {"attribute", q.agg_attr}}}};
        return doc;
    };
    write_text(at("q1.json"), query_doc(bundle.q1).dump(2) + "\n");
    write_text(at("q2.json"), query_doc(bundle.q2).dump(2) + "\n");

    ordered_json matches = ordered_json::array();
    for (const auto& m : bundle.matches)
        matches.push_back({{"left_attrs", m.left_attrs},
                           {"relation", match_rel_name(m.rel)},
                           {"right_attrs", m.right_attrs}});
    write_text(at("matches.json"), matches.dump(2) + "\n");

    ordered_json labels = ordered_json::array();
    for (const auto& [l, r] : bundle.gold.true_matches) labels.push_back({l, r});
    write_text(at("labels.json"), labels.dump(2) + "\n");

    save_gold(at("gold.json"), bundle.gold);
}

} // namespace qdiff
