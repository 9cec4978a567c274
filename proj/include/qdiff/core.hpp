#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qdiff/common.hpp"

namespace qdiff {

enum class ValueKind : std::uint8_t { Text, Integer, Real };

const char* value_kind_name(ValueKind k);
ValueKind value_kind_from_name(const std::string& name);

// One cell. Integer and Real are kept distinct so the MILP encoder can tell
// integral impact domains from scaled ones.
using Value = std::variant<std::string, long long, double>;

bool value_is_numeric(const Value& v);
double value_as_real(const Value& v);
std::string value_to_string(const Value& v);
// Normalized form used for grouping keys and row ids: text is trimmed and
// case-folded, numbers print in canonical decimal form.
std::string value_key(const Value& v);

struct Attribute {
    std::string name;
    ValueKind kind = ValueKind::Text;
};

struct Relation {
    std::string name;
    std::vector<Attribute> schema;
    std::vector<std::vector<Value>> rows;

    int attr_index(const std::string& attr) const; // -1 when absent
    int require_attr(const std::string& attr) const;
};

using Database = std::map<std::string, Relation>;

enum class AggKind : std::uint8_t { None, Sum, Count, Avg, Max, Min };

const char* agg_kind_name(AggKind k);
AggKind agg_kind_from_name(const std::string& name);

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

// Boolean condition tree over source attributes. Comparisons are between an
// attribute and a literal, or between two attributes. No UDFs.
struct Condition {
    enum class Kind : std::uint8_t { And, Or, Not, Cmp };
    Kind kind = Kind::Cmp;
    std::vector<Condition> children; // And / Or / Not

    std::string attr;     // Cmp lhs
    CmpOp op = CmpOp::Eq; // Cmp
    std::optional<Value> literal;
    std::optional<std::string> rhs_attr;
};

struct QuerySpec;

struct SourceNode {
    enum class Kind : std::uint8_t { Relation, Join, Union, Subquery };
    Kind kind = Kind::Relation;

    std::string relation;                                      // Relation
    std::shared_ptr<SourceNode> left, right;                   // Join
    std::vector<std::pair<std::string, std::string>> join_on;  // Join equi-predicates
    std::vector<std::shared_ptr<SourceNode>> members;          // Union
    std::shared_ptr<QuerySpec> subquery;                       // Subquery
};

struct QuerySpec {
    SourceNode source;
    std::optional<Condition> where;
    AggKind agg = AggKind::None;
    std::string agg_attr;              // empty for COUNT/non-aggregate
    std::vector<std::string> project;  // non-aggregate projection
};

struct ProvenanceTuple {
    std::vector<Value> values;
    double impact = 1.0;
};

struct ProvenanceRelation {
    std::vector<Attribute> schema;
    std::vector<ProvenanceTuple> tuples;
    AggKind query_kind = AggKind::None;
    bool integral_impacts = true;

    double total_impact() const;
};

Relation load_csv(const std::string& path, const std::string& name,
                  const std::vector<Attribute>& schema);

// Materializes the query source (joins/unions/subqueries evaluated bottom-up).
Relation evaluate_source(const SourceNode& src, const Database& db);
Relation evaluate_query(const QuerySpec& q, const Database& db);

// The single comparison number of a query result: the aggregate value for
// aggregate queries, the row count otherwise.
double query_result_number(const Relation& result, AggKind agg);

ProvenanceRelation extract_provenance(const QuerySpec& q, const Database& db);

} // namespace qdiff
