#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdiff/matching.hpp"
#include "qdiff/synthgen.hpp"

namespace qdiff {

// Database document: {"relations": [{"name", "csv", "schema": [{"name","kind"}]}]}
// CSV paths resolve relative to the document location.
Database load_database(const std::string& path);

QuerySpec load_query(const std::string& path);
std::vector<AttributeMatch> load_matches(const std::string& path);

// [["left key", "right key"], ...]
std::vector<std::pair<std::string, std::string>> load_labels(const std::string& path);

// [{"left": row id, "right": row id, "p": probability}, ...]
TupleMapping load_mapping(const std::string& path, const CanonicalRelation& T1,
                          const CanonicalRelation& T2);
void save_mapping(const std::string& path, const TupleMapping& mapping,
                  const CanonicalRelation& T1, const CanonicalRelation& T2);

GoldStandard load_gold(const std::string& path);
void save_gold(const std::string& path, const GoldStandard& gold);

void write_csv(const std::string& path, const Relation& rel);

// Emits d1.csv / d2.csv / db1.json / db2.json / q1.json / q2.json /
// matches.json / labels.json / gold.json under dir.
void write_synth_bundle(const std::string& dir, const SynthBundle& bundle);

} // namespace qdiff
