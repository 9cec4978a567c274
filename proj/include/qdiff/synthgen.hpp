#pragma once

#include <cstdint>

#include "qdiff/canonical.hpp"

namespace qdiff {

struct SynthConfig {
    long long n = 1000;     // base tuple count
    double d = 0.2;         // difference ratio in [0, 1)
    int v = 1000;           // vocabulary size, > 5
    int phrase_len = 5;
    long long val_lo = 1, val_hi = 10;
    std::uint64_t seed = 1;

    void validate() const;
};

struct GoldStandard {
    // side = where the tuple REMAINS (the side whose canonical relation holds
    // the provenance-based explanation)
    std::vector<std::pair<Side, std::string>> dropped;
    struct Corruption {
        std::string key;
        long long original = 0, corrupted = 0;
        Side side; // side carrying the corrupted value
    };
    std::vector<Corruption> corrupted;
    std::vector<std::pair<std::string, std::string>> true_matches; // (left key, right key)
};

struct SynthBundle {
    Relation d1, d2;
    QuerySpec q1, q2; // SUM(val) over each table
    std::vector<AttributeMatch> matches;
    GoldStandard gold;
};

SynthBundle generate(const SynthConfig& cfg);

} // namespace qdiff
