#include "qdiff/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace qdiff {

void SynthConfig::validate() const {
    if (n < 0) fail(ErrorCode::Invalid, "n must be non-negative");
    if (!(d >= 0 && d < 1)) fail(ErrorCode::Invalid, "difference ratio d must lie in [0, 1)");
    if (v <= 5) fail(ErrorCode::Invalid, "vocabulary size v must exceed 5");
    if (phrase_len < 1 || phrase_len > v) fail(ErrorCode::Invalid, "bad phrase length");
    if (val_lo > val_hi || val_hi - val_lo < 1)
        fail(ErrorCode::Invalid, "value range must span at least two values");
}

namespace {

// modulo draw: deterministic for a fixed generator sequence
long long draw(std::mt19937_64& rng, long long lo, long long hi) {
    return lo + static_cast<long long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::string random_word(std::mt19937_64& rng) {
    static const char cs[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string w;
    for (int i = 0; i < 6; i++) w += cs[draw(rng, 0, 35)];
    return w;
}

} // namespace

SynthBundle generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    // vocabulary of distinct words
    std::vector<std::string> vocab;
    std::set<std::string> used;
    while (static_cast<int>(vocab.size()) < cfg.v) {
        std::string w = random_word(rng);
        if (used.insert(w).second) vocab.push_back(w);
    }

    // base tuples, identical in both datasets
    std::vector<std::string> phrase(cfg.n);
    std::vector<long long> val(cfg.n);
    for (long long i = 0; i < cfg.n; i++) {
        std::vector<int> words;
        while (static_cast<int>(words.size()) < cfg.phrase_len) {
            int w = static_cast<int>(draw(rng, 0, cfg.v - 1));
            if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
        }
        std::string p;
        for (size_t k = 0; k < words.size(); k++) p += (k ? " " : "") + vocab[words[k]];
        phrase[i] = std::move(p);
        val[i] = draw(rng, cfg.val_lo, cfg.val_hi);
    }

    const long long k = std::llround(cfg.d * static_cast<double>(cfg.n));

    // drop k tuples, each from one uniformly chosen side
    std::vector<long long> ids(cfg.n);
    for (long long i = 0; i < cfg.n; i++) ids[i] = i;
    for (long long i = 0; i < std::min(k, cfg.n); i++) {
        long long j = draw(rng, i, cfg.n - 1);
        std::swap(ids[i], ids[j]);
    }
    std::vector<char> gone_left(cfg.n, 0), gone_right(cfg.n, 0);
    SynthBundle out;
    for (long long i = 0; i < k; i++) {
        long long id = ids[i];
        bool from_left = draw(rng, 0, 1) == 0;
        (from_left ? gone_left : gone_right)[id] = 1;
        out.gold.dropped.push_back({from_left ? Side::Right : Side::Left, phrase[id]});
    }

    // corrupt val on one side of k surviving tuples
    std::vector<long long> survivors;
    for (long long i = 0; i < cfg.n; i++)
        if (!gone_left[i] && !gone_right[i]) survivors.push_back(i);
    for (long long i = 0; i < std::min(k, static_cast<long long>(survivors.size())); i++) {
        long long j = draw(rng, i, static_cast<long long>(survivors.size()) - 1);
        std::swap(survivors[i], survivors[j]);
    }
    std::vector<long long> val_left = val, val_right = val;
    long long corrupt_count = std::min(k, static_cast<long long>(survivors.size()));
    for (long long i = 0; i < corrupt_count; i++) {
        long long id = survivors[i];
        bool on_left = draw(rng, 0, 1) == 0;
        long long fresh = val[id];
        while (fresh == val[id]) fresh = draw(rng, cfg.val_lo, cfg.val_hi);
        (on_left ? val_left : val_right)[id] = fresh;
        out.gold.corrupted.push_back({phrase[id], val[id], fresh, on_left ? Side::Left : Side::Right});
    }

    for (long long i = 0; i < cfg.n; i++)
        if (!gone_left[i] && !gone_right[i])
            out.gold.true_matches.push_back({phrase[i], phrase[i]});

    auto build_relation = [&](const std::string& name, const std::vector<char>& gone,
                              const std::vector<long long>& vals) {
        Relation r;
        r.name = name;
        r.schema = {{"id", ValueKind::Integer}, {"match_attr", ValueKind::Text},
                    {"val", ValueKind::Integer}};
        for (long long i = 0; i < cfg.n; i++) {
            if (gone[i]) continue;
            r.rows.push_back({i, phrase[i], vals[i]});
        }
        return r;
    };
    out.d1 = build_relation("table1", gone_left, val_left);
    out.d2 = build_relation("table2", gone_right, val_right);

    auto sum_query = [](const std::string& rel) {
        QuerySpec q;
        q.source.kind = SourceNode::Kind::Relation;
        q.source.relation = rel;
        q.agg = AggKind::Sum;
        q.agg_attr = "val";
        return q;
    };
    out.q1 = sum_query("table1");
    out.q2 = sum_query("table2");
    out.matches = {{{"match_attr"}, MatchRel::Equivalent, {"match_attr"}}};
    return out;
}

} // namespace qdiff
