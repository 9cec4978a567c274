#include "qdiff/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace qdiff {

namespace {

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream in(fold_case(s));
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

double jaccard_tokens(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            inter++, i++, j++;
        } else if (a[i] < b[j]) {
            i++;
        } else {
            j++;
        }
    }
    size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Per-attribute-match plan: which key columns each side contributes and
// whether the match compares numerically.
struct MatchPlan {
    std::vector<int> left_cols, right_cols;
    bool numeric = false;
};

int key_col(const CanonicalRelation& T, const std::string& attr) {
    for (size_t i = 0; i < T.key_attrs.size(); i++)
        if (T.key_attrs[i].name == attr) return static_cast<int>(i);
    fail(ErrorCode::Query, std::string("matching attribute '") + attr + "' missing from the " +
                               side_name(T.side) + " canonical key");
}

std::vector<MatchPlan> build_plans(const std::vector<AttributeMatch>& matches,
                                   const CanonicalRelation& T1, const CanonicalRelation& T2) {
    std::vector<MatchPlan> plans;
    for (const auto& m : matches) {
        MatchPlan p;
        for (const auto& a : m.left_attrs) p.left_cols.push_back(key_col(T1, a));
        for (const auto& a : m.right_attrs) p.right_cols.push_back(key_col(T2, a));
        p.numeric = m.left_attrs.size() == 1 && m.right_attrs.size() == 1 &&
                    T1.key_attrs[p.left_cols[0]].kind != ValueKind::Text &&
                    T2.key_attrs[p.right_cols[0]].kind != ValueKind::Text;
        plans.push_back(std::move(p));
    }
    return plans;
}

std::string concat_cols(const CanonicalTuple& t, const std::vector<int>& cols) {
    std::string s;
    for (size_t i = 0; i < cols.size(); i++) {
        if (i) s += ' ';
        s += t.key[cols[i]];
    }
    return s;
}

// Token ids per tuple per match, so the pairwise loop never touches strings.
struct TokenCache {
    // tokens[m][row] = sorted unique token ids; nums[m][row] = numeric value
    std::vector<std::vector<std::vector<int>>> tokens;
    std::vector<std::vector<double>> nums;
};

TokenCache build_cache(const CanonicalRelation& T, const std::vector<MatchPlan>& plans, Side side,
                       std::unordered_map<std::string, int>& intern) {
    TokenCache cache;
    cache.tokens.resize(plans.size());
    cache.nums.resize(plans.size());
    for (size_t m = 0; m < plans.size(); m++) {
        const auto& cols = side == Side::Left ? plans[m].left_cols : plans[m].right_cols;
        if (plans[m].numeric) {
            cache.nums[m].resize(T.tuples.size());
            for (size_t r = 0; r < T.tuples.size(); r++)
                cache.nums[m][r] = std::strtod(T.tuples[r].key[cols[0]].c_str(), nullptr);
        } else {
            cache.tokens[m].resize(T.tuples.size());
            for (size_t r = 0; r < T.tuples.size(); r++) {
                std::vector<int> ids;
                for (const auto& tok : tokenize(concat_cols(T.tuples[r], cols))) {
                    auto [it, _] = intern.emplace(tok, static_cast<int>(intern.size()));
                    ids.push_back(it->second);
                }
                std::sort(ids.begin(), ids.end());
                cache.tokens[m][r] = std::move(ids);
            }
        }
    }
    return cache;
}

double pair_similarity(const std::vector<MatchPlan>& plans, const TokenCache& lc,
                       const TokenCache& rc, size_t i, size_t j) {
    double total = 0;
    for (size_t m = 0; m < plans.size(); m++) {
        if (plans[m].numeric) {
            total += euclidean_sim(lc.nums[m][i], rc.nums[m][j]);
        } else {
            const auto& a = lc.tokens[m][i];
            const auto& b = rc.tokens[m][j];
            if (a.empty() && b.empty()) {
                total += 1.0;
                continue;
            }
            size_t x = 0, y = 0, inter = 0;
            while (x < a.size() && y < b.size()) {
                if (a[x] == b[y])
                    inter++, x++, y++;
                else if (a[x] < b[y])
                    x++;
                else
                    y++;
            }
            total += static_cast<double>(inter) /
                     static_cast<double>(a.size() + b.size() - inter);
        }
    }
    return total / static_cast<double>(plans.size());
}

} // namespace

double jaccard_sim(const std::string& a, const std::string& b) {
    return jaccard_tokens(tokenize(a), tokenize(b));
}

double euclidean_sim(double a, double b) {
    double d = a - b;
    return 1.0 / (1.0 + d * d);
}

double tuple_similarity(const CanonicalTuple& t1, const CanonicalTuple& t2,
                        const std::vector<AttributeMatch>& matches, const CanonicalRelation& T1,
                        const CanonicalRelation& T2) {
    if (matches.empty()) fail(ErrorCode::Incomparable, "no attribute matches");
    auto plans = build_plans(matches, T1, T2);
    double total = 0;
    for (size_t m = 0; m < plans.size(); m++) {
        if (plans[m].numeric) {
            double a = std::strtod(t1.key[plans[m].left_cols[0]].c_str(), nullptr);
            double b = std::strtod(t2.key[plans[m].right_cols[0]].c_str(), nullptr);
            total += euclidean_sim(a, b);
        } else {
            total += jaccard_sim(concat_cols(t1, plans[m].left_cols),
                                 concat_cols(t2, plans[m].right_cols));
        }
    }
    return total / static_cast<double>(plans.size());
}

std::vector<CandidatePair> compute_candidates(const CanonicalRelation& T1,
                                              const CanonicalRelation& T2,
                                              const std::vector<AttributeMatch>& matches,
                                              double candidate_floor, ExecMode mode) {
    if (matches.empty()) fail(ErrorCode::Incomparable, "no attribute matches");
    auto plans = build_plans(matches, T1, T2);
    std::unordered_map<std::string, int> intern; // shared so token ids align
    TokenCache lc = build_cache(T1, plans, Side::Left, intern);
    TokenCache rc = build_cache(T2, plans, Side::Right, intern);

    const int n1 = static_cast<int>(T1.tuples.size());
    const int n2 = static_cast<int>(T2.tuples.size());
    std::vector<std::vector<CandidatePair>> per_row(n1);

    auto scan_row = [&](int i) {
        auto& out = per_row[i];
        for (int j = 0; j < n2; j++) {
            double s = pair_similarity(plans, lc, rc, i, j);
            if (s > candidate_floor) out.push_back({i, j, s});
        }
    };

    if (mode == ExecMode::Parallel) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16)
#endif
        for (int i = 0; i < n1; i++) scan_row(i);
    } else {
        for (int i = 0; i < n1; i++) scan_row(i);
    }

    std::vector<CandidatePair> flat;
    size_t total = 0;
    for (const auto& v : per_row) total += v.size();
    flat.reserve(total);
    for (auto& v : per_row) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
}

TupleMapping calibrate_mapping(const CanonicalRelation& T1, const CanonicalRelation& T2,
                               const std::vector<AttributeMatch>& matches,
                               const CalibrationConfig& cfg, ExecMode mode) {
    if (cfg.bucket_count < 1) fail(ErrorCode::Invalid, "bucket_count must be >= 1");
    if (cfg.candidate_floor < 0 || cfg.candidate_floor >= 1)
        fail(ErrorCode::Invalid, "candidate_floor must be in [0, 1)");

    auto candidates = compute_candidates(T1, T2, matches, cfg.candidate_floor, mode);

    std::unordered_set<std::string> true_pairs;
    std::unordered_set<std::string> label_lefts, label_rights;
    for (const auto& [l, r] : cfg.labels) {
        true_pairs.insert(l + '\x1f' + r);
        label_lefts.insert(l);
        label_rights.insert(r);
    }

    const int k = cfg.bucket_count;
    auto bucket_of = [&](double sim) {
        int b = static_cast<int>(sim * k);
        return std::min(std::max(b, 0), k - 1);
    };

    std::vector<long long> labeled(k, 0), labeled_true(k, 0);
    std::vector<char> is_labeled(candidates.size(), 0);
    for (size_t c = 0; c < candidates.size(); c++) {
        const auto& cand = candidates[c];
        const std::string& lid = T1.tuples[cand.left].row_id;
        const std::string& rid = T2.tuples[cand.right].row_id;
        if (label_lefts.count(lid) || label_rights.count(rid)) {
            is_labeled[c] = 1;
            int b = bucket_of(cand.sim);
            labeled[b]++;
            if (true_pairs.count(lid + '\x1f' + rid)) labeled_true[b]++;
        }
    }

    bool any_labeled = std::any_of(labeled.begin(), labeled.end(), [](long long n) { return n > 0; });
    if (!any_labeled)
        fail(ErrorCode::Invalid,
             "calibration has no labeled tuple matches; supply labels or use raw-similarity mode");

    // per-bucket probability; unlabeled buckets borrow the nearest labeled
    // one, ties toward lower similarity
    std::vector<double> prob(k, 0.0);
    for (int b = 0; b < k; b++) {
        if (labeled[b] > 0) {
            prob[b] = static_cast<double>(labeled_true[b]) / static_cast<double>(labeled[b]);
            continue;
        }
        int best = -1;
        for (int d = 1; d < k; d++) {
            if (b - d >= 0 && labeled[b - d] > 0) {
                best = b - d;
                break;
            }
            if (b + d < k && labeled[b + d] > 0) {
                best = b + d;
                break;
            }
        }
        prob[b] = static_cast<double>(labeled_true[best]) / static_cast<double>(labeled[best]);
    }

    TupleMapping out;
    for (const auto& cand : candidates) {
        double p = prob[bucket_of(cand.sim)];
        if (p > 0.0) out.matches.push_back({cand.left, cand.right, std::min(p, 1.0)});
    }
    return out;
}

TupleMapping raw_similarity_mapping(const CanonicalRelation& T1, const CanonicalRelation& T2,
                                    const std::vector<AttributeMatch>& matches,
                                    double candidate_floor, ExecMode mode) {
    TupleMapping out;
    for (const auto& cand : compute_candidates(T1, T2, matches, candidate_floor, mode))
        if (cand.sim > 0.0) out.matches.push_back({cand.left, cand.right, std::min(cand.sim, 1.0)});
    return out;
}

} // namespace qdiff
