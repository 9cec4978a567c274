#include "qdiff/summarize.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qdiff {

std::string render_pattern(const Pattern& p) {
    std::string s = std::string(side_name(p.side)) + ":";
    for (size_t i = 0; i < p.conjuncts.size(); i++) {
        s += (i ? " ∧ " : " ") + p.conjuncts[i].first + "=" + p.conjuncts[i].second;
    }
    s += " (covers " + std::to_string(p.covered) + ", exceptions " + std::to_string(p.exceptions) + ")";
    return s;
}

namespace {

struct SideSummarizer {
    Side side;
    const ProvenanceRelation& prov;
    double max_rate;
    std::vector<int> targets; // provenance row indices
    std::vector<char> is_target;

    std::vector<Pattern> run() {
        std::vector<Pattern> out;
        if (targets.empty()) return out;

        // candidate patterns drawn from target rows: all 1- and 2-attribute
        // combinations of their values
        const int A = static_cast<int>(prov.schema.size());
        std::map<std::vector<std::pair<std::string, std::string>>, int> seen;
        std::vector<std::vector<std::pair<std::string, std::string>>> cands;
        auto add_cand = [&](std::vector<std::pair<std::string, std::string>> conj) {
            if (seen.emplace(conj, 1).second) cands.push_back(std::move(conj));
        };
        for (int t : targets) {
            const auto& row = prov.tuples[t].values;
            for (int a1 = 0; a1 < A; a1++) {
                add_cand({{prov.schema[a1].name, value_key(row[a1])}});
                for (int a2 = a1 + 1; a2 < A; a2++)
                    add_cand({{prov.schema[a1].name, value_key(row[a1])},
                              {prov.schema[a2].name, value_key(row[a2])}});
            }
        }

        auto matches_row = [&](const std::vector<std::pair<std::string, std::string>>& conj,
                               const std::vector<Value>& row) {
            for (const auto& [attr, val] : conj) {
                int col = -1;
                for (size_t i = 0; i < prov.schema.size(); i++)
                    if (prov.schema[i].name == attr) col = static_cast<int>(i);
                if (col < 0 || value_key(row[col]) != val) return false;
            }
            return true;
        };

        // static stats per candidate
        struct Cand {
            int index;
            std::vector<int> covered_targets;
            int exceptions = 0;
        };
        std::vector<Cand> stats;
        for (size_t c = 0; c < cands.size(); c++) {
            Cand st;
            st.index = static_cast<int>(c);
            for (size_t r = 0; r < prov.tuples.size(); r++) {
                if (!matches_row(cands[c], prov.tuples[r].values)) continue;
                if (is_target[r])
                    st.covered_targets.push_back(static_cast<int>(r));
                else
                    st.exceptions++;
            }
            int covered = static_cast<int>(st.covered_targets.size());
            double rate = covered + st.exceptions == 0
                              ? 1.0
                              : static_cast<double>(st.exceptions) / (st.exceptions + covered);
            if (covered >= 1 && rate <= max_rate) stats.push_back(std::move(st));
        }

        std::vector<char> covered_flag(prov.tuples.size(), 0);
        size_t remaining = targets.size();
        while (remaining > 0 && !stats.empty()) {
            int best = -1, best_new = 0;
            for (size_t s = 0; s < stats.size(); s++) {
                int fresh = 0;
                for (int r : stats[s].covered_targets)
                    if (!covered_flag[r]) fresh++;
                if (fresh > best_new ||
                    (fresh == best_new && best >= 0 &&
                     stats[s].exceptions < stats[best].exceptions)) {
                    if (fresh > 0) {
                        best = static_cast<int>(s);
                        best_new = fresh;
                    }
                }
            }
            if (best < 0) break;
            const auto& st = stats[best];
            Pattern p;
            p.side = side;
            p.conjuncts = cands[st.index];
            p.covered = static_cast<int>(st.covered_targets.size());
            p.exceptions = st.exceptions;
            out.push_back(p);
            for (int r : st.covered_targets) {
                if (!covered_flag[r]) remaining--;
                covered_flag[r] = 1;
            }
            stats.erase(stats.begin() + best);
        }

        // singleton fallback: conjunction of every attribute of the row
        for (int t : targets) {
            if (covered_flag[t]) continue;
            Pattern p;
            p.side = side;
            for (int a = 0; a < A; a++)
                p.conjuncts.push_back({prov.schema[a].name, value_key(prov.tuples[t].values[a])});
            p.covered = 0;
            p.exceptions = 0;
            for (size_t r = 0; r < prov.tuples.size(); r++) {
                if (!matches_row(p.conjuncts, prov.tuples[r].values)) continue;
                if (is_target[r]) {
                    p.covered++;
                    covered_flag[r] = 1;
                } else {
                    p.exceptions++;
                }
            }
            out.push_back(p);
        }
        return out;
    }
};

void collect_targets(const ExplanationSet& e, Side side, const CanonicalRelation& T,
                     SideSummarizer& s) {
    std::set<int> rows;
    for (const auto& r : e.delta)
        if (r.side == side)
            for (int src : T.tuples[r.index].source_rows) rows.insert(src);
    for (const auto& vc : e.value_changes)
        if (vc.row.side == side)
            for (int src : T.tuples[vc.row.index].source_rows) rows.insert(src);
    s.targets.assign(rows.begin(), rows.end());
    s.is_target.assign(s.prov.tuples.size(), 0);
    for (int r : s.targets) s.is_target[r] = 1;
}

} // namespace

std::vector<Pattern> summarize(const ExplanationSet& e, const CanonicalRelation& T1,
                               const CanonicalRelation& T2, const ProvenanceRelation& P1,
                               const ProvenanceRelation& P2, double max_exception_rate) {
    if (!(max_exception_rate >= 0 && max_exception_rate < 1))
        fail(ErrorCode::Invalid, "max_exception_rate must lie in [0, 1)");

    std::vector<Pattern> out;
    SideSummarizer left{Side::Left, P1, max_exception_rate, {}, {}};
    collect_targets(e, Side::Left, T1, left);
    for (auto& p : left.run()) out.push_back(std::move(p));
    SideSummarizer right{Side::Right, P2, max_exception_rate, {}, {}};
    collect_targets(e, Side::Right, T2, right);
    for (auto& p : right.run()) out.push_back(std::move(p));
    return out;
}

} // namespace qdiff
