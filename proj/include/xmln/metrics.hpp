#pragma once

#include "xmln/kb_io.hpp"
#include "xmln/logic.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace xmln {

// Precision-recall points at each distinct score threshold (descending), with
// trapezoidal area. Recall is nondecreasing along `points`.
struct PrCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    double area = 0.0;
};

PrCurve pr_curve(std::span<const int8_t> labels, std::span<const double> scores);

// Area under the precision-recall curve. Requires at least one positive and
// one negative label.
double auc_pr(std::span<const int8_t> labels, std::span<const double> scores);

// One ranking query: the query atom scored against all instantiations of one
// argument slot. `known_true` marks candidates filtered out before ranking
// (true facts other than the query itself).
struct RankTask {
    GroundAtom query;
    int query_index = -1;  // position of the query among the candidates
    std::vector<double> scores;
    std::vector<char> known_true;
};

// Rank after removing known-true candidates other than the query; ties with
// wrong candidates rank the wrong ones ahead.
int filtered_rank(const RankTask& task);

struct RankSummary {
    double mrr = 0.0;
    double hits10 = 0.0;  // percent
    int n = 0;
};

RankSummary mrr_hits(std::span<const int> ranks);

// Builds one RankTask per argument slot of the query (head and tail for
// binary predicates), scoring candidates with `score`. The filter set is the
// KB's positive facts plus `extra_known_true`.
template <typename ScoreFn>
std::vector<RankTask> completion_tasks(const KnowledgeBase& kb, const GroundAtom& query,
                                       const std::vector<GroundAtom>& extra_known_true,
                                       ScoreFn&& score) {
    std::unordered_map<GroundAtom, char, AtomHash> truth;
    for (const GroundAtom& a : extra_known_true) truth.emplace(a, 1);

    std::vector<RankTask> tasks;
    const int m = kb.n_constants();
    for (size_t slot = 0; slot < query.args.size(); ++slot) {
        RankTask task;
        task.query = query;
        task.scores.reserve(static_cast<size_t>(m));
        task.known_true.reserve(static_cast<size_t>(m));
        for (int c = 0; c < m; ++c) {
            GroundAtom cand = query;
            cand.args[slot] = c;
            if (cand == query) task.query_index = static_cast<int>(task.scores.size());
            const auto v = kb.fact_value(cand);
            const bool is_true = (v && *v == 1) || truth.count(cand) > 0;
            task.known_true.push_back(is_true ? 1 : 0);
            task.scores.push_back(score(cand));
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

} // namespace xmln
