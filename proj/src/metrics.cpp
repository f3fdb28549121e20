#include "xmln/metrics.hpp"

#include "xmln/errors.hpp"

#include <algorithm>
#include <numeric>

namespace xmln {

PrCurve pr_curve(std::span<const int8_t> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw DataError("pr_curve: labels/scores size mismatch");
    int64_t n_pos = 0;
    for (int8_t l : labels) n_pos += (l != 0);
    const int64_t n_neg = static_cast<int64_t>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("pr_curve: need at least one positive and one negative label");

    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    PrCurve curve;
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        // advance through the whole tie group before emitting a point
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] != 0 ? tp : fp) += 1;
            ++i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        curve.points.emplace_back(recall, precision);
    }

    // area by trapezoid, anchored at (recall 0, first precision)
    double area = 0.0;
    double prev_r = 0.0, prev_p = curve.points.front().second;
    for (const auto& [r, p] : curve.points) {
        area += (r - prev_r) * 0.5 * (p + prev_p);
        prev_r = r;
        prev_p = p;
    }
    curve.area = area;
    return curve;
}

double auc_pr(std::span<const int8_t> labels, std::span<const double> scores) {
    return pr_curve(labels, scores).area;
}

int filtered_rank(const RankTask& task) {
    if (task.query_index < 0 ||
        task.query_index >= static_cast<int>(task.scores.size()))
        throw DataError("filtered_rank: query missing from candidates");
    const double qs = task.scores[static_cast<size_t>(task.query_index)];
    int greater = 0, tied_wrong = 0;
    for (size_t i = 0; i < task.scores.size(); ++i) {
        if (static_cast<int>(i) == task.query_index) continue;
        if (task.known_true[i]) continue;  // filtered ranking
        if (task.scores[i] > qs) {
            ++greater;
        } else if (task.scores[i] == qs) {
            ++tied_wrong;  // wrong candidates rank ahead on ties
        }
    }
    return 1 + greater + tied_wrong;
}

RankSummary mrr_hits(std::span<const int> ranks) {
    if (ranks.empty()) throw DataError("mrr_hits: no ranks");
    RankSummary s;
    s.n = static_cast<int>(ranks.size());
    int64_t hits = 0;
    double rr = 0.0;
    for (int r : ranks) {
        rr += 1.0 / static_cast<double>(r);
        hits += (r <= 10);
    }
    s.mrr = rr / static_cast<double>(s.n);
    s.hits10 = 100.0 * static_cast<double>(hits) / static_cast<double>(s.n);
    return s;
}

} // namespace xmln
