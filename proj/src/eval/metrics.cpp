#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "util/error.hpp"

namespace memsteer::eval {

double improvement_ratio(std::span<const PairOutcome> outcomes) {
    if (outcomes.empty()) fail(ErrorKind::contract, "improvement_ratio over an empty list");
    size_t hits = 0;
    for (const auto& o : outcomes)
        if (o.m_after_edit >= o.m_source) ++hits;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double relative_memorability_percent(std::span<const PairOutcome> outcomes) {
    if (outcomes.empty())
        fail(ErrorKind::contract, "relative_memorability over an empty list");
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (o.m_source <= 0.0)
            fail(ErrorKind::contract,
                 "zero source memorability in scene " + o.scene_id + " (division guard)");
        sum += (o.m_after_edit - o.m_source) / o.m_source;
    }
    return sum / static_cast<double>(outcomes.size()) * 100.0;
}

double pooled_perplexity(double total_nll, size_t total_tokens) {
    if (total_tokens == 0) fail(ErrorKind::contract, "perplexity over zero tokens");
    return std::exp(total_nll / static_cast<double>(total_tokens));
}

std::vector<double> average_ranks(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) fail(ErrorKind::contract, "spearman input length mismatch");
    const size_t n = xs.size();
    if (n < 2) fail(ErrorKind::contract, "spearman needs at least two points");

    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);

    bool ties = false;
    auto has_tie = [n](const std::vector<double>& r) {
        // Integer ranks 1..n sum to n(n+1)/2 with no repeats iff tie-free.
        std::vector<double> sorted(r);
        std::sort(sorted.begin(), sorted.end());
        for (size_t i = 0; i + 1 < sorted.size(); ++i)
            if (sorted[i] == sorted[i + 1]) return true;
        return false;
    };
    ties = has_tie(rx) || has_tie(ry);

    if (!ties) {
        // Exact closed form, equal to the Pearson correlation of the ranks.
        double sum_d2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double diff = rx[i] - ry[i];
            sum_d2 += diff * diff;
        }
        double nn = static_cast<double>(n);
        return 1.0 - 6.0 * sum_d2 / (nn * (nn * nn - 1.0));
    }

    double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double a = rx[i] - mean;
        double b = ry[i] - mean;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail(ErrorKind::contract, "spearman undefined for a constant input");
    return sxy / std::sqrt(sxx * syy);
}

double sign_test_p_one_sided(size_t wins, size_t losses) {
    const size_t n = wins + losses;
    if (n == 0) return 1.0;  // no discordant pairs, no evidence
    // P(X >= wins), X ~ Binomial(n, 1/2), via log factorials.
    auto log_choose = [](size_t nn, size_t kk) {
        return std::lgamma(static_cast<double>(nn) + 1.0) -
               std::lgamma(static_cast<double>(kk) + 1.0) -
               std::lgamma(static_cast<double>(nn - kk) + 1.0);
    };
    double log_half = std::log(0.5);
    double p = 0.0;
    for (size_t k = wins; k <= n; ++k)
        p += std::exp(log_choose(n, k) + static_cast<double>(n) * log_half);
    return std::min(1.0, p);
}

}  // namespace memsteer::eval
