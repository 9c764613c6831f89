#pragma once

#include <span>
#include <string>
#include <vector>

#include "bench/feedback.hpp"

namespace memsteer::eval {

struct PairOutcome {
    std::string scene_id;
    double m_source = 0.0;
    double m_after_edit = 0.0;
    std::vector<bench::FeedbackAction> feedback_used;
};

// Fraction of outcomes whose post-edit memorability is >= the source score
// (the indicator admits equality).
double improvement_ratio(std::span<const PairOutcome> outcomes);

// Mean of (m_after - m_source) / m_source, reported as a percentage. Guards
// against a zero source score, naming the scene.
double relative_memorability_percent(std::span<const PairOutcome> outcomes);

// exp(total NLL / total token count) pooled over the corpus.
double pooled_perplexity(double total_nll, size_t total_tokens);

// Ranks with average ranks for ties.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation: Pearson over rank vectors; the tie-free path
// uses the exact closed form over squared rank differences.
double spearman(std::span<const double> xs, std::span<const double> ys);

// One-sided exact binomial sign test on discordant pairs: probability of
// >= wins successes out of wins + losses fair coin flips.
double sign_test_p_one_sided(size_t wins, size_t losses);

}  // namespace memsteer::eval
