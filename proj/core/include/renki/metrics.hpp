#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "renki/kg.hpp"

namespace renki {

using ScoreOracle = std::function<double(const Triple&)>;

struct EvalReport {
    double weighted_mse_in = 0.0;
    double weighted_mse_out = 0.0;
    // Out-of-sample MSE against noisy labels differs from the oracle MSE by
    // the irreducible noise; both are reported.
    double mse_out_vs_labels = 0.0;
    std::map<RelationId, double> auc_per_relation;
    std::map<RelationId, std::size_t> eval_counts;
    double weighted_auc_avg = 0.0;
    double classification_error = 0.0;
    std::size_t n_eval = 0;
};

// (1/n) sum w_i (f(x_i) - gamma(x_i))^2; empty weights mean uniform.
double weighted_mse(const ScoreModel& model, const EmbeddingTable& emb,
                    std::span<const Triple> triples, std::span<const double> weights,
                    const ScoreOracle& oracle);

// One negative per positive: a fair coin picks head or tail, the replacement
// is uniform over the same category excluding the original entity, and
// candidates already present in the positive set are rejected (resampled up
// to a cap, then located exhaustively). Throws DataError when a triple has
// no valid corruption.
std::vector<Triple> corrupt_negatives(std::span<const Triple> positives,
                                      std::span<const int> entity_categories, std::uint64_t seed);

// Tie-adjusted Mann-Whitney AUC: Pr(score+ > score-) + 0.5 Pr(tie), computed
// from rank statistics.
double auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

// Fraction of points where (score > threshold) disagrees with label != 0.
double classification_error(std::span<const double> scores, std::span<const int> labels,
                            double threshold);

// Threshold midway between the best split of the two score samples,
// minimizing balanced error; used to calibrate uncalibrated scores.
double best_threshold(std::span<const double> positive_scores,
                      std::span<const double> negative_scores);

// Count-weighted average of per-relation AUCs.
double weighted_auc_average(const std::map<RelationId, double>& auc_per_relation,
                            const std::map<RelationId, std::size_t>& counts);

}  // namespace renki
