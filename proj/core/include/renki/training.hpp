#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "renki/kg.hpp"

namespace renki {

// Per-sample weight rules for the weighted empirical risk. The harmonic-mean
// inverse-variance rule equalizes w_i * sigma_i^2 across samples; the capped
// rule w(x) = B^2 / max(sigma(x)^2, B^2) keeps weights at most 1, which is
// why it is not normalized by default.
struct WeightScheme {
    enum class Kind { Uniform, InverseVariance, Capped, RelationRatio };

    Kind kind = Kind::Uniform;
    double cap = 1.0;     // B, Capped only
    double lambda = 1.0;  // RelationRatio only
    std::vector<RelationId> low_noise_relations;
    bool normalize_to_unit_mean = true;

    static WeightScheme uniform();
    static WeightScheme inverse_variance();
    static WeightScheme capped(double b);
    static WeightScheme relation_ratio(double lambda, std::vector<RelationId> low_noise);
};

// Harmonic mean of the per-sample variances; requires noise_scale > 0 on
// every triple.
double harmonic_mean_variance(std::span<const Triple> triples);

std::vector<double> compute_weights(const WeightScheme& scheme, std::span<const Triple> triples);

// (1/n) sum w_i (y_i - f(x_i))^2
double weighted_risk(const ScoreModel& model, const EmbeddingTable& emb,
                     std::span<const Triple> triples, std::span<const double> weights);

// Mean over negatives of max(0, margin - score(pos) + score(neg)).
double contrastive_loss(const ScoreModel& model, const EmbeddingTable& emb, const Triple& positive,
                        std::span<const Triple> negatives, double margin);

struct RandomInit {
    double scale = 1.0;
};
struct ExternalInit {
    Matrix vectors;
};
struct ExternalFrozenInit {
    Matrix vectors;
};
struct ExternalNoisyInit {
    Matrix vectors;
    double noise_std = 1.0;
};
using InitStrategy = std::variant<RandomInit, ExternalInit, ExternalFrozenInit, ExternalNoisyInit>;

EmbeddingTable init_embeddings(const InitStrategy& strategy, std::size_t entities,
                               std::size_t dim, std::uint64_t seed);

struct SgdConfig {
    double step = 0.01;
    double momentum = 0.0;
};
struct AdamConfig {
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};
using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

struct WeightedSquareLoss {};
struct MarginContrastiveLoss {
    double margin = 1.0;
    int negatives_per_positive = 1;
};
using LossConfig = std::variant<WeightedSquareLoss, MarginContrastiveLoss>;

struct TrainConfig {
    LossConfig loss = WeightedSquareLoss{};
    OptimizerConfig optimizer = AdamConfig{};
    int epochs = 200;
    int batch_size = 100;
    std::uint64_t seed = 0;
    InitStrategy init = RandomInit{};
};

void validate(const TrainConfig& config);

struct TrainReport {
    std::vector<double> loss_trace;  // loss_trace[0] is the pre-training loss
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double best_loss = 0.0;
    // final_loss - best_loss: the observable slack of the optimizer. The
    // true gap to the empirical-risk infimum is unknowable, so this is a
    // reported surrogate, never an assumption.
    double delta_opt = 0.0;
    int epochs_run = 0;
};

// Trains model + embeddings in place. The two-argument form uses uniform
// sample weights; `weights`, when given, must align with `triples`.
// Deterministic given config.seed in a single-threaded run.
TrainReport train(ScoreModel& model, EmbeddingTable& emb, std::span<const Triple> triples,
                  const TrainConfig& config);
TrainReport train(ScoreModel& model, EmbeddingTable& emb, std::span<const Triple> triples,
                  std::span<const double> weights, const TrainConfig& config);

}  // namespace renki
