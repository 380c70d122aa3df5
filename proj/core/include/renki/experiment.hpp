#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "renki/bounds.hpp"
#include "renki/io.hpp"
#include "renki/metrics.hpp"
#include "renki/synthetic.hpp"
#include "renki/training.hpp"

namespace renki {

struct ModelSpec {
    std::string kind = "cnkg";  // cnkg | ipnkg | transe | mip | concat_linear
    std::vector<std::size_t> hidden = {32};
    OutputTransform rho = OutputTransform::Identity;
    std::size_t ip_output_dim = 0;  // 0 = embedding dim
};

enum class EvalProtocol {
    FreshMse,     // fresh samples from the truth, MSE against the oracle
    OracleAuc,    // Bernoulli(gamma) edges: AUC / classification error
    NegativeAuc,  // held-out positives vs same-category corrupted negatives
};

struct ExperimentConfig {
    // data: exactly one of generator / dataset_path
    std::optional<GeneratorSpec> generator;
    std::optional<std::string> dataset_path;
    std::size_t train_samples = 10000;
    std::size_t eval_samples = 10000;
    std::size_t embedding_dim = 0;  // 0 = from generator / init file
    // Two-tier per-relation label noise for binary truths: y = gamma + eps
    // with sigma chosen by relation tier. Enabled when sigma_high > 0.
    double relation_sigma_low = 0.0;
    double relation_sigma_high = 0.0;

    ModelSpec model;
    WeightScheme weights = WeightScheme::uniform();
    std::vector<RelationId> low_noise_relations;  // tier set, shared with RelationRatio

    // random | truth | truth_frozen | truth_noisy | external | external_frozen | external_noisy
    std::string init_kind = "random";
    double init_scale = 1.0;
    double init_noise_std = 1.0;
    std::string init_file;

    TrainConfig train;
    EvalProtocol eval = EvalProtocol::FreshMse;
    double classification_threshold = 0.5;
    bool calibrate_threshold = false;
    double holdout_fraction = 0.2;  // NegativeAuc on datasets

    int replications = 10;
    std::uint64_t base_seed = 1;
    std::filesystem::path output_dir;  // empty = no files written
    int threads = 1;

    // Base paths for model persistence: model_out saves replication 0's
    // trained model (+ embeddings); model_in loads instead of training.
    std::filesystem::path model_out;
    std::filesystem::path model_in;

    std::vector<double> lambda_grid;             // sweep-lambda
    std::vector<std::size_t> train_sample_grid;  // MSE-vs-n series
};

ExperimentConfig parse_experiment_config(const std::map<std::string, std::string>& kv);

struct SeedOutcome {
    int replication = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalReport report;
    TrainReport train_report;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample std; 0 when a single replication
    std::size_t count = 0;
};

struct ExperimentResult {
    std::vector<SeedOutcome> seeds;
    std::map<std::string, Aggregate> summary;
};

// Runs `replications` independent replications with derived seeds; when
// output_dir is set, writes per_seed.csv and summary.csv. Replications
// fan out over config.threads; outputs are written in seed order either
// way, so bundles are byte-identical across thread counts.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepPoint {
    double x = 0.0;
    ExperimentResult result;
};

// Reruns the experiment with weights = relation_ratio(lambda, tier set) for
// each lambda; emits series_lambda.csv when output_dir is set.
std::vector<SweepPoint> run_lambda_sweep(const ExperimentConfig& config,
                                         std::span<const double> grid);

// Reruns with each training sample size; emits series_mse_vs_n.csv.
std::vector<SweepPoint> run_sample_size_sweep(const ExperimentConfig& config,
                                              std::span<const std::size_t> grid);

struct BoundTableRow {
    std::string name;
    double value = 0.0;
    bool clamped = false;
    std::string note;
};

// One row per capacity bound for an NKG model config, inputs echoed.
std::vector<BoundTableRow> bound_table(const ModelSpec& model, int entities, int embedding_dim,
                                       int relations, double sample_size, double score_bound,
                                       double sigma_h_sq);
void write_bound_table_csv(std::ostream& out, std::span<const BoundTableRow> rows);
void write_bound_table_text(std::ostream& out, std::span<const BoundTableRow> rows);

}  // namespace renki
