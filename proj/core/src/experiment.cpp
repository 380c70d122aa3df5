#include "renki/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "renki/errors.hpp"
#include "renki/rng.hpp"

namespace renki {

namespace {

// per-replication sub-streams
constexpr std::uint64_t kModelStream = 0x4D4F44;    // model weight init
constexpr std::uint64_t kInitStream = 0x494E49;     // embedding init
constexpr std::uint64_t kTrainStream = 0x545249;    // shuffling / negatives
constexpr std::uint64_t kEvalStream = 0x45564C;     // eval candidates
constexpr std::uint64_t kCorruptStream = 0x434F52;  // negative corruption
constexpr std::uint64_t kLabelStream = 0x4C4142;    // tiered label noise
constexpr std::uint64_t kSplitStream = 0x53504C;    // train/test splits

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(key + ": cannot parse number '" + item + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    for (const double v : parse_double_list(s, key)) {
        if (v < 0 || v != std::floor(v)) throw ConfigError(key + ": expected nonnegative integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + s + "'");
}

OutputTransform parse_rho(const std::string& s) {
    if (s == "identity") return OutputTransform::Identity;
    if (s == "logistic") return OutputTransform::Logistic;
    throw ConfigError("rho: expected identity or logistic");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    GeneratorSpec gen;
    bool has_generator = false;

    AdamConfig adam;
    SgdConfig sgd;
    std::string optimizer = "adam";
    std::string loss = "weighted_square";
    MarginContrastiveLoss contrastive;
    std::string weights = "uniform";
    double cap = 1.0;
    double lambda = 1.0;
    std::optional<bool> normalize_weights;

    for (const auto& [key, value] : kv) {
        if (key == "generator") {
            gen.kind = truth_kind_from_string(value);
            has_generator = true;
        } else if (key == "dataset") {
            cfg.dataset_path = value;
        } else if (key == "entities") {
            gen.entities = std::stoi(value);
        } else if (key == "dim") {
            gen.dim = std::stoi(value);
            cfg.embedding_dim = static_cast<std::size_t>(std::stoi(value));
        } else if (key == "relations") {
            gen.relations = std::stoi(value);
        } else if (key == "noise_stds") {
            gen.noise_stds = parse_double_list(value, key);
        } else if (key == "gen_bias") {
            gen.bias = std::stod(value);
        } else if (key == "relation_sigma_low") {
            cfg.relation_sigma_low = std::stod(value);
        } else if (key == "relation_sigma_high") {
            cfg.relation_sigma_high = std::stod(value);
        } else if (key == "train_samples") {
            cfg.train_samples = static_cast<std::size_t>(std::stoul(value));
        } else if (key == "eval_samples") {
            cfg.eval_samples = static_cast<std::size_t>(std::stoul(value));
        } else if (key == "model") {
            cfg.model.kind = value;
        } else if (key == "hidden") {
            cfg.model.hidden = parse_size_list(value, key);
        } else if (key == "rho") {
            cfg.model.rho = parse_rho(value);
        } else if (key == "ip_output_dim") {
            cfg.model.ip_output_dim = static_cast<std::size_t>(std::stoul(value));
        } else if (key == "weights") {
            weights = value;
        } else if (key == "cap") {
            cap = std::stod(value);
        } else if (key == "lambda") {
            lambda = std::stod(value);
        } else if (key == "low_noise_relations") {
            for (const double v : parse_double_list(value, key))
                cfg.low_noise_relations.push_back(static_cast<RelationId>(v));
        } else if (key == "normalize_weights") {
            normalize_weights = parse_bool(value, key);
        } else if (key == "init") {
            cfg.init_kind = value;
        } else if (key == "init_scale") {
            cfg.init_scale = std::stod(value);
        } else if (key == "init_noise_std") {
            cfg.init_noise_std = std::stod(value);
        } else if (key == "init_file") {
            cfg.init_file = value;
        } else if (key == "loss") {
            loss = value;
        } else if (key == "margin") {
            contrastive.margin = std::stod(value);
        } else if (key == "negatives") {
            contrastive.negatives_per_positive = std::stoi(value);
        } else if (key == "optimizer") {
            optimizer = value;
        } else if (key == "step") {
            adam.step = std::stod(value);
            sgd.step = adam.step;
        } else if (key == "momentum") {
            sgd.momentum = std::stod(value);
        } else if (key == "beta1") {
            adam.beta1 = std::stod(value);
        } else if (key == "beta2") {
            adam.beta2 = std::stod(value);
        } else if (key == "epsilon") {
            adam.epsilon = std::stod(value);
        } else if (key == "epochs") {
            cfg.train.epochs = std::stoi(value);
        } else if (key == "batch_size") {
            cfg.train.batch_size = std::stoi(value);
        } else if (key == "eval") {
            if (value == "fresh_mse")
                cfg.eval = EvalProtocol::FreshMse;
            else if (value == "oracle_auc")
                cfg.eval = EvalProtocol::OracleAuc;
            else if (value == "negative_auc")
                cfg.eval = EvalProtocol::NegativeAuc;
            else
                throw ConfigError("eval: expected fresh_mse, oracle_auc or negative_auc");
        } else if (key == "threshold") {
            cfg.classification_threshold = std::stod(value);
        } else if (key == "calibrate_threshold") {
            cfg.calibrate_threshold = parse_bool(value, key);
        } else if (key == "holdout_fraction") {
            cfg.holdout_fraction = std::stod(value);
        } else if (key == "replications") {
            cfg.replications = std::stoi(value);
        } else if (key == "seed") {
            cfg.base_seed = std::stoull(value);
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "model_out") {
            cfg.model_out = value;
        } else if (key == "model_in") {
            cfg.model_in = value;
        } else if (key == "threads") {
            cfg.threads = std::stoi(value);
        } else if (key == "lambda_grid") {
            cfg.lambda_grid = parse_double_list(value, key);
        } else if (key == "train_samples_grid") {
            cfg.train_sample_grid = parse_size_list(value, key);
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }

    if (has_generator) cfg.generator = gen;
    if (has_generator && cfg.dataset_path)
        throw ConfigError("choose either a generator or a dataset, not both");
    if (!has_generator && !cfg.dataset_path)
        throw ConfigError("config needs a generator or a dataset");

    if (weights == "uniform")
        cfg.weights = WeightScheme::uniform();
    else if (weights == "inverse_variance")
        cfg.weights = WeightScheme::inverse_variance();
    else if (weights == "capped")
        cfg.weights = WeightScheme::capped(cap);
    else if (weights == "relation_ratio")
        cfg.weights = WeightScheme::relation_ratio(lambda, cfg.low_noise_relations);
    else
        throw ConfigError("weights: unknown scheme " + weights);
    if (normalize_weights) cfg.weights.normalize_to_unit_mean = *normalize_weights;

    if (loss == "weighted_square")
        cfg.train.loss = WeightedSquareLoss{};
    else if (loss == "margin_contrastive")
        cfg.train.loss = contrastive;
    else
        throw ConfigError("loss: unknown loss " + loss);

    if (optimizer == "adam")
        cfg.train.optimizer = adam;
    else if (optimizer == "sgd")
        cfg.train.optimizer = sgd;
    else
        throw ConfigError("optimizer: expected adam or sgd");

    if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
    return cfg;
}

namespace {

ScoreModel build_model(const ModelSpec& spec, std::size_t dim, int relations, Rng& rng) {
    if (spec.kind == "cnkg") return make_cnkg(relations, dim, spec.hidden, rng, spec.rho);
    if (spec.kind == "ipnkg")
        return make_ipnkg(relations, dim, spec.ip_output_dim, spec.hidden, rng, spec.rho);
    if (spec.kind == "transe") return make_transe(relations, dim, rng);
    if (spec.kind == "mip") return make_mip(relations, dim, rng);
    if (spec.kind == "concat_linear") return make_concat_linear(relations, dim, rng);
    throw ConfigError("unknown model kind: " + spec.kind);
}

struct SeedData {
    std::vector<Triple> train;
    std::vector<Triple> eval_positives;  // NegativeAuc
    std::vector<Triple> eval_samples;    // FreshMse / OracleAuc candidates
    std::optional<GroundTruth> truth;
    std::vector<int> categories;  // per entity; single category when untagged
    std::size_t entities = 0;
    int relations = 0;
    io::Vocabulary entity_vocab;  // for external init files
};

bool is_binary(TruthKind k) { return k == TruthKind::Logistic || k == TruthKind::Mip; }

// Observation noise std for a triple under the two-tier scheme.
double tier_sigma(const ExperimentConfig& cfg, RelationId r) {
    const bool low = std::find(cfg.low_noise_relations.begin(), cfg.low_noise_relations.end(),
                               r) != cfg.low_noise_relations.end();
    return low ? cfg.relation_sigma_low : cfg.relation_sigma_high;
}

SeedData assemble_generator_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    GeneratorSpec gen = *cfg.generator;
    gen.seed = seed;

    SeedData data;
    data.entities = static_cast<std::size_t>(gen.entities);
    data.relations = gen.relations;
    data.categories.assign(data.entities, 0);
    data.entity_vocab = io::synthetic_entity_vocabulary(gen.entities);

    if (!is_binary(gen.kind)) {
        SyntheticDataset train = sample_regression(gen, cfg.train_samples, 0);
        data.truth = train.truth;
        data.train = std::move(train.triples);
        if (cfg.eval == EvalProtocol::FreshMse) {
            data.eval_samples = sample_regression(gen, cfg.eval_samples, 1).triples;
        } else {
            throw ConfigError("regression truths evaluate with fresh_mse");
        }
        return data;
    }

    // binary truths
    data.truth = build_truth(gen);
    if (cfg.relation_sigma_high > 0.0) {
        // two-tier heteroskedastic labels on the edge-probability surface
        Rng rng(derive_seed(seed, kLabelStream));
        data.train = sample_uniform_triples(gen.entities, gen.relations, cfg.train_samples, rng);
        for (auto& t : data.train) {
            const double sigma = tier_sigma(cfg, t.relation);
            t.noise_scale = sigma;
            t.label = data.truth->gamma(t) + sigma * rng.normal();
        }
    } else {
        data.train = sample_binary_positive_only(gen, cfg.train_samples).triples;
        if (data.train.empty()) throw DataError("generator produced no positive edges");
    }

    Rng eval_rng(derive_seed(seed, kEvalStream));
    data.eval_samples =
        sample_uniform_triples(gen.entities, gen.relations, cfg.eval_samples, eval_rng);
    for (auto& t : data.eval_samples) t.label = eval_rng.uniform() < data.truth->gamma(t) ? 1.0 : 0.0;
    if (cfg.eval == EvalProtocol::NegativeAuc) {
        for (const auto& t : data.eval_samples)
            if (*t.label == 1.0) data.eval_positives.push_back(t);
        if (data.eval_positives.empty()) throw DataError("no positive eval edges to corrupt");
    }
    return data;
}

SeedData assemble_dataset_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::filesystem::path base = *cfg.dataset_path;
    SeedData data;

    std::vector<Triple> all;
    if (std::filesystem::exists(base.string() + ".truth.json")) {
        SyntheticDataset ds = io::load_dataset(base);
        data.truth = ds.truth;
        all = std::move(ds.triples);
        data.entities = static_cast<std::size_t>(data.truth->entities);
        data.relations = data.truth->relations;
        data.categories.assign(data.entities, 0);
        data.entity_vocab = io::synthetic_entity_vocabulary(data.truth->entities);
    } else {
        io::Vocabulary entities = io::load_vocabulary(base.string() + ".entities.tsv");
        io::Vocabulary relations = io::load_vocabulary(base.string() + ".relations.tsv");
        io::TripleData td =
            io::load_triples(base.string() + ".triples.tsv", entities, relations);
        all = std::move(td.triples);
        data.entities = entities.size();
        data.relations = static_cast<int>(relations.size());
        data.categories = entities.categories.empty()
                              ? std::vector<int>(data.entities, 0)
                              : entities.categories;
        data.entity_vocab = std::move(entities);
    }

    if (cfg.eval == EvalProtocol::NegativeAuc) {
        // per-relation stratified holdout
        std::map<RelationId, std::vector<std::size_t>> by_relation;
        for (std::size_t i = 0; i < all.size(); ++i) by_relation[all[i].relation].push_back(i);
        Rng rng(derive_seed(seed, kSplitStream));
        std::vector<char> held(all.size(), 0);
        for (auto& [rel, idx] : by_relation) {
            for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
            const auto k = static_cast<std::size_t>(
                std::floor(cfg.holdout_fraction * static_cast<double>(idx.size())));
            for (std::size_t i = 0; i < k; ++i) held[idx[i]] = 1;
        }
        for (std::size_t i = 0; i < all.size(); ++i)
            (held[i] ? data.eval_positives : data.train).push_back(all[i]);
        if (data.eval_positives.empty())
            throw DataError("holdout produced no evaluation positives");
    } else {
        data.train = std::move(all);
        if (cfg.eval == EvalProtocol::FreshMse) {
            if (!data.truth) throw ConfigError("fresh_mse needs a dataset with a truth sidecar");
            // fresh noiseless draws from the stored truth
            Rng rng(derive_seed(seed, kEvalStream));
            data.eval_samples = sample_uniform_triples(
                data.truth->entities, data.truth->relations, cfg.eval_samples, rng);
            for (auto& t : data.eval_samples) t.label = data.truth->gamma(t);
        }
    }
    return data;
}

InitStrategy make_init_strategy(const ExperimentConfig& cfg, const SeedData& data,
                                std::size_t dim) {
    const auto need_truth = [&]() -> const GroundTruth& {
        if (!data.truth) throw ConfigError("init kind '" + cfg.init_kind + "' needs a ground truth");
        if (static_cast<std::size_t>(data.truth->dim) != dim)
            throw ShapeError("truth embedding dim != model embedding dim");
        return *data.truth;
    };
    const auto load_external = [&]() {
        if (cfg.init_file.empty()) throw ConfigError("init_file required for external init");
        return io::load_embedding_file(cfg.init_file, data.entity_vocab);
    };
    if (cfg.init_kind == "random") return RandomInit{cfg.init_scale};
    if (cfg.init_kind == "truth") return ExternalInit{need_truth().embeddings};
    if (cfg.init_kind == "truth_frozen") return ExternalFrozenInit{need_truth().embeddings};
    if (cfg.init_kind == "truth_noisy")
        return ExternalNoisyInit{need_truth().embeddings, cfg.init_noise_std};
    if (cfg.init_kind == "external") return ExternalInit{load_external()};
    if (cfg.init_kind == "external_frozen") return ExternalFrozenInit{load_external()};
    if (cfg.init_kind == "external_noisy")
        return ExternalNoisyInit{load_external(), cfg.init_noise_std};
    throw ConfigError("unknown init kind: " + cfg.init_kind);
}

// Balanced per-relation classification error with an optional calibrated
// threshold. Scores are split in half per side: the first halves pick the
// threshold, the second halves are measured.
double balanced_classification_error(const std::map<RelationId, std::vector<double>>& pos,
                                     const std::map<RelationId, std::vector<double>>& neg,
                                     const ExperimentConfig& cfg) {
    std::vector<double> calib_pos, calib_neg, test_pos, test_neg;
    for (const auto& [rel, p] : pos) {
        const auto it = neg.find(rel);
        if (it == neg.end()) continue;
        const auto& n = it->second;
        const std::size_t bal = std::min(p.size(), n.size());
        if (bal == 0) continue;
        const std::size_t half = cfg.calibrate_threshold ? bal / 2 : 0;
        calib_pos.insert(calib_pos.end(), p.begin(), p.begin() + half);
        calib_neg.insert(calib_neg.end(), n.begin(), n.begin() + half);
        test_pos.insert(test_pos.end(), p.begin() + half, p.begin() + bal);
        test_neg.insert(test_neg.end(), n.begin() + half, n.begin() + bal);
    }
    if (test_pos.empty() || test_neg.empty()) return std::nan("");

    double threshold = cfg.classification_threshold;
    if (cfg.calibrate_threshold && !calib_pos.empty() && !calib_neg.empty())
        threshold = best_threshold(calib_pos, calib_neg);

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(test_pos.size() + test_neg.size());
    for (const double s : test_pos) {
        scores.push_back(s);
        labels.push_back(1);
    }
    for (const double s : test_neg) {
        scores.push_back(s);
        labels.push_back(0);
    }
    return classification_error(scores, labels, threshold);
}

SeedOutcome run_one(const ExperimentConfig& cfg, int replication) {
    SeedOutcome outcome;
    outcome.replication = replication;
    outcome.seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(replication));

    SeedData data = cfg.generator ? assemble_generator_data(cfg, outcome.seed)
                                  : assemble_dataset_data(cfg, outcome.seed);

    std::size_t dim = cfg.embedding_dim;
    if (dim == 0 && data.truth) dim = static_cast<std::size_t>(data.truth->dim);
    if (dim == 0) throw ConfigError("embedding dim unknown; set dim in the config");

    const bool pretrained = !cfg.model_in.empty();
    Rng model_rng(derive_seed(outcome.seed, kModelStream));
    ScoreModel model = pretrained
                           ? io::load_model(cfg.model_in.string() + ".model.json")
                           : build_model(cfg.model, dim, data.relations, model_rng);

    EmbeddingTable emb = pretrained
                             ? EmbeddingTable(io::load_embedding_file(
                                   cfg.model_in.string() + ".emb.tsv", data.entity_vocab))
                             : init_embeddings(make_init_strategy(cfg, data, dim), data.entities,
                                               dim, derive_seed(outcome.seed, kInitStream));
    if (pretrained) dim = emb.dim();

    const bool contrastive = std::holds_alternative<MarginContrastiveLoss>(cfg.train.loss);
    std::vector<Triple> train_set = data.train;
    if (!contrastive) {
        bool missing_label = false;
        for (const auto& t : train_set)
            if (!t.label) missing_label = true;
        if (missing_label) {
            // Observed edges become y = 1 and are matched with corrupted
            // negatives labeled y = 0.
            for (auto& t : train_set)
                if (!t.label) t.label = 1.0;
            auto negatives = corrupt_negatives(train_set, data.categories,
                                               derive_seed(outcome.seed, kCorruptStream));
            for (auto& t : negatives) {
                t.label = 0.0;
                train_set.push_back(t);
            }
        }
    }

    std::vector<double> weights;
    if (!contrastive) weights = compute_weights(cfg.weights, train_set);

    if (!pretrained) {
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(outcome.seed, kTrainStream);
        outcome.train_report = contrastive ? train(model, emb, train_set, tc)
                                           : train(model, emb, train_set, weights, tc);
        if (!cfg.model_out.empty() && replication == 0) {
            io::save_model(cfg.model_out.string() + ".model.json", model);
            io::save_embedding_file(cfg.model_out.string() + ".emb.tsv", emb.vectors,
                                    data.entity_vocab);
        }
    } else {
        outcome.train_report.final_loss = std::nan("");
        outcome.train_report.delta_opt = std::nan("");
    }

    EvalReport& report = outcome.report;
    report.weighted_mse_in = std::nan("");
    report.weighted_mse_out = std::nan("");
    report.mse_out_vs_labels = std::nan("");
    report.weighted_auc_avg = std::nan("");
    report.classification_error = std::nan("");

    const auto oracle = [&](const Triple& t) { return data.truth->gamma(t); };

    if (cfg.eval == EvalProtocol::FreshMse) {
        if (!data.truth) throw ConfigError("fresh_mse needs a ground-truth oracle");
        report.weighted_mse_in = weighted_mse(model, emb, train_set, weights, oracle);
        report.weighted_mse_out = weighted_mse(model, emb, data.eval_samples, {}, oracle);
        double sum = 0.0;
        for (const auto& t : data.eval_samples) {
            const double r = score(model, emb, t) - *t.label;
            sum += r * r;
        }
        report.mse_out_vs_labels =
            data.eval_samples.empty() ? 0.0 : sum / static_cast<double>(data.eval_samples.size());
        report.n_eval = data.eval_samples.size();
        for (const auto& t : data.eval_samples) report.eval_counts[t.relation]++;
        return outcome;
    }

    // ranking protocols
    std::map<RelationId, std::vector<double>> pos_scores, neg_scores;
    if (cfg.eval == EvalProtocol::OracleAuc) {
        if (!data.truth) throw ConfigError("oracle_auc needs a ground-truth oracle");
        for (const auto& t : data.eval_samples) {
            (*t.label == 1.0 ? pos_scores : neg_scores)[t.relation].push_back(
                score(model, emb, t));
        }
        if (!contrastive && data.truth) {
            report.weighted_mse_in = weighted_mse(model, emb, train_set, weights, oracle);
            report.weighted_mse_out = weighted_mse(model, emb, data.eval_samples, {}, oracle);
        }
        report.n_eval = data.eval_samples.size();
    } else {
        const auto negatives = corrupt_negatives(data.eval_positives, data.categories,
                                                 derive_seed(outcome.seed, kCorruptStream));
        for (const auto& t : data.eval_positives)
            pos_scores[t.relation].push_back(score(model, emb, t));
        for (const auto& t : negatives) neg_scores[t.relation].push_back(score(model, emb, t));
        report.n_eval = data.eval_positives.size() + negatives.size();
    }

    for (const auto& [rel, p] : pos_scores) {
        const auto it = neg_scores.find(rel);
        if (it == neg_scores.end() || p.empty() || it->second.empty()) continue;
        report.auc_per_relation[rel] = auc(p, it->second);
        report.eval_counts[rel] = p.size();
    }
    if (!report.auc_per_relation.empty())
        report.weighted_auc_avg = weighted_auc_average(report.auc_per_relation, report.eval_counts);
    report.classification_error = balanced_classification_error(pos_scores, neg_scores, cfg);
    return outcome;
}

constexpr const char* kPerSeedHeader =
    "replication,seed,status,error,final_loss,delta_opt,mse_in,mse_out,mse_out_vs_labels,"
    "auc_avg,class_error,n_eval";

void format_double(std::ostream& out, double v) {
    if (std::isnan(v)) {
        out << "nan";
        return;
    }
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    out << ss.str();
}

void write_per_seed_csv(std::ostream& out, const std::vector<SeedOutcome>& seeds) {
    out << kPerSeedHeader << '\n';
    for (const auto& s : seeds) {
        out << s.replication << ',' << s.seed << ',' << (s.ok ? "ok" : "failed") << ','
            << s.error << ',';
        format_double(out, s.train_report.final_loss);
        out << ',';
        format_double(out, s.train_report.delta_opt);
        out << ',';
        format_double(out, s.report.weighted_mse_in);
        out << ',';
        format_double(out, s.report.weighted_mse_out);
        out << ',';
        format_double(out, s.report.mse_out_vs_labels);
        out << ',';
        format_double(out, s.report.weighted_auc_avg);
        out << ',';
        format_double(out, s.report.classification_error);
        out << ',' << s.report.n_eval << '\n';
    }
}

Aggregate aggregate_metric(const std::vector<SeedOutcome>& seeds,
                           double (*pick)(const SeedOutcome&)) {
    std::vector<double> values;
    for (const auto& s : seeds) {
        if (!s.ok) continue;
        const double v = pick(s);
        if (std::isfinite(v)) values.push_back(v);
    }
    Aggregate a;
    a.count = values.size();
    if (values.empty()) {
        a.mean = std::nan("");
        a.stddev = std::nan("");
        return a;
    }
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return a;
}

std::map<std::string, Aggregate> summarize(const std::vector<SeedOutcome>& seeds) {
    std::map<std::string, Aggregate> summary;
    summary["final_loss"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.train_report.final_loss; });
    summary["delta_opt"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.train_report.delta_opt; });
    summary["mse_in"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.report.weighted_mse_in; });
    summary["mse_out"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.report.weighted_mse_out; });
    summary["mse_out_vs_labels"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.report.mse_out_vs_labels; });
    summary["auc_avg"] =
        aggregate_metric(seeds, [](const SeedOutcome& s) { return s.report.weighted_auc_avg; });
    summary["class_error"] = aggregate_metric(
        seeds, [](const SeedOutcome& s) { return s.report.classification_error; });
    return summary;
}

void write_summary_csv(std::ostream& out, const std::map<std::string, Aggregate>& summary) {
    out << "metric,mean,stddev,count\n";
    for (const auto& [name, a] : summary) {
        out << name << ',';
        format_double(out, a.mean);
        out << ',';
        format_double(out, a.stddev);
        out << ',' << a.count << '\n';
    }
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    result.seeds.resize(static_cast<std::size_t>(config.replications));

    const auto work = [&](int r) {
        SeedOutcome& slot = result.seeds[static_cast<std::size_t>(r)];
        try {
            slot = run_one(config, r);
            slot.ok = true;
        } catch (const Error& e) {
            slot.replication = r;
            slot.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(r));
            slot.ok = false;
            slot.error = std::string(to_string(e.category())) + ": " + e.what();
        }
    };

    const int workers = std::max(1, std::min(config.threads, config.replications));
    if (workers == 1) {
        for (int r = 0; r < config.replications; ++r) work(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int r = next.fetch_add(1); r < config.replications; r = next.fetch_add(1))
                    work(r);
            });
        for (auto& t : pool) t.join();
    }

    result.summary = summarize(result.seeds);

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        auto per_seed = open_out(config.output_dir / "per_seed.csv");
        write_per_seed_csv(per_seed, result.seeds);
        auto summary = open_out(config.output_dir / "summary.csv");
        write_summary_csv(summary, result.summary);
    }
    return result;
}

std::vector<SweepPoint> run_lambda_sweep(const ExperimentConfig& config,
                                         std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    std::vector<SweepPoint> points;
    for (const double lambda : grid) {
        ExperimentConfig c = config;
        c.weights = WeightScheme::relation_ratio(lambda, config.low_noise_relations);
        c.output_dir.clear();
        points.push_back({lambda, run_experiment(c)});
    }
    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        auto out = open_out(config.output_dir / "series_lambda.csv");
        out << "lambda,auc_mean,auc_std,err_mean,err_std\n";
        for (const auto& p : points) {
            const auto& auc = p.result.summary.at("auc_avg");
            const auto& err = p.result.summary.at("class_error");
            format_double(out, p.x);
            out << ',';
            format_double(out, auc.mean);
            out << ',';
            format_double(out, auc.stddev);
            out << ',';
            format_double(out, err.mean);
            out << ',';
            format_double(out, err.stddev);
            out << '\n';
        }
    }
    return points;
}

std::vector<SweepPoint> run_sample_size_sweep(const ExperimentConfig& config,
                                              std::span<const std::size_t> grid) {
    if (grid.empty()) throw ConfigError("sample-size grid is empty");
    std::vector<SweepPoint> points;
    for (const std::size_t n : grid) {
        ExperimentConfig c = config;
        c.train_samples = n;
        c.output_dir.clear();
        points.push_back({static_cast<double>(n), run_experiment(c)});
    }
    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        auto out = open_out(config.output_dir / "series_mse_vs_n.csv");
        out << "n,mse_out_mean,mse_out_std,mse_in_mean,mse_in_std\n";
        for (const auto& p : points) {
            const auto& mo = p.result.summary.at("mse_out");
            const auto& mi = p.result.summary.at("mse_in");
            format_double(out, p.x);
            out << ',';
            format_double(out, mo.mean);
            out << ',';
            format_double(out, mo.stddev);
            out << ',';
            format_double(out, mi.mean);
            out << ',';
            format_double(out, mi.stddev);
            out << '\n';
        }
    }
    return points;
}

std::vector<BoundTableRow> bound_table(const ModelSpec& model, int entities, int embedding_dim,
                                       int relations, double sample_size, double score_bound,
                                       double sigma_h_sq) {
    if (model.kind != "cnkg" && model.kind != "ipnkg")
        throw ConfigError("bound table covers the neural families (cnkg, ipnkg)");
    const bool ip = model.kind == "ipnkg";
    bounds::BoundInputs in =
        ip ? bounds::inputs_for_ipnkg(entities, embedding_dim, relations, model.hidden,
                                      model.ip_output_dim)
           : bounds::inputs_for_cnkg(entities, embedding_dim, relations, model.hidden);
    in.sample_size = sample_size;
    in.score_bound = score_bound;
    in.sigma_h_sq = sigma_h_sq;
    const auto family = ip ? bounds::Family::IpNkg : bounds::Family::CNkg;

    std::vector<BoundTableRow> rows;
    const auto echo = [&rows](const std::string& name, double value, const std::string& note = "") {
        rows.push_back({name, value, false, note});
    };
    echo("entities", entities);
    echo("embedding_dim", embedding_dim);
    echo("relations", relations);
    echo("layers", in.max_layers());
    echo("activation_pieces", in.pieces, "ReLU");
    echo("activation_degree", in.degree, "ReLU");
    echo("relation_params_avg", in.avg_relation_params());
    echo("relation_params_total", in.total_relation_params());
    const double nd = static_cast<double>(entities) * embedding_dim;
    echo("embedding_params", nd);
    echo("total_params", nd + in.total_relation_params(),
         "exact count for this architecture, biases included");
    echo("sample_size", sample_size);
    echo("score_bound", score_bound);
    echo("sigma_h_sq", sigma_h_sq);

    std::vector<long> layers(static_cast<std::size_t>(relations),
                             static_cast<long>(in.max_layers()));
    std::vector<double> params;
    params.reserve(static_cast<std::size_t>(relations));
    for (const auto& rel : in.layer_params)
        params.push_back(std::accumulate(rel.begin(), rel.end(), 0.0));

    const auto fixed = bounds::pdim_fixed_embedding(layers, params);
    rows.push_back({"pdim_fixed_embedding", fixed.value, fixed.clamped,
                    "sum_k L_k W_k log W_k, constant 1, natural log"});
    const auto trainable = bounds::pdim_trainable_embedding(
        entities, embedding_dim, relations, in.avg_relation_params(), in.max_layers());
    rows.push_back({"pdim_trainable_embedding", trainable.value, trainable.clamped,
                    "(ND + KW) L log(KW), constant 1, natural log"});
    rows.push_back(
        {"partition_complexity_u", bounds::partition_complexity_u(in, family), false, ""});
    const auto vc = bounds::vc_partition_bound(in, family);
    rows.push_back({"vc_partition_bound", vc.value, vc.clamped, "3 (LND + LbarKW) log(8eU)"});
    const auto din = bounds::delta_stat(in, bounds::Regime::InSample);
    rows.push_back({"delta_stat_in_sample", din.value, din.clamped, ""});
    const auto dout = bounds::delta_stat(in, bounds::Regime::OutOfSample);
    rows.push_back({"delta_stat_out_of_sample", dout.value, dout.clamped, ""});

    rows.push_back({"capped_oracle_constant", bounds::kCappedOracleConstant, false,
                    "reproduced verbatim, not re-derived"});
    const double p = trainable.value;
    bool clamped = false;
    double tail = std::log(std::exp(1.0) * sample_size / p);
    if (tail < 0.0) {
        tail = 0.0;
        clamped = true;
    }
    rows.push_back({"capped_oracle_bound",
                    bounds::kCappedOracleConstant * score_bound * score_bound * p / sample_size *
                        tail,
                    clamped, "22132 B^2 p / n log(en/p) with p = pdim_trainable_embedding"});
    return rows;
}

void write_bound_table_csv(std::ostream& out, std::span<const BoundTableRow> rows) {
    out << "name,value,clamped,note\n";
    for (const auto& r : rows) {
        out << r.name << ',';
        format_double(out, r.value);
        out << ',' << (r.clamped ? 1 : 0) << ',' << r.note << '\n';
    }
}

void write_bound_table_text(std::ostream& out, std::span<const BoundTableRow> rows) {
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    for (const auto& r : rows) {
        out << r.name << std::string(width - r.name.size() + 2, ' ');
        format_double(out, r.value);
        if (r.clamped) out << "  [log clamped]";
        if (!r.note.empty()) out << "  # " << r.note;
        out << '\n';
    }
}

}  // namespace renki
