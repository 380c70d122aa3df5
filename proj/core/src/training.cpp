#include "renki/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "renki/errors.hpp"
#include "renki/rng.hpp"

namespace renki {

WeightScheme WeightScheme::uniform() {
    WeightScheme s;
    s.kind = Kind::Uniform;
    return s;
}

WeightScheme WeightScheme::inverse_variance() {
    WeightScheme s;
    s.kind = Kind::InverseVariance;
    return s;
}

WeightScheme WeightScheme::capped(double b) {
    WeightScheme s;
    s.kind = Kind::Capped;
    s.cap = b;
    // Normalizing would break the w <= 1 guarantee the capped rule exists
    // to provide.
    s.normalize_to_unit_mean = false;
    return s;
}

WeightScheme WeightScheme::relation_ratio(double lambda, std::vector<RelationId> low_noise) {
    WeightScheme s;
    s.kind = Kind::RelationRatio;
    s.lambda = lambda;
    s.low_noise_relations = std::move(low_noise);
    return s;
}

double harmonic_mean_variance(std::span<const Triple> triples) {
    if (triples.empty()) throw ConfigError("harmonic mean of an empty sample");
    double inv_sum = 0.0;
    for (const auto& t : triples) {
        if (!t.noise_scale) throw ConfigError("noise scale missing on a triple");
        const double s = *t.noise_scale;
        if (s <= 0.0) throw ConfigError("noise scale must be positive for inverse-variance");
        inv_sum += 1.0 / (s * s);
    }
    return static_cast<double>(triples.size()) / inv_sum;
}

std::vector<double> compute_weights(const WeightScheme& scheme, std::span<const Triple> triples) {
    std::vector<double> w(triples.size(), 1.0);
    switch (scheme.kind) {
        case WeightScheme::Kind::Uniform:
            break;
        case WeightScheme::Kind::InverseVariance: {
            const double sigma_h_sq = harmonic_mean_variance(triples);
            for (std::size_t i = 0; i < triples.size(); ++i) {
                const double s = *triples[i].noise_scale;
                w[i] = sigma_h_sq / (s * s);
            }
            break;
        }
        case WeightScheme::Kind::Capped: {
            if (scheme.cap <= 0.0) throw ConfigError("cap must be positive");
            const double b_sq = scheme.cap * scheme.cap;
            for (std::size_t i = 0; i < triples.size(); ++i) {
                if (!triples[i].noise_scale)
                    throw ConfigError("noise scale missing on triple " + std::to_string(i));
                const double s_sq = *triples[i].noise_scale * *triples[i].noise_scale;
                w[i] = b_sq / std::max(s_sq, b_sq);
            }
            break;
        }
        case WeightScheme::Kind::RelationRatio: {
            if (scheme.lambda <= 0.0) throw ConfigError("lambda must be positive");
            for (std::size_t i = 0; i < triples.size(); ++i) {
                const bool low = std::find(scheme.low_noise_relations.begin(),
                                           scheme.low_noise_relations.end(),
                                           triples[i].relation) != scheme.low_noise_relations.end();
                w[i] = low ? scheme.lambda : 1.0;
            }
            break;
        }
    }
    if (scheme.normalize_to_unit_mean && !w.empty()) {
        const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
        for (auto& v : w) v /= mean;
    }
    for (const auto v : w)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("weights must be positive and finite");
    return w;
}

double weighted_risk(const ScoreModel& model, const EmbeddingTable& emb,
                     std::span<const Triple> triples, std::span<const double> weights) {
    if (!weights.empty() && weights.size() != triples.size())
        throw ShapeError("weights length != triple count");
    if (triples.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (!triples[i].label) throw DataError("label missing on triple " + std::to_string(i));
        const double r = *triples[i].label - score(model, emb, triples[i]);
        sum += (weights.empty() ? 1.0 : weights[i]) * r * r;
    }
    return sum / static_cast<double>(triples.size());
}

double contrastive_loss(const ScoreModel& model, const EmbeddingTable& emb, const Triple& positive,
                        std::span<const Triple> negatives, double margin) {
    if (negatives.empty()) throw ConfigError("contrastive loss needs at least one negative");
    const double pos = score(model, emb, positive);
    double sum = 0.0;
    for (const auto& neg : negatives) sum += std::max(0.0, margin - pos + score(model, emb, neg));
    return sum / static_cast<double>(negatives.size());
}

EmbeddingTable init_embeddings(const InitStrategy& strategy, std::size_t entities, std::size_t dim,
                               std::uint64_t seed) {
    const auto check_external = [&](const Matrix& m) {
        if (m.rows() != entities || m.cols() != dim)
            throw ShapeError("external vectors are " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected " + std::to_string(entities) +
                             "x" + std::to_string(dim));
    };
    return std::visit(
        [&](const auto& s) -> EmbeddingTable {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, RandomInit>) {
                EmbeddingTable emb(entities, dim);
                Rng rng(seed);
                for (std::size_t i = 0; i < entities; ++i)
                    for (std::size_t j = 0; j < dim; ++j) emb.vectors(i, j) = s.scale * rng.normal();
                return emb;
            } else if constexpr (std::is_same_v<T, ExternalInit>) {
                check_external(s.vectors);
                return EmbeddingTable(s.vectors);
            } else if constexpr (std::is_same_v<T, ExternalFrozenInit>) {
                check_external(s.vectors);
                EmbeddingTable emb(s.vectors);
                emb.freeze_all();
                return emb;
            } else {
                check_external(s.vectors);
                EmbeddingTable emb(s.vectors);
                Rng rng(seed);
                for (std::size_t i = 0; i < entities; ++i)
                    for (std::size_t j = 0; j < dim; ++j)
                        emb.vectors(i, j) += s.noise_std * rng.normal();
                return emb;
            }
        },
        strategy);
}

void validate(const TrainConfig& config) {
    if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
    std::visit(
        [](const auto& o) {
            if (o.step <= 0.0) throw ConfigError("optimizer step must be positive");
        },
        config.optimizer);
    if (const auto* c = std::get_if<MarginContrastiveLoss>(&config.loss)) {
        if (c->margin <= 0.0) throw ConfigError("margin must be positive");
        if (c->negatives_per_positive < 1) throw ConfigError("need at least one negative per positive");
    }
}

namespace {

// Flat view over every trainable array of (embedding + model), with the
// matching gradient array from ModelGrads. Masks mark non-trainable entries.
struct Block {
    double* param = nullptr;
    const double* grad = nullptr;
    std::size_t size = 0;
    const double* mask = nullptr;  // optional, 1 = trainable
};

std::vector<Block> collect_blocks(ScoreModel& model, EmbeddingTable& emb, ModelGrads& grads) {
    std::vector<Block> blocks;
    blocks.push_back({emb.vectors.data(), grads.emb.data(), emb.vectors.size(), nullptr});

    const auto add_net = [&](FeedForwardNet& net, GradientTape& tape) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            auto& layer = net.layers[l];
            blocks.push_back({layer.weights.data(), tape.weight_grads[l].data(),
                              layer.weights.size(),
                              layer.weight_mask.empty() ? nullptr : layer.weight_mask.data()});
            blocks.push_back({layer.bias.data(), tape.bias_grads[l].data(), layer.bias.size(),
                              layer.bias_mask.empty() ? nullptr : layer.bias_mask.data()});
        }
    };

    std::visit(
        [&](auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, CnkgModel>) {
                for (std::size_t k = 0; k < m.nets.size(); ++k) add_net(m.nets[k], grads.tapes[k]);
            } else if constexpr (std::is_same_v<T, IpNkgModel>) {
                const std::size_t kk = m.head_nets.size();
                for (std::size_t k = 0; k < kk; ++k) add_net(m.head_nets[k], grads.tapes[k]);
                for (std::size_t k = 0; k < kk; ++k) add_net(m.tail_nets[k], grads.tapes[kk + k]);
            } else if constexpr (std::is_same_v<T, TranseModel>) {
                blocks.push_back({m.relation_vectors.data(), grads.vectors.data(),
                                  m.relation_vectors.size(), nullptr});
            } else if constexpr (std::is_same_v<T, MipModel>) {
                blocks.push_back({m.relation_diagonals.data(), grads.vectors.data(),
                                  m.relation_diagonals.size(), nullptr});
                blocks.push_back({&m.bias, &grads.scalar, 1, nullptr});
            } else {
                blocks.push_back({m.relation_vectors.data(), grads.vectors.data(),
                                  m.relation_vectors.size(), nullptr});
            }
        },
        model);
    return blocks;
}

class Optimizer {
  public:
    Optimizer(const OptimizerConfig& config, const std::vector<Block>& blocks,
              const EmbeddingTable& emb)
        : config_(config) {
        state_.resize(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            state_[b].first.assign(blocks[b].size, 0.0);
            if (std::holds_alternative<AdamConfig>(config))
                state_[b].second.assign(blocks[b].size, 0.0);
        }
        // Block 0 is the embedding table; frozen rows never move.
        frozen_ = &emb.frozen;
        emb_dim_ = emb.dim();
    }

    void step(std::vector<Block>& blocks) {
        ++t_;
        for (std::size_t b = 0; b < blocks.size(); ++b) update_block(blocks[b], b);
    }

  private:
    bool skip(const Block& block, std::size_t b, std::size_t i) const {
        if (block.mask && block.mask[i] == 0.0) return true;
        if (b == 0 && !frozen_->empty() && (*frozen_)[i / emb_dim_] != 0) return true;
        return false;
    }

    void update_block(Block& block, std::size_t b) {
        if (const auto* sgd = std::get_if<SgdConfig>(&config_)) {
            auto& vel = state_[b].first;
            for (std::size_t i = 0; i < block.size; ++i) {
                if (skip(block, b, i)) continue;
                vel[i] = sgd->momentum * vel[i] + block.grad[i];
                block.param[i] -= sgd->step * vel[i];
            }
        } else {
            const auto& adam = std::get<AdamConfig>(config_);
            auto& m = state_[b].first;
            auto& v = state_[b].second;
            const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < block.size; ++i) {
                if (skip(block, b, i)) continue;
                const double g = block.grad[i];
                m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g;
                v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g * g;
                block.param[i] -= adam.step * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam.epsilon);
            }
        }
    }

    OptimizerConfig config_;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> state_;
    const std::vector<std::uint8_t>* frozen_ = nullptr;
    std::size_t emb_dim_ = 1;
    long t_ = 0;
};

Triple corrupt_uniform(const Triple& x, std::size_t entities, Rng& rng) {
    Triple neg = x;
    const auto e = static_cast<EntityId>(rng.below(entities));
    if (rng.coin())
        neg.head = e;
    else
        neg.tail = e;
    return neg;
}

}  // namespace

TrainReport train(ScoreModel& model, EmbeddingTable& emb, std::span<const Triple> triples,
                  const TrainConfig& config) {
    return train(model, emb, triples, std::span<const double>{}, config);
}

TrainReport train(ScoreModel& model, EmbeddingTable& emb, std::span<const Triple> triples,
                  std::span<const double> weights, const TrainConfig& config) {
    validate(config);
    validate(model, emb);
    if (triples.empty()) throw ConfigError("training data is empty");
    if (!weights.empty() && weights.size() != triples.size())
        throw ShapeError("weights length != triple count");

    const bool contrastive = std::holds_alternative<MarginContrastiveLoss>(config.loss);
    const MarginContrastiveLoss contrastive_cfg =
        contrastive ? std::get<MarginContrastiveLoss>(config.loss) : MarginContrastiveLoss{};
    if (!contrastive)
        for (std::size_t i = 0; i < triples.size(); ++i)
            if (!triples[i].label) throw DataError("label missing on triple " + std::to_string(i));

    ModelGrads grads = make_grads(model, emb);
    std::vector<Block> blocks = collect_blocks(model, emb, grads);
    Optimizer opt(config.optimizer, blocks, emb);
    Rng rng(config.seed);

    // Fixed negatives for evaluating the contrastive loss, so the per-epoch
    // trace is comparable across epochs.
    std::vector<Triple> eval_negatives;
    if (contrastive) {
        Rng eval_rng(derive_seed(config.seed, 0x45564Cu));  // eval stream
        eval_negatives.reserve(triples.size() * contrastive_cfg.negatives_per_positive);
        for (const auto& x : triples)
            for (int j = 0; j < contrastive_cfg.negatives_per_positive; ++j)
                eval_negatives.push_back(corrupt_uniform(x, emb.count(), eval_rng));
    }

    const auto full_loss = [&]() -> double {
        if (!contrastive) return weighted_risk(model, emb, triples, weights);
        double sum = 0.0;
        const int m = contrastive_cfg.negatives_per_positive;
        for (std::size_t i = 0; i < triples.size(); ++i) {
            const std::span<const Triple> negs(eval_negatives.data() + i * m,
                                               static_cast<std::size_t>(m));
            sum += contrastive_loss(model, emb, triples[i], negs, contrastive_cfg.margin);
        }
        return sum / static_cast<double>(triples.size());
    };

    TrainReport report;
    report.initial_loss = full_loss();
    report.loss_trace.push_back(report.initial_loss);
    double best = report.initial_loss;

    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        // Fisher-Yates reshuffle per epoch: without-replacement passes.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv_m = 1.0 / static_cast<double>(end - start);
            zero(grads);
            for (std::size_t p = start; p < end; ++p) {
                const Triple& x = triples[order[p]];
                if (!contrastive) {
                    const double w = weights.empty() ? 1.0 : weights[order[p]];
                    const double f = score(model, emb, x);
                    const double upstream = -2.0 * w * (*x.label - f) * inv_m;
                    accumulate_score_gradients(model, emb, x, upstream, grads);
                } else {
                    const int m = contrastive_cfg.negatives_per_positive;
                    const double inv = inv_m / static_cast<double>(m);
                    const double pos = score(model, emb, x);
                    double pos_upstream = 0.0;
                    for (int j = 0; j < m; ++j) {
                        const Triple neg = corrupt_uniform(x, emb.count(), rng);
                        const double s = score(model, emb, neg);
                        if (contrastive_cfg.margin - pos + s > 0.0) {
                            pos_upstream -= inv;
                            accumulate_score_gradients(model, emb, neg, inv, grads);
                        }
                    }
                    if (pos_upstream != 0.0)
                        accumulate_score_gradients(model, emb, x, pos_upstream, grads);
                }
            }
            opt.step(blocks);
        }

        const double loss = full_loss();
        if (!std::isfinite(loss))
            throw TrainingDivergedError(epoch, "loss became non-finite at epoch " +
                                                   std::to_string(epoch));
        report.loss_trace.push_back(loss);
        best = std::min(best, loss);
        report.epochs_run = epoch;
    }

    report.final_loss = report.loss_trace.back();
    report.best_loss = best;
    report.delta_opt = report.final_loss - best;
    return report;
}

}  // namespace renki
