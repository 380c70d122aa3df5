#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "renki/matrix.hpp"
#include "renki/nn.hpp"

namespace renki {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// One (head, relation, tail) fact, with the observed value and per-sample
// noise scale when known.
struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;
    std::optional<double> label;
    std::optional<double> noise_scale;
};

struct EmbeddingTable {
    Matrix vectors;                    // N x D
    std::vector<std::uint8_t> frozen;  // per row; empty means none frozen

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t n, std::size_t dim) : vectors(n, dim), frozen(n, 0) {}
    explicit EmbeddingTable(Matrix m) : vectors(std::move(m)), frozen(vectors.rows(), 0) {}

    std::size_t count() const { return vectors.rows(); }
    std::size_t dim() const { return vectors.cols(); }
    bool is_frozen(EntityId i) const { return !frozen.empty() && frozen[static_cast<std::size_t>(i)] != 0; }
    void freeze_all() { std::fill(frozen.begin(), frozen.end(), std::uint8_t{1}); }
};

// Monotone output transform applied on top of the raw relation score.
enum class OutputTransform { Identity, Logistic };

double apply_transform(OutputTransform t, double s);
double transform_derivative(OutputTransform t, double s);  // d transform / d s

// Per-relation ReLU network over the concatenated (head, tail) embedding,
// input 2D -> output 1.
struct CnkgModel {
    std::vector<FeedForwardNet> nets;  // one per relation
    OutputTransform rho = OutputTransform::Identity;
};

// Per-relation network pair; score is the inner product of the head-net and
// tail-net outputs (both D -> D').
struct IpNkgModel {
    std::vector<FeedForwardNet> head_nets;
    std::vector<FeedForwardNet> tail_nets;
    OutputTransform rho = OutputTransform::Identity;
};

// score = -|| z_h - z_t + v_r ||^2
struct TranseModel {
    Matrix relation_vectors;  // K x D
};

// score = logistic(z_h^T diag(v_r) z_t + bias)
struct MipModel {
    Matrix relation_diagonals;  // K x D
    double bias = 0.0;
};

// score = concat(z_h, z_t) . v_r
struct ConcatLinearModel {
    Matrix relation_vectors;  // K x 2D
};

using ScoreModel = std::variant<CnkgModel, IpNkgModel, TranseModel, MipModel, ConcatLinearModel>;

int relation_count(const ScoreModel& model);
// Relation-parameter count (embeddings excluded).
std::size_t parameter_count(const ScoreModel& model);
// Checks that relation parameter shapes are mutually consistent and match
// the embedding dimension; throws ShapeError otherwise.
void validate(const ScoreModel& model, const EmbeddingTable& emb);

CnkgModel make_cnkg(int relations, std::size_t dim, std::span<const std::size_t> hidden, Rng& rng,
                    OutputTransform rho = OutputTransform::Identity);
IpNkgModel make_ipnkg(int relations, std::size_t dim, std::size_t out_dim,
                      std::span<const std::size_t> hidden, Rng& rng,
                      OutputTransform rho = OutputTransform::Identity);
TranseModel make_transe(int relations, std::size_t dim, Rng& rng);
MipModel make_mip(int relations, std::size_t dim, Rng& rng, double bias = 0.0);
ConcatLinearModel make_concat_linear(int relations, std::size_t dim, Rng& rng);

double score(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x);
std::vector<double> batch_score(const ScoreModel& model, const EmbeddingTable& emb,
                                std::span<const Triple> triples);

// Gradients of upstream * score for one triple.
struct CnkgGrad {
    GradientTape net;
};
struct IpNkgGrad {
    GradientTape head_net;
    GradientTape tail_net;
};
struct TranseGrad {
    std::vector<double> relation_vector;
};
struct MipGrad {
    std::vector<double> diagonal;
    double bias = 0.0;
};
struct ConcatLinearGrad {
    std::vector<double> relation_vector;
};
using RelationGrad = std::variant<CnkgGrad, IpNkgGrad, TranseGrad, MipGrad, ConcatLinearGrad>;

// Frozen embedding rows still get their gradient reported here; freezing
// only suppresses the *update* (see training).
struct ScoreGradients {
    RelationId relation = 0;
    std::vector<double> head;  // d / d z_head
    std::vector<double> tail;  // d / d z_tail
    RelationGrad relation_grad;
};

ScoreGradients score_gradients(const ScoreModel& model, const EmbeddingTable& emb, const Triple& x,
                               double upstream);

// Batch gradient accumulator mirroring a ScoreModel's parameter layout.
// Used by the trainer to sum per-sample gradients without per-sample
// allocation; accumulate_score_gradients shares its numeric path with
// score_gradients.
struct ModelGrads {
    Matrix emb;                       // N x D entity gradients
    std::vector<GradientTape> tapes;  // CnkgModel: K; IpNkgModel: head 0..K-1, tail K..2K-1
    Matrix vectors;                   // TransE / Mip / ConcatLinear relation rows
    double scalar = 0.0;              // Mip bias
};

ModelGrads make_grads(const ScoreModel& model, const EmbeddingTable& emb);
void zero(ModelGrads& grads);
void accumulate_score_gradients(const ScoreModel& model, const EmbeddingTable& emb,
                                const Triple& x, double upstream, ModelGrads& grads);

}  // namespace renki
