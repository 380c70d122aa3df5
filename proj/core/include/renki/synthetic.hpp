#pragma once

#include <cstdint>
#include <vector>

#include "renki/kg.hpp"

namespace renki {

enum class TruthKind { ConcatLinear, VectorOffset, Logistic, Mip };

const char* to_string(TruthKind k);
TruthKind truth_kind_from_string(const std::string& s);

// Recipe for a synthetic knowledge graph. noise_stds applies to the
// regression variants (one value drawn uniformly per sample); bias to the
// binary variants, where it controls graph sparsity.
struct GeneratorSpec {
    TruthKind kind = TruthKind::ConcatLinear;
    int entities = 100;   // N
    int dim = 10;         // d
    int relations = 5;    // K
    std::vector<double> noise_stds = {1.0, 5.0};
    double bias = -3.0;
    std::uint64_t seed = 0;
};

// Ground-truth parameters plus the score oracle gamma. Embeddings are i.i.d.
// standard normal rows; relation parameters are standard normal of the
// dimension the variant requires (2d for ConcatLinear/Logistic, d for
// VectorOffset and the Mip diagonal).
struct GroundTruth {
    TruthKind kind = TruthKind::ConcatLinear;
    int entities = 0;
    int dim = 0;
    int relations = 0;
    double bias = 0.0;
    Matrix embeddings;       // N x d
    Matrix relation_params;  // K x (2d or d)

    double gamma(EntityId head, RelationId relation, EntityId tail) const;
    double gamma(const Triple& x) const { return gamma(x.head, x.relation, x.tail); }
};

struct SyntheticDataset {
    std::vector<Triple> triples;
    GroundTruth truth;
};

GroundTruth build_truth(const GeneratorSpec& spec);

// n triples uniform over [N] x [K] x [N] with y = gamma + Gaussian noise;
// the drawn noise std is stored on each triple. `sample_stream` selects an
// independent draw with the same truth (fresh test sets).
SyntheticDataset sample_regression(const GeneratorSpec& spec, std::size_t n,
                                   std::uint64_t sample_stream = 0);

// Walks every candidate triple once, draws y ~ Bernoulli(gamma), and keeps
// the positives, up to max_n.
SyntheticDataset sample_binary_positive_only(const GeneratorSpec& spec, std::size_t max_n);

std::vector<Triple> sample_uniform_triples(int entities, int relations, std::size_t n, Rng& rng);

}  // namespace renki
