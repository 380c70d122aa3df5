#include "renki/synthetic.hpp"

#include <cmath>
#include <string>

#include "renki/errors.hpp"
#include "renki/rng.hpp"

namespace renki {

namespace {
// Sub-streams of GeneratorSpec::seed so that build_truth(spec) and the
// samplers agree on the truth while fresh sample draws stay independent.
constexpr std::uint64_t kTruthStream = 0x54525554;   // "TRUT"
constexpr std::uint64_t kSampleStream = 0x53414D50;  // "SAMP"
}  // namespace

const char* to_string(TruthKind k) {
    switch (k) {
        case TruthKind::ConcatLinear: return "concat_linear";
        case TruthKind::VectorOffset: return "vector_offset";
        case TruthKind::Logistic: return "logistic";
        case TruthKind::Mip: return "mip";
    }
    return "unknown";
}

TruthKind truth_kind_from_string(const std::string& s) {
    if (s == "concat_linear") return TruthKind::ConcatLinear;
    if (s == "vector_offset") return TruthKind::VectorOffset;
    if (s == "logistic") return TruthKind::Logistic;
    if (s == "mip") return TruthKind::Mip;
    throw ConfigError("unknown generator kind: " + s);
}

double GroundTruth::gamma(EntityId head, RelationId relation, EntityId tail) const {
    const auto zh = embeddings.row(static_cast<std::size_t>(head));
    const auto zt = embeddings.row(static_cast<std::size_t>(tail));
    const auto v = relation_params.row(static_cast<std::size_t>(relation));
    const auto d = static_cast<std::size_t>(dim);
    switch (kind) {
        case TruthKind::ConcatLinear: {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += v[j] * zh[j] + v[d + j] * zt[j];
            return s;
        }
        case TruthKind::VectorOffset: {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double u = zh[j] - zt[j] + v[j];
                s += u * u;
            }
            return -s;
        }
        case TruthKind::Logistic: {
            double s = bias;
            for (std::size_t j = 0; j < d; ++j) s += v[j] * zh[j] + v[d + j] * zt[j];
            return apply_transform(OutputTransform::Logistic, s);
        }
        case TruthKind::Mip: {
            double s = bias;
            for (std::size_t j = 0; j < d; ++j) s += v[j] * zh[j] * zt[j];
            return apply_transform(OutputTransform::Logistic, s);
        }
    }
    return 0.0;
}

GroundTruth build_truth(const GeneratorSpec& spec) {
    if (spec.entities < 1 || spec.dim < 1 || spec.relations < 1)
        throw ConfigError("generator needs N, d, K >= 1");
    GroundTruth truth;
    truth.kind = spec.kind;
    truth.entities = spec.entities;
    truth.dim = spec.dim;
    truth.relations = spec.relations;
    truth.bias = (spec.kind == TruthKind::Logistic || spec.kind == TruthKind::Mip) ? spec.bias : 0.0;

    Rng rng(derive_seed(spec.seed, kTruthStream));
    truth.embeddings = Matrix(spec.entities, spec.dim);
    for (std::size_t i = 0; i < truth.embeddings.rows(); ++i)
        for (std::size_t j = 0; j < truth.embeddings.cols(); ++j)
            truth.embeddings(i, j) = rng.normal();

    const std::size_t rel_dim =
        (spec.kind == TruthKind::ConcatLinear || spec.kind == TruthKind::Logistic)
            ? 2 * static_cast<std::size_t>(spec.dim)
            : static_cast<std::size_t>(spec.dim);
    truth.relation_params = Matrix(spec.relations, rel_dim);
    for (std::size_t i = 0; i < truth.relation_params.rows(); ++i)
        for (std::size_t j = 0; j < rel_dim; ++j) truth.relation_params(i, j) = rng.normal();
    return truth;
}

std::vector<Triple> sample_uniform_triples(int entities, int relations, std::size_t n, Rng& rng) {
    std::vector<Triple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Triple t;
        t.head = static_cast<EntityId>(rng.below(static_cast<std::uint64_t>(entities)));
        t.relation = static_cast<RelationId>(rng.below(static_cast<std::uint64_t>(relations)));
        t.tail = static_cast<EntityId>(rng.below(static_cast<std::uint64_t>(entities)));
        out.push_back(t);
    }
    return out;
}

SyntheticDataset sample_regression(const GeneratorSpec& spec, std::size_t n,
                                   std::uint64_t sample_stream) {
    if (spec.kind != TruthKind::ConcatLinear && spec.kind != TruthKind::VectorOffset)
        throw ConfigError("sample_regression requires a regression variant");
    if (spec.noise_stds.empty()) throw ConfigError("noise_stds must be nonempty");
    for (const double s : spec.noise_stds)
        if (s < 0.0) throw ConfigError("noise stds must be nonnegative");

    SyntheticDataset ds;
    ds.truth = build_truth(spec);
    Rng rng(derive_seed(spec.seed, kSampleStream + sample_stream));
    ds.triples = sample_uniform_triples(spec.entities, spec.relations, n, rng);
    for (auto& t : ds.triples) {
        const double sigma = spec.noise_stds[rng.below(spec.noise_stds.size())];
        t.noise_scale = sigma;
        t.label = ds.truth.gamma(t) + sigma * rng.normal();
    }
    return ds;
}

SyntheticDataset sample_binary_positive_only(const GeneratorSpec& spec, std::size_t max_n) {
    if (spec.kind != TruthKind::Logistic && spec.kind != TruthKind::Mip)
        throw ConfigError("sample_binary_positive_only requires a binary variant");

    SyntheticDataset ds;
    ds.truth = build_truth(spec);
    Rng rng(derive_seed(spec.seed, kSampleStream));
    for (EntityId h = 0; h < spec.entities && ds.triples.size() < max_n; ++h) {
        for (RelationId k = 0; k < spec.relations && ds.triples.size() < max_n; ++k) {
            for (EntityId t = 0; t < spec.entities && ds.triples.size() < max_n; ++t) {
                const double p = ds.truth.gamma(h, k, t);
                if (rng.uniform() < p) {
                    Triple x;
                    x.head = h;
                    x.relation = k;
                    x.tail = t;
                    x.label = 1.0;
                    ds.triples.push_back(x);
                }
            }
        }
    }
    return ds;
}

}  // namespace renki
