#include <doctest.h>

#include <cmath>

#include "renki/errors.hpp"
#include "renki/synthetic.hpp"
#include "renki/training.hpp"

using namespace renki;

TEST_CASE("truth: vector offset with equal rows and zero offset") {
    GroundTruth t;
    t.kind = TruthKind::VectorOffset;
    t.entities = 2;
    t.dim = 3;
    t.relations = 1;
    t.embeddings = Matrix(2, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        t.embeddings(0, j) = 0.4 * static_cast<double>(j);
        t.embeddings(1, j) = 0.4 * static_cast<double>(j);
    }
    t.relation_params = Matrix(1, 3, 0.0);
    CHECK(t.gamma(0, 0, 1) == 0.0);
}

TEST_CASE("truth: concat linear closed form") {
    GroundTruth t;
    t.kind = TruthKind::ConcatLinear;
    t.entities = 2;
    t.dim = 2;
    t.relations = 1;
    t.embeddings = Matrix(2, 2);
    t.embeddings(0, 0) = 1.0;
    t.embeddings(1, 1) = 1.0;
    t.relation_params = Matrix(1, 4, 1.0);
    CHECK(t.gamma(0, 0, 1) == 2.0);
}

TEST_CASE("truth: logistic graphs empty out as the bias drops") {
    GeneratorSpec spec;
    spec.kind = TruthKind::Logistic;
    spec.entities = 6;
    spec.dim = 2;
    spec.relations = 2;
    spec.seed = 2024;

    double prev_max = 1.0;
    for (const double bias : {-4.0, -7.0, -10.0}) {
        spec.bias = bias;
        const GroundTruth truth = build_truth(spec);
        double max_gamma = 0.0;
        Rng rng(77);
        for (int i = 0; i < 10000; ++i) {
            const auto h = static_cast<EntityId>(rng.below(6));
            const auto r = static_cast<RelationId>(rng.below(2));
            const auto t = static_cast<EntityId>(rng.below(6));
            max_gamma = std::max(max_gamma, truth.gamma(h, r, t));
        }
        CHECK(max_gamma < prev_max);
        prev_max = max_gamma;
        if (bias == -10.0) CHECK(max_gamma < 1e-3);
    }
}

TEST_CASE("truth: embeddings come from the spec seed, samples from the stream") {
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 10;
    spec.dim = 3;
    spec.relations = 2;
    spec.seed = 31;
    const auto a = build_truth(spec);
    const auto ds = sample_regression(spec, 50, 0);
    CHECK(a.embeddings == ds.truth.embeddings);
    CHECK(a.relation_params == ds.truth.relation_params);

    const auto fresh = sample_regression(spec, 50, 1);
    CHECK(fresh.truth.embeddings == a.embeddings);
    bool same_labels = true;
    for (std::size_t i = 0; i < 50; ++i)
        if (*fresh.triples[i].label != *ds.triples[i].label ||
            fresh.triples[i].head != ds.triples[i].head)
            same_labels = false;
    CHECK_FALSE(same_labels);
}

TEST_CASE("regression samples: noiseless labels equal the oracle") {
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 20;
    spec.dim = 4;
    spec.relations = 3;
    spec.noise_stds = {0.0};
    spec.seed = 5;
    const auto ds = sample_regression(spec, 500, 0);
    for (const auto& t : ds.triples) {
        CHECK(*t.label == ds.truth.gamma(t));
        CHECK(*t.noise_scale == 0.0);
    }
}

TEST_CASE("regression samples: noise levels are drawn uniformly") {
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 10;
    spec.dim = 2;
    spec.relations = 2;
    spec.noise_stds = {1.0, 5.0};
    spec.seed = 7;
    const auto ds = sample_regression(spec, 100000, 0);
    std::size_t ones = 0;
    for (const auto& t : ds.triples) ones += (*t.noise_scale == 1.0) ? 1 : 0;
    const double frac = static_cast<double>(ones) / 100000.0;
    CHECK(frac > 0.495);
    CHECK(frac < 0.505);
}

TEST_CASE("regression samples: empirical mean concentrates on gamma") {
    // a 1-entity 1-relation graph has a single possible triple
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 1;
    spec.dim = 3;
    spec.relations = 1;
    spec.noise_stds = {1.0};
    spec.seed = 11;
    const auto ds = sample_regression(spec, 100000, 0);
    const double gamma = ds.truth.gamma(0, 0, 0);
    double mean = 0.0;
    for (const auto& t : ds.triples) mean += *t.label;
    mean /= static_cast<double>(ds.triples.size());
    CHECK(std::abs(mean - gamma) < 0.01);  // 2.58 / sqrt(n) = 0.0082
}

TEST_CASE("binary samples: degenerate gammas") {
    GeneratorSpec spec;
    spec.kind = TruthKind::Logistic;
    spec.entities = 2;
    spec.dim = 2;
    spec.relations = 1;
    spec.seed = 3;

    spec.bias = -1000.0;  // gamma underflows to exactly 0
    CHECK(sample_binary_positive_only(spec, 100).triples.empty());

    spec.bias = 1000.0;  // gamma saturates to exactly 1 on a 2x1x2 graph
    const auto ds = sample_binary_positive_only(spec, 100);
    CHECK(ds.triples.size() == 4);
    for (const auto& t : ds.triples) CHECK(*t.label == 1.0);
}

TEST_CASE("binary samples: retained fraction tracks the mean gamma") {
    GeneratorSpec spec;
    spec.kind = TruthKind::Logistic;
    spec.entities = 100;
    spec.dim = 10;
    spec.relations = 3;
    spec.bias = -3.0;
    spec.seed = 17;
    const GroundTruth truth = build_truth(spec);

    double sum = 0.0, var = 0.0;
    for (EntityId h = 0; h < 100; ++h)
        for (RelationId k = 0; k < 3; ++k)
            for (EntityId t = 0; t < 100; ++t) {
                const double p = truth.gamma(h, k, t);
                sum += p;
                var += p * (1.0 - p);
            }
    const auto ds = sample_binary_positive_only(spec, 1u << 20);
    const double count = static_cast<double>(ds.triples.size());
    CHECK(std::abs(count - sum) <= 3.0 * std::sqrt(var));
}

TEST_CASE("binary samples: truncation stops at max_n") {
    GeneratorSpec spec;
    spec.kind = TruthKind::Logistic;
    spec.entities = 4;
    spec.dim = 2;
    spec.relations = 1;
    spec.bias = 1000.0;
    spec.seed = 3;
    CHECK(sample_binary_positive_only(spec, 5).triples.size() == 5);
}

TEST_CASE("variant preconditions") {
    GeneratorSpec spec;
    spec.kind = TruthKind::Logistic;
    CHECK_THROWS_AS(sample_regression(spec, 10, 0), ConfigError);
    spec.kind = TruthKind::ConcatLinear;
    CHECK_THROWS_AS(sample_binary_positive_only(spec, 10), ConfigError);
}

TEST_CASE("reproducibility: identical spec and seed give identical datasets") {
    GeneratorSpec spec;
    spec.kind = TruthKind::VectorOffset;
    spec.entities = 15;
    spec.dim = 4;
    spec.relations = 2;
    spec.seed = 123;
    const auto a = sample_regression(spec, 300, 0);
    const auto b = sample_regression(spec, 300, 0);
    REQUIRE(a.triples.size() == b.triples.size());
    for (std::size_t i = 0; i < a.triples.size(); ++i) {
        CHECK(a.triples[i].head == b.triples[i].head);
        CHECK(a.triples[i].relation == b.triples[i].relation);
        CHECK(a.triples[i].tail == b.triples[i].tail);
        CHECK(*a.triples[i].label == *b.triples[i].label);
        CHECK(*a.triples[i].noise_scale == *b.triples[i].noise_scale);
    }
}

TEST_CASE("misspecification: offset truths are not representable but widen well") {
    // noiseless vector-offset data: the concat network cannot drive the risk
    // to zero, and wider networks fit closer on average
    const int seeds = 5;
    double narrow_sum = 0.0, wide_sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        GeneratorSpec spec;
        spec.kind = TruthKind::VectorOffset;
        spec.entities = 30;
        spec.dim = 5;
        spec.relations = 2;
        spec.noise_stds = {0.0};
        spec.seed = static_cast<std::uint64_t>(40 + s);
        const auto data = sample_regression(spec, 1500, 0);

        for (const std::size_t width : {std::size_t{32}, std::size_t{256}}) {
            Rng rng(static_cast<std::uint64_t>(100 + s));
            ScoreModel model =
                make_cnkg(spec.relations, spec.dim, std::vector<std::size_t>{width}, rng);
            EmbeddingTable emb = init_embeddings(ExternalFrozenInit{data.truth.embeddings},
                                                 spec.entities, spec.dim, 0);
            TrainConfig cfg;
            cfg.optimizer = AdamConfig{0.01, 0.9, 0.999, 1e-8};
            cfg.epochs = 60;
            cfg.batch_size = 100;
            cfg.seed = static_cast<std::uint64_t>(s);
            const auto report = train(model, emb, data.triples, cfg);
            CHECK(report.final_loss > 1e-8);
            (width == 32 ? narrow_sum : wide_sum) += report.final_loss;
        }
    }
    CHECK(wide_sum / seeds < narrow_sum / seeds);
}
