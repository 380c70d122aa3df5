#include <doctest.h>

#include <cmath>

#include "helpers/oracles.hpp"
#include "renki/errors.hpp"
#include "renki/kg.hpp"

using namespace renki;

namespace {

EmbeddingTable table_from_rows(const std::vector<std::vector<double>>& rows) {
    EmbeddingTable emb(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) emb.vectors(i, j) = rows[i][j];
    return emb;
}

Triple triple(EntityId h, RelationId r, EntityId t) {
    Triple x;
    x.head = h;
    x.relation = r;
    x.tail = t;
    return x;
}

ScoreModel random_model(const std::string& kind, int relations, std::size_t dim, Rng& rng) {
    const std::vector<std::size_t> hidden{5, 4};
    if (kind == "cnkg") return make_cnkg(relations, dim, hidden, rng);
    if (kind == "cnkg_logistic")
        return make_cnkg(relations, dim, hidden, rng, OutputTransform::Logistic);
    if (kind == "ipnkg") return make_ipnkg(relations, dim, 0, hidden, rng);
    if (kind == "transe") return make_transe(relations, dim, rng);
    if (kind == "mip") return make_mip(relations, dim, rng, 0.4);
    return make_concat_linear(relations, dim, rng);
}

}  // namespace

TEST_CASE("score: concat-linear dot product") {
    const auto emb = table_from_rows({{1.0, 0.0}, {0.0, 1.0}});
    ConcatLinearModel m;
    m.relation_vectors = Matrix(1, 4, 1.0);
    CHECK(score(m, emb, triple(0, 0, 1)) == 2.0);
}

TEST_CASE("score: translation with zero offset") {
    const auto emb = table_from_rows({{0.7, -0.3}, {0.7, -0.3}});
    TranseModel m;
    m.relation_vectors = Matrix(1, 2, 0.0);
    CHECK(score(m, emb, triple(0, 0, 1)) == 0.0);
}

TEST_CASE("score: diagonal inner product with logistic link") {
    const auto emb = table_from_rows({{1.0, 2.0}, {1.0, 1.0}});
    MipModel m;
    m.relation_diagonals = Matrix(1, 2, 1.0);
    m.bias = 0.0;
    const double expected = 1.0 / (1.0 + std::exp(-3.0));
    CHECK(score(m, emb, triple(0, 0, 1)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(score(m, emb, triple(0, 0, 1)) == doctest::Approx(0.95257).epsilon(1e-4));
}

TEST_CASE("score: index out of bounds") {
    const auto emb = table_from_rows({{1.0, 0.0}, {0.0, 1.0}});
    ConcatLinearModel m;
    m.relation_vectors = Matrix(1, 4, 1.0);
    CHECK_THROWS_AS(score(m, emb, triple(0, 0, 2)), DataError);
    CHECK_THROWS_AS(score(m, emb, triple(-1, 0, 1)), DataError);
    CHECK_THROWS_AS(score(m, emb, triple(0, 1, 1)), DataError);
}

TEST_CASE("gradients: translation closed form") {
    const auto emb = table_from_rows({{1.0, 0.0}, {0.0, 0.0}});
    TranseModel m;
    m.relation_vectors = Matrix(1, 2, 0.0);
    const auto g = score_gradients(m, emb, triple(0, 0, 1), 1.0);
    CHECK(g.head == std::vector<double>{-2.0, 0.0});
    CHECK(g.tail == std::vector<double>{2.0, 0.0});
    CHECK(std::get<TranseGrad>(g.relation_grad).relation_vector ==
          std::vector<double>{-2.0, 0.0});
}

TEST_CASE("gradients: zero upstream zeroes everything, all variants") {
    Rng rng(31);
    const std::size_t dim = 3;
    EmbeddingTable emb(4, dim);
    for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
    for (const char* kind : {"cnkg", "ipnkg", "transe", "mip", "concat"}) {
        const ScoreModel model = random_model(kind, 2, dim, rng);
        const auto g = score_gradients(model, emb, triple(1, 1, 3), 0.0);
        for (const double v : g.head) CHECK(v == 0.0);
        for (const double v : g.tail) CHECK(v == 0.0);
    }
}

TEST_CASE("gradients: finite differences across variants") {
    Rng rng(97);
    const std::size_t dim = 3;
    for (const char* kind : {"cnkg", "cnkg_logistic", "ipnkg", "transe", "mip", "concat"}) {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            EmbeddingTable emb(5, dim);
            for (std::size_t i = 0; i < emb.vectors.size(); ++i)
                emb.vectors.data()[i] = rng.normal();
            const ScoreModel model = random_model(kind, 2, dim, rng);
            const auto h = static_cast<EntityId>(rng.below(5));
            const auto t = static_cast<EntityId>(rng.below(5));  // head == tail happens
            const auto r = static_cast<RelationId>(rng.below(2));
            worst = std::max(worst,
                             oracles::score_fd_max_err(model, emb, triple(h, r, t), 1.7));
        }
        INFO("variant ", kind);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradients: frozen rows still report") {
    Rng rng(3);
    auto emb = table_from_rows({{1.0, 0.0}, {0.0, 0.0}});
    emb.freeze_all();
    TranseModel m;
    m.relation_vectors = Matrix(1, 2, 0.0);
    const auto g = score_gradients(m, emb, triple(0, 0, 1), 1.0);
    CHECK(g.head == std::vector<double>{-2.0, 0.0});
}

TEST_CASE("batch_score") {
    Rng rng(8);
    const std::size_t dim = 4;
    EmbeddingTable emb(6, dim);
    for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
    const ScoreModel model = make_cnkg(3, dim, std::vector<std::size_t>{5}, rng);

    CHECK(batch_score(model, emb, std::vector<Triple>{}).empty());

    const Triple one = triple(2, 1, 4);
    CHECK(batch_score(model, emb, std::vector<Triple>{one}) ==
          std::vector<double>{score(model, emb, one)});

    std::vector<Triple> many;
    for (int i = 0; i < 100; ++i)
        many.push_back(triple(static_cast<EntityId>(rng.below(6)),
                              static_cast<RelationId>(rng.below(3)),
                              static_cast<EntityId>(rng.below(6))));
    const auto batched = batch_score(model, emb, many);
    for (std::size_t i = 0; i < many.size(); ++i)
        CHECK(batched[i] == score(model, emb, many[i]));
}

TEST_CASE("property: translation scores ignore a global embedding shift") {
    Rng rng(55);
    const std::size_t dim = 6;
    EmbeddingTable emb(8, dim);
    for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
    TranseModel m = make_transe(3, dim, rng);

    EmbeddingTable shifted = emb;
    std::vector<double> c(dim);
    for (auto& v : c) v = rng.normal();
    for (std::size_t i = 0; i < shifted.count(); ++i)
        for (std::size_t j = 0; j < dim; ++j) shifted.vectors(i, j) += c[j];

    for (int trial = 0; trial < 50; ++trial) {
        const auto x = triple(static_cast<EntityId>(rng.below(8)),
                              static_cast<RelationId>(rng.below(3)),
                              static_cast<EntityId>(rng.below(8)));
        CHECK(std::abs(score(m, emb, x) - score(m, shifted, x)) < 1e-9);
    }
}

TEST_CASE("property: shared-network inner product model is symmetric") {
    Rng rng(21);
    const std::size_t dim = 4;
    EmbeddingTable emb(6, dim);
    for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
    IpNkgModel m = make_ipnkg(2, dim, 0, std::vector<std::size_t>{5}, rng);
    m.tail_nets = m.head_nets;  // g == g'
    for (int trial = 0; trial < 30; ++trial) {
        const auto h = static_cast<EntityId>(rng.below(6));
        const auto t = static_cast<EntityId>(rng.below(6));
        const auto r = static_cast<RelationId>(rng.below(2));
        CHECK(score(ScoreModel{m}, emb, triple(h, r, t)) ==
              score(ScoreModel{m}, emb, triple(t, r, h)));
    }
}

TEST_CASE("property: concat network with zero biases is positively homogeneous") {
    Rng rng(77);
    const std::size_t dim = 3;
    CnkgModel m = make_cnkg(1, dim, std::vector<std::size_t>{6}, rng);
    for (auto& layer : m.nets[0].layers) std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    for (int trial = 0; trial < 10; ++trial) {
        EmbeddingTable emb(2, dim);
        for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
        for (const double alpha : {0.0, 0.5, 3.0}) {
            EmbeddingTable scaled = emb;
            for (std::size_t i = 0; i < scaled.vectors.size(); ++i)
                scaled.vectors.data()[i] *= alpha;
            const double lhs = score(ScoreModel{m}, scaled, triple(0, 0, 1));
            const double rhs = alpha * score(ScoreModel{m}, emb, triple(0, 0, 1));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("property: one hidden layer of width 4D reproduces any concat-linear model") {
    // x = relu(x) - relu(-x) per coordinate; the output layer re-applies the
    // linear weights with signs.
    Rng rng(13);
    const std::size_t dim = 5;
    const int relations = 2;
    ConcatLinearModel lin = make_concat_linear(relations, dim, rng);

    CnkgModel net_model;
    for (int k = 0; k < relations; ++k) {
        const std::size_t in = 2 * dim;
        DenseLayer hidden;
        hidden.weights = Matrix(in, 2 * in);
        hidden.bias.assign(2 * in, 0.0);
        hidden.relu = true;
        for (std::size_t i = 0; i < in; ++i) {
            hidden.weights(i, i) = 1.0;
            hidden.weights(i, in + i) = -1.0;
        }
        DenseLayer out;
        out.weights = Matrix(2 * in, 1);
        out.bias.assign(1, 0.0);
        out.relu = false;
        for (std::size_t i = 0; i < in; ++i) {
            out.weights(i, 0) = lin.relation_vectors(static_cast<std::size_t>(k), i);
            out.weights(in + i, 0) = -lin.relation_vectors(static_cast<std::size_t>(k), i);
        }
        FeedForwardNet net;
        net.layers.push_back(std::move(hidden));
        net.layers.push_back(std::move(out));
        net_model.nets.push_back(std::move(net));
    }

    for (int trial = 0; trial < 50; ++trial) {
        EmbeddingTable emb(4, dim);
        for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
        const auto x = triple(static_cast<EntityId>(rng.below(4)),
                              static_cast<RelationId>(rng.below(2)),
                              static_cast<EntityId>(rng.below(4)));
        CHECK(std::abs(score(ScoreModel{net_model}, emb, x) - score(ScoreModel{lin}, emb, x)) <
              1e-9);
    }
}

TEST_CASE("batch accumulation matches per-sample gradients") {
    Rng rng(101);
    const std::size_t dim = 3;
    for (const char* kind : {"cnkg", "ipnkg", "transe", "mip", "concat"}) {
        EmbeddingTable emb(5, dim);
        for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
        const ScoreModel model = random_model(kind, 2, dim, rng);

        std::vector<Triple> batch;
        std::vector<double> upstreams;
        for (int i = 0; i < 12; ++i) {
            batch.push_back(triple(static_cast<EntityId>(rng.below(5)),
                                   static_cast<RelationId>(rng.below(2)),
                                   static_cast<EntityId>(rng.below(5))));
            upstreams.push_back(rng.normal());
        }

        ModelGrads acc = make_grads(model, emb);
        zero(acc);
        Matrix expected_emb(emb.count(), dim);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            accumulate_score_gradients(model, emb, batch[i], upstreams[i], acc);
            const auto g = score_gradients(model, emb, batch[i], upstreams[i]);
            for (std::size_t j = 0; j < dim; ++j) {
                expected_emb(static_cast<std::size_t>(batch[i].head), j) += g.head[j];
                expected_emb(static_cast<std::size_t>(batch[i].tail), j) += g.tail[j];
            }
        }
        INFO("variant ", kind);
        for (std::size_t i = 0; i < expected_emb.size(); ++i)
            CHECK(acc.emb.data()[i] == doctest::Approx(expected_emb.data()[i]).epsilon(1e-12));
    }
}
