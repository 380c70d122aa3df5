#include <benchmark/benchmark.h>

#include "renki/metrics.hpp"
#include "renki/synthetic.hpp"
#include "renki/training.hpp"

using namespace renki;

namespace {

struct Fixture {
    EmbeddingTable emb;
    ScoreModel model;
    std::vector<Triple> triples;

    Fixture(std::size_t dim, std::vector<std::size_t> hidden, std::size_t n_triples) {
        Rng rng(7);
        emb = EmbeddingTable(200, dim);
        for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();
        model = make_cnkg(5, dim, hidden, rng);
        for (std::size_t i = 0; i < n_triples; ++i) {
            Triple t;
            t.head = static_cast<EntityId>(rng.below(200));
            t.relation = static_cast<RelationId>(rng.below(5));
            t.tail = static_cast<EntityId>(rng.below(200));
            t.label = rng.normal();
            triples.push_back(t);
        }
    }
};

void BM_ffn_forward(benchmark::State& state) {
    Rng rng(3);
    const auto net = make_ffn({20, static_cast<std::size_t>(state.range(0)), 1}, rng);
    std::vector<double> x(20);
    for (auto& v : x) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(ffn_forward(net, x));
}
BENCHMARK(BM_ffn_forward)->Arg(32)->Arg(256);

void BM_ffn_backward(benchmark::State& state) {
    Rng rng(3);
    const auto net = make_ffn({20, static_cast<std::size_t>(state.range(0)), 1}, rng);
    std::vector<double> x(20);
    for (auto& v : x) v = rng.normal();
    const std::vector<double> upstream{1.0};
    for (auto _ : state) benchmark::DoNotOptimize(ffn_backward(net, x, upstream));
}
BENCHMARK(BM_ffn_backward)->Arg(32)->Arg(256);

void BM_score(benchmark::State& state) {
    Fixture f(10, {32}, 1000);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(score(f.model, f.emb, f.triples[i]));
        i = (i + 1) % f.triples.size();
    }
}
BENCHMARK(BM_score);

void BM_score_gradients(benchmark::State& state) {
    Fixture f(10, {32}, 1000);
    ModelGrads grads = make_grads(f.model, f.emb);
    std::size_t i = 0;
    for (auto _ : state) {
        accumulate_score_gradients(f.model, f.emb, f.triples[i], 1.0, grads);
        i = (i + 1) % f.triples.size();
    }
}
BENCHMARK(BM_score_gradients);

void BM_train_epoch(benchmark::State& state) {
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 100;
    spec.dim = 10;
    spec.relations = 5;
    spec.seed = 5;
    const auto data = sample_regression(spec, 5000, 0);
    for (auto _ : state) {
        state.PauseTiming();
        Rng rng(11);
        ScoreModel model = make_cnkg(5, 10, std::vector<std::size_t>{32}, rng);
        EmbeddingTable emb = init_embeddings(RandomInit{1.0}, 100, 10, 1);
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.batch_size = 100;
        state.ResumeTiming();
        benchmark::DoNotOptimize(train(model, emb, data.triples, cfg));
    }
}
BENCHMARK(BM_train_epoch)->Unit(benchmark::kMillisecond);

void BM_auc(benchmark::State& state) {
    Rng rng(9);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<double> pos(n), neg(n);
    for (auto& v : pos) v = rng.normal();
    for (auto& v : neg) v = rng.normal() - 0.3;
    for (auto _ : state) benchmark::DoNotOptimize(auc(pos, neg));
}
BENCHMARK(BM_auc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
