#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "renki/errors.hpp"
#include "renki/io.hpp"
#include "renki/synthetic.hpp"

using namespace renki;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("renki_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path file(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("triples: empty file") {
    TempDir dir;
    write_file(dir.file("t.tsv"), "");
    const auto data = io::load_triples(dir.file("t.tsv"));
    CHECK(data.triples.empty());
    CHECK(data.entities.size() == 0);
}

TEST_CASE("triples: comments are skipped, ids assigned first-seen") {
    TempDir dir;
    write_file(dir.file("t.tsv"),
               "# comment line\n"
               "a\tr1\tb\n"
               "b\tr1\tc\t0.5\n");
    const auto data = io::load_triples(dir.file("t.tsv"));
    REQUIRE(data.triples.size() == 2);
    CHECK(data.entities.names == std::vector<std::string>{"a", "b", "c"});
    CHECK(data.triples[0].head == 0);
    CHECK(data.triples[0].tail == 1);
    CHECK_FALSE(data.triples[0].label.has_value());
    CHECK(*data.triples[1].label == 0.5);
    CHECK(data.counts_per_relation.at(0) == 2);
}

TEST_CASE("triples: malformed lines carry the line number") {
    TempDir dir;
    write_file(dir.file("t.tsv"), "a\tr\tb\nx\ty\n");
    try {
        io::load_triples(dir.file("t.tsv"));
        FAIL("expected error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    write_file(dir.file("bad_label.tsv"), "a\tr\tb\toops\n");
    CHECK_THROWS_AS(io::load_triples(dir.file("bad_label.tsv")), DataError);
}

TEST_CASE("triples: closed vocabularies reject unknown ids") {
    TempDir dir;
    write_file(dir.file("t.tsv"), "a\tr\tzzz\n");
    io::Vocabulary entities;
    entities.add("a");
    entities.add("b");
    io::Vocabulary relations;
    relations.add("r");
    CHECK_THROWS_AS(io::load_triples(dir.file("t.tsv"), entities, relations), DataError);
}

TEST_CASE("triples: save/load round trip") {
    TempDir dir;
    GeneratorSpec spec;
    spec.kind = TruthKind::ConcatLinear;
    spec.entities = 12;
    spec.dim = 3;
    spec.relations = 2;
    spec.seed = 9;
    const auto ds = sample_regression(spec, 200, 0);
    const auto entities = io::synthetic_entity_vocabulary(spec.entities);
    const auto relations = io::synthetic_relation_vocabulary(spec.relations);

    io::save_triples(dir.file("t.tsv"), ds.triples, entities, relations);
    const auto back = io::load_triples(dir.file("t.tsv"), entities, relations);
    REQUIRE(back.triples.size() == ds.triples.size());
    for (std::size_t i = 0; i < ds.triples.size(); ++i) {
        CHECK(back.triples[i].head == ds.triples[i].head);
        CHECK(back.triples[i].relation == ds.triples[i].relation);
        CHECK(back.triples[i].tail == ds.triples[i].tail);
        CHECK(*back.triples[i].label == *ds.triples[i].label);
        CHECK(*back.triples[i].noise_scale == *ds.triples[i].noise_scale);
    }
}

TEST_CASE("vocabulary: categories round trip, duplicates rejected") {
    TempDir dir;
    io::Vocabulary v;
    v.add("cui1");
    v.add("phe1");
    v.add("cui2");
    v.categories = {0, 1, 0};
    v.category_names = {"cui", "phecode"};
    io::save_vocabulary(dir.file("v.tsv"), v);
    const auto back = io::load_vocabulary(dir.file("v.tsv"));
    CHECK(back.names == v.names);
    CHECK(back.categories == v.categories);
    CHECK(back.category_names == v.category_names);

    write_file(dir.file("dup.tsv"), "a\na\n");
    CHECK_THROWS_AS(io::load_vocabulary(dir.file("dup.tsv")), DataError);
}

TEST_CASE("embeddings: round trip, coverage and shape checks") {
    TempDir dir;
    io::Vocabulary v;
    v.add("a");
    v.add("b");
    Matrix m(2, 3);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.25 * static_cast<double>(i) - 0.4;
    io::save_embedding_file(dir.file("e.tsv"), m, v);
    CHECK(io::load_embedding_file(dir.file("e.tsv"), v) == m);

    write_file(dir.file("missing.tsv"), "D 3\na 1 2 3\n");
    CHECK_THROWS_AS(io::load_embedding_file(dir.file("missing.tsv"), v), DataError);
    write_file(dir.file("short.tsv"), "D 3\na 1 2\nb 1 2 3\n");
    CHECK_THROWS_AS(io::load_embedding_file(dir.file("short.tsv"), v), DataError);
    write_file(dir.file("noheader.tsv"), "a 1 2 3\n");
    CHECK_THROWS_AS(io::load_embedding_file(dir.file("noheader.tsv"), v), DataError);
    write_file(dir.file("unknown.tsv"), "D 3\na 1 2 3\nb 1 2 3\nzz 1 2 3\n");
    CHECK_THROWS_AS(io::load_embedding_file(dir.file("unknown.tsv"), v), DataError);
}

TEST_CASE("key=value configs") {
    const auto kv = io::parse_key_values(
        "# a comment\n"
        "alpha = 1.5\n"
        "name=hello   # trailing comment\n"
        "\n"
        "alpha = 2.0\n");
    CHECK(kv.at("alpha") == "2.0");  // later keys win
    CHECK(kv.at("name") == "hello");
    CHECK_THROWS_AS(io::parse_key_values("not a pair\n"), ConfigError);
    CHECK_THROWS_AS(io::parse_key_values("= value\n"), ConfigError);
}

TEST_CASE("dataset bundle round trip preserves the oracle") {
    TempDir dir;
    GeneratorSpec spec;
    spec.kind = TruthKind::VectorOffset;
    spec.entities = 10;
    spec.dim = 4;
    spec.relations = 3;
    spec.seed = 77;
    const auto ds = sample_regression(spec, 150, 0);
    io::save_dataset(dir.file("data").string(), ds);
    const auto back = io::load_dataset(dir.file("data").string());

    REQUIRE(back.triples.size() == ds.triples.size());
    CHECK(back.truth.kind == ds.truth.kind);
    CHECK(back.truth.embeddings == ds.truth.embeddings);
    CHECK(back.truth.relation_params == ds.truth.relation_params);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Triple t;
        t.head = static_cast<EntityId>(rng.below(10));
        t.relation = static_cast<RelationId>(rng.below(3));
        t.tail = static_cast<EntityId>(rng.below(10));
        CHECK(back.truth.gamma(t) == ds.truth.gamma(t));
    }
}

TEST_CASE("models: save/load keeps scores bit-identical") {
    TempDir dir;
    Rng rng(21);
    const std::size_t dim = 3;
    EmbeddingTable emb(6, dim);
    for (std::size_t i = 0; i < emb.vectors.size(); ++i) emb.vectors.data()[i] = rng.normal();

    std::vector<ScoreModel> models;
    models.push_back(make_cnkg(2, dim, std::vector<std::size_t>{4}, rng));
    models.push_back(make_ipnkg(2, dim, 0, std::vector<std::size_t>{4}, rng,
                                OutputTransform::Logistic));
    models.push_back(make_transe(2, dim, rng));
    models.push_back(make_mip(2, dim, rng, -0.5));
    models.push_back(make_concat_linear(2, dim, rng));

    int idx = 0;
    for (const auto& model : models) {
        const auto path = dir.file("model" + std::to_string(idx++) + ".json");
        io::save_model(path, model);
        const auto back = io::load_model(path);
        for (int i = 0; i < 30; ++i) {
            Triple t;
            t.head = static_cast<EntityId>(rng.below(6));
            t.relation = static_cast<RelationId>(rng.below(2));
            t.tail = static_cast<EntityId>(rng.below(6));
            CHECK(score(back, emb, t) == score(model, emb, t));
        }
    }
}
