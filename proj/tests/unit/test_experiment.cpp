#include <doctest.h>

#include <cmath>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "renki/bounds.hpp"
#include "renki/errors.hpp"
#include "renki/experiment.hpp"

using namespace renki;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("renki_exp_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// tiny but complete regression experiment
ExperimentConfig small_config() {
    ExperimentConfig cfg;
    GeneratorSpec gen;
    gen.kind = TruthKind::ConcatLinear;
    gen.entities = 20;
    gen.dim = 3;
    gen.relations = 2;
    gen.noise_stds = {1.0, 5.0};
    cfg.generator = gen;
    cfg.train_samples = 400;
    cfg.eval_samples = 400;
    cfg.model.kind = "cnkg";
    cfg.model.hidden = {8};
    cfg.weights = WeightScheme::inverse_variance();
    cfg.train.epochs = 3;
    cfg.train.batch_size = 100;
    cfg.replications = 3;
    cfg.base_seed = 11;
    return cfg;
}

std::vector<std::map<std::string, std::string>> parse_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string header;
    REQUIRE(std::getline(in, header));
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    std::vector<std::map<std::string, std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::map<std::string, std::string> row;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) row[cols.at(i++)] = cell;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_CASE("config parsing covers the schema and rejects unknown keys") {
    std::map<std::string, std::string> kv{
        {"generator", "concat_linear"}, {"entities", "50"},
        {"dim", "4"},                   {"relations", "3"},
        {"noise_stds", "1,5"},          {"train_samples", "100"},
        {"model", "cnkg"},              {"hidden", "16,8"},
        {"weights", "inverse_variance"},{"epochs", "7"},
        {"batch_size", "25"},           {"replications", "2"},
        {"seed", "42"},                 {"step", "0.005"},
    };
    const auto cfg = parse_experiment_config(kv);
    CHECK(cfg.generator->entities == 50);
    CHECK(cfg.model.hidden == std::vector<std::size_t>{16, 8});
    CHECK(cfg.weights.kind == WeightScheme::Kind::InverseVariance);
    CHECK(cfg.train.epochs == 7);
    CHECK(std::get<AdamConfig>(cfg.train.optimizer).step == 0.005);

    kv["no_such_key"] = "1";
    CHECK_THROWS_AS(parse_experiment_config(kv), ConfigError);
    kv.erase("no_such_key");
    kv["dataset"] = "somewhere";
    CHECK_THROWS_AS(parse_experiment_config(kv), ConfigError);  // generator XOR dataset
}

TEST_CASE("single replication reports zero spread") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 1;
    const auto result = run_experiment(cfg);
    REQUIRE(result.seeds.size() == 1);
    CHECK(result.seeds[0].ok);
    const auto& agg = result.summary.at("mse_out");
    CHECK(agg.count == 1);
    CHECK(agg.stddev == 0.0);
}

TEST_CASE("summary means equal the arithmetic mean of the emitted rows") {
    TempDir dir;
    ExperimentConfig cfg = small_config();
    cfg.replications = 10;
    cfg.train.epochs = 2;
    cfg.output_dir = dir.path;
    const auto result = run_experiment(cfg);

    const auto rows = parse_csv(dir.path / "per_seed.csv");
    REQUIRE(rows.size() == 10);
    double sum = 0.0;
    for (const auto& row : rows) sum += std::stod(row.at("mse_out"));
    CHECK(result.summary.at("mse_out").mean ==
          doctest::Approx(sum / 10.0).epsilon(1e-12));

    const auto summary_rows = parse_csv(dir.path / "summary.csv");
    bool found = false;
    for (const auto& row : summary_rows)
        if (row.at("metric") == "mse_out") {
            found = true;
            CHECK(std::stod(row.at("mean")) ==
                  doctest::Approx(result.summary.at("mse_out").mean).epsilon(1e-12));
        }
    CHECK(found);
}

TEST_CASE("result bundles are byte-identical across runs and thread counts") {
    TempDir a, b, c;
    ExperimentConfig cfg = small_config();
    cfg.replications = 4;
    cfg.train.epochs = 2;

    cfg.output_dir = a.path;
    cfg.threads = 1;
    run_experiment(cfg);
    cfg.output_dir = b.path;
    run_experiment(cfg);
    cfg.output_dir = c.path;
    cfg.threads = 4;
    run_experiment(cfg);

    CHECK(slurp(a.path / "per_seed.csv") == slurp(b.path / "per_seed.csv"));
    CHECK(slurp(a.path / "summary.csv") == slurp(b.path / "summary.csv"));
    CHECK(slurp(a.path / "per_seed.csv") == slurp(c.path / "per_seed.csv"));
    CHECK(slurp(a.path / "summary.csv") == slurp(c.path / "summary.csv"));
}

TEST_CASE("per-seed failures are recorded while the bundle is still written") {
    TempDir dir;
    ExperimentConfig cfg = small_config();
    cfg.generator->noise_stds = {0.0};  // sigma == 0 breaks inverse-variance weights
    cfg.replications = 2;
    cfg.output_dir = dir.path;
    const auto result = run_experiment(cfg);
    for (const auto& s : result.seeds) {
        CHECK_FALSE(s.ok);
        CHECK(s.error.find("config") != std::string::npos);
    }
    const auto rows = parse_csv(dir.path / "per_seed.csv");
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) CHECK(row.at("status") == "failed");
}

TEST_CASE("lambda sweep emits one series row per grid value") {
    TempDir dir;
    ExperimentConfig cfg;
    GeneratorSpec gen;
    gen.kind = TruthKind::Logistic;
    gen.entities = 20;
    gen.dim = 3;
    gen.relations = 4;
    gen.bias = -1.0;
    cfg.generator = gen;
    cfg.relation_sigma_low = 0.2;
    cfg.relation_sigma_high = 2.0;
    cfg.low_noise_relations = {0, 1};
    cfg.train_samples = 300;
    cfg.eval_samples = 400;
    cfg.model.kind = "cnkg";
    cfg.model.hidden = {6};
    cfg.eval = EvalProtocol::OracleAuc;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 100;
    cfg.replications = 2;
    cfg.base_seed = 5;
    cfg.output_dir = dir.path;

    const std::vector<double> grid{0.1, 1.0, 10.0, 100.0, 1000.0};
    const auto points = run_lambda_sweep(cfg, grid);
    CHECK(points.size() == 5);
    const auto rows = parse_csv(dir.path / "series_lambda.csv");
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::stod(rows[i].at("lambda")) == doctest::Approx(grid[i]));
}

TEST_CASE("sample-size sweep emits the MSE-vs-n series") {
    TempDir dir;
    ExperimentConfig cfg = small_config();
    cfg.replications = 2;
    cfg.train.epochs = 2;
    cfg.output_dir = dir.path;
    const std::vector<std::size_t> grid{100, 200};
    const auto points = run_sample_size_sweep(cfg, grid);
    CHECK(points.size() == 2);
    const auto rows = parse_csv(dir.path / "series_mse_vs_n.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[0].at("n")) == 100.0);
    CHECK(std::stod(rows[1].at("n")) == 200.0);
}

TEST_CASE("bound table rows match direct calculator calls and are stable bytes") {
    ModelSpec model;
    model.kind = "cnkg";
    model.hidden = {32};
    const auto rows = bound_table(model, 500, 20, 5, 40000.0, 1.0, 1.0);

    const auto find = [&](const std::string& name) -> const BoundTableRow& {
        for (const auto& r : rows)
            if (r.name == name) return r;
        FAIL("missing row ", name);
        static BoundTableRow dummy;
        return dummy;
    };

    auto in = bounds::inputs_for_cnkg(500, 20, 5, model.hidden);
    in.sample_size = 40000.0;
    CHECK(find("pdim_trainable_embedding").value ==
          bounds::pdim_trainable_embedding(500, 20, 5, in.avg_relation_params(), 2).value);
    CHECK(find("partition_complexity_u").value ==
          bounds::partition_complexity_u(in, bounds::Family::CNkg));
    CHECK(find("vc_partition_bound").value ==
          bounds::vc_partition_bound(in, bounds::Family::CNkg).value);
    CHECK(find("delta_stat_out_of_sample").value ==
          bounds::delta_stat(in, bounds::Regime::OutOfSample).value);
    CHECK(find("capped_oracle_constant").value == 22132.0);
    CHECK(find("total_params").value == 500.0 * 20.0 + in.total_relation_params());

    std::ostringstream a, b;
    write_bound_table_csv(a, rows);
    write_bound_table_csv(b, bound_table(model, 500, 20, 5, 40000.0, 1.0, 1.0));
    CHECK(a.str() == b.str());
    CHECK(a.str().find("pdim_fixed_embedding") != std::string::npos);
    CHECK(a.str().find("delta_stat_in_sample") != std::string::npos);

    ModelSpec bad;
    bad.kind = "transe";
    CHECK_THROWS_AS(bound_table(bad, 10, 2, 1, 100.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("model persistence round trips through the runner") {
    TempDir dir;
    ExperimentConfig cfg = small_config();
    cfg.replications = 1;
    cfg.train.epochs = 2;
    cfg.model_out = (dir.path / "trained").string();
    const auto first = run_experiment(cfg);
    REQUIRE(first.seeds[0].ok);

    ExperimentConfig reload = cfg;
    reload.model_out.clear();
    reload.model_in = cfg.model_out;
    const auto second = run_experiment(reload);
    REQUIRE(second.seeds[0].ok);
    // same data, same trained parameters: identical out-of-sample MSE
    CHECK(second.seeds[0].report.weighted_mse_out ==
          doctest::Approx(first.seeds[0].report.weighted_mse_out).epsilon(1e-12));
}
