// renki: knowledge-graph learning toolkit CLI.
//
// Subcommands: generate, train, eval, bounds, experiment, sweep-lambda.
// Exit codes: 0 ok, then one per error category (see category_exit_code).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "renki/errors.hpp"
#include "renki/experiment.hpp"
#include "renki/io.hpp"

namespace {

using namespace renki;

int category_exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Config: return 2;
        case ErrorCategory::Io: return 3;
        case ErrorCategory::Data: return 4;
        case ErrorCategory::Shape: return 5;
        case ErrorCategory::Training: return 6;
        case ErrorCategory::Budget: return 7;
    }
    return 1;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
    auto kv = io::load_key_value_file(path);
    for (const auto& o : overrides) {
        const auto extra = io::parse_key_values(o);
        for (const auto& [k, v] : extra) kv[k] = v;
    }
    return parse_experiment_config(kv);
}

int cmd_generate(const std::string& kind, int entities, int dim, int relations,
                 const std::string& noise_stds, double bias, std::size_t samples,
                 std::uint64_t seed, const std::string& out, bool test_split,
                 std::size_t test_samples) {
    GeneratorSpec spec;
    spec.kind = truth_kind_from_string(kind);
    spec.entities = entities;
    spec.dim = dim;
    spec.relations = relations;
    spec.bias = bias;
    spec.seed = seed;
    if (!noise_stds.empty()) {
        spec.noise_stds.clear();
        std::stringstream ss(noise_stds);
        std::string item;
        while (std::getline(ss, item, ',')) spec.noise_stds.push_back(std::stod(item));
    }

    const bool binary = spec.kind == TruthKind::Logistic || spec.kind == TruthKind::Mip;
    SyntheticDataset ds = binary ? sample_binary_positive_only(spec, samples)
                                 : sample_regression(spec, samples, 0);
    io::save_dataset(out, ds);
    std::cout << "wrote " << ds.triples.size() << " triples to " << out << ".triples.tsv\n";
    if (test_split && !binary) {
        SyntheticDataset test = sample_regression(spec, test_samples, 1);
        io::save_dataset(out + ".test", test);
        std::cout << "wrote " << test.triples.size() << " test triples to " << out
                  << ".test.triples.tsv\n";
    }
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::vector<std::string>& overrides) {
    const ExperimentConfig config = load_config(config_path, overrides);
    ExperimentResult result = run_experiment(config);

    if (!config.train_sample_grid.empty()) run_sample_size_sweep(config, config.train_sample_grid);

    int failures = 0;
    for (const auto& s : result.seeds) {
        if (!s.ok) {
            ++failures;
            std::cerr << "replication " << s.replication << " failed: " << s.error << "\n";
        }
    }
    for (const auto& [name, agg] : result.summary) {
        if (agg.count == 0) continue;
        std::cout << name << ": mean " << agg.mean << " std " << agg.stddev << " (n=" << agg.count
                  << ")\n";
    }
    if (!config.output_dir.empty())
        std::cout << "results in " << config.output_dir.string() << "\n";
    return failures == static_cast<int>(result.seeds.size()) && failures > 0 ? 6 : 0;
}

int cmd_sweep_lambda(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& grid_arg) {
    ExperimentConfig config = load_config(config_path, overrides);
    std::vector<double> grid = config.lambda_grid;
    if (!grid_arg.empty()) {
        grid.clear();
        std::stringstream ss(grid_arg);
        std::string item;
        while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
    }
    if (grid.empty()) grid = {0.1, 1.0, 10.0, 100.0, 1000.0};

    const auto points = run_lambda_sweep(config, grid);
    std::cout << "lambda\tauc_mean\terr_mean\n";
    for (const auto& p : points) {
        const auto& auc = p.result.summary.at("auc_avg");
        const auto& err = p.result.summary.at("class_error");
        std::cout << p.x << '\t' << auc.mean << '\t' << err.mean << '\n';
    }
    if (!config.output_dir.empty())
        std::cout << "series in " << (config.output_dir / "series_lambda.csv").string() << "\n";
    return 0;
}

int cmd_bounds(const std::string& model, const std::string& hidden, int entities, int dim,
               int relations, double samples, double score_bound, double sigma_h_sq,
               const std::string& format, const std::string& out_path) {
    ModelSpec spec;
    spec.kind = model;
    if (!hidden.empty()) {
        spec.hidden.clear();
        std::stringstream ss(hidden);
        std::string item;
        while (std::getline(ss, item, ',')) spec.hidden.push_back(std::stoul(item));
    }
    const auto rows = bound_table(spec, entities, dim, relations, samples, score_bound, sigma_h_sq);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw IoError("cannot write " + out_path);
        out = &file;
    }
    if (format == "csv")
        write_bound_table_csv(*out, rows);
    else
        write_bound_table_text(*out, rows);
    return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& model_out) {
    ExperimentConfig config = load_config(config_path, overrides);
    config.replications = 1;
    config.output_dir.clear();
    if (!model_out.empty()) config.model_out = model_out;
    ExperimentResult result = run_experiment(config);
    const auto& seed0 = result.seeds.front();
    if (!seed0.ok) {
        std::cerr << "error: " << seed0.error << "\n";
        return 6;
    }
    std::cout << "final loss " << seed0.train_report.final_loss << " after "
              << seed0.train_report.epochs_run << " epochs (delta_opt "
              << seed0.train_report.delta_opt << ")\n";
    if (!model_out.empty()) std::cout << "model saved to " << model_out << ".model.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph learning toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset bundle");
    std::string gen_kind = "concat_linear", gen_noise = "1,5", gen_out = "dataset";
    int gen_entities = 100, gen_dim = 10, gen_relations = 5;
    double gen_bias = -3.0;
    std::size_t gen_samples = 10000, gen_test_samples = 10000;
    std::uint64_t gen_seed = 1;
    bool gen_test = false;
    gen->add_option("--kind", gen_kind, "concat_linear | vector_offset | logistic | mip");
    gen->add_option("--entities", gen_entities);
    gen->add_option("--dim", gen_dim);
    gen->add_option("--relations", gen_relations);
    gen->add_option("--noise-stds", gen_noise, "comma list, regression variants");
    gen->add_option("--bias", gen_bias, "binary variants");
    gen->add_option("--samples", gen_samples);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out, "output base path");
    gen->add_flag("--test-split", gen_test, "also emit a fresh test draw");
    gen->add_option("--test-samples", gen_test_samples);

    // train / experiment / sweep-lambda share a config file + overrides
    std::string cfg_path;
    std::vector<std::string> overrides;
    std::string model_out;
    auto* train_cmd = app.add_subcommand("train", "train one model from a config (single seed)");
    train_cmd->add_option("--config", cfg_path)->required();
    train_cmd->add_option("--set", overrides, "key=value overrides");
    train_cmd->add_option("--model-out", model_out);

    std::string exp_cfg;
    std::vector<std::string> exp_overrides;
    auto* exp = app.add_subcommand("experiment", "run replicated experiment from a config");
    exp->add_option("--config", exp_cfg)->required();
    exp->add_option("--set", exp_overrides, "key=value overrides");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate with a config (alias of experiment)");
    std::string eval_cfg;
    std::vector<std::string> eval_overrides;
    eval_cmd->add_option("--config", eval_cfg)->required();
    eval_cmd->add_option("--set", eval_overrides, "key=value overrides");

    std::string sweep_cfg, sweep_grid;
    std::vector<std::string> sweep_overrides;
    auto* sweep = app.add_subcommand("sweep-lambda", "sweep the relation weight ratio");
    sweep->add_option("--config", sweep_cfg)->required();
    sweep->add_option("--grid", sweep_grid, "comma list of lambda values");
    sweep->add_option("--set", sweep_overrides, "key=value overrides");

    // bounds
    auto* bnd = app.add_subcommand("bounds", "print the capacity-bound table for a model config");
    std::string bnd_model = "cnkg", bnd_hidden = "32", bnd_format = "text", bnd_out;
    int bnd_entities = 500, bnd_dim = 20, bnd_relations = 5;
    double bnd_samples = 40000, bnd_b = 1.0, bnd_sigma = 1.0;
    bnd->add_option("--model", bnd_model, "cnkg | ipnkg");
    bnd->add_option("--hidden", bnd_hidden, "comma list of hidden widths");
    bnd->add_option("--entities", bnd_entities);
    bnd->add_option("--dim", bnd_dim);
    bnd->add_option("--relations", bnd_relations);
    bnd->add_option("--samples", bnd_samples);
    bnd->add_option("--score-bound", bnd_b);
    bnd->add_option("--sigma-h-sq", bnd_sigma);
    bnd->add_option("--format", bnd_format, "text | csv");
    bnd->add_option("--out", bnd_out, "write to a file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_kind, gen_entities, gen_dim, gen_relations, gen_noise,
                                gen_bias, gen_samples, gen_seed, gen_out, gen_test,
                                gen_test_samples);
        if (train_cmd->parsed()) return cmd_train(cfg_path, overrides, model_out);
        if (exp->parsed()) return cmd_experiment(exp_cfg, exp_overrides);
        if (eval_cmd->parsed()) return cmd_experiment(eval_cfg, eval_overrides);
        if (sweep->parsed()) return cmd_sweep_lambda(sweep_cfg, sweep_overrides, sweep_grid);
        if (bnd->parsed())
            return cmd_bounds(bnd_model, bnd_hidden, bnd_entities, bnd_dim, bnd_relations,
                              bnd_samples, bnd_b, bnd_sigma, bnd_format, bnd_out);
    } catch (const Error& e) {
        std::cerr << "error: [" << to_string(e.category()) << "] " << e.what() << "\n";
        return category_exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: [internal] " << e.what() << "\n";
        return 1;
    }
    return 0;
}
