#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsvdd/config.hpp"
#include "qsvdd/dataset.hpp"
#include "qsvdd/detection.hpp"
#include "qsvdd/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kRunSchema = "qsvdd.run.v1";
constexpr const char* kCheckpointSchema = "qsvdd.run-checkpoint.v1";

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
}

/// Resolved config, seed list, and schema stamp land next to every run's
/// outputs so a directory is reproducible on its own.
void write_provenance(const qsvdd::ExperimentConfig& config) {
    fs::create_directories(config.output_dir);
    write_text(fs::path(config.output_dir) / "config.resolved.ini",
               qsvdd::serialize_config(config));
    std::string seeds;
    for (std::uint64_t seed : config.seeds) {
        seeds += std::to_string(seed) + "\n";
    }
    write_text(fs::path(config.output_dir) / "seeds.txt", seeds);
    write_text(fs::path(config.output_dir) / "VERSION", std::string(kRunSchema) + "\n");
}

void apply_desk_preset(qsvdd::ExperimentConfig& config) {
    config.scale = 0.1;
    config.epochs = 20;
    config.seeds.resize(1);
}

struct LoadedData {
    std::vector<qsvdd::ImageRecord> train;
    std::vector<qsvdd::ImageRecord> test;
};

LoadedData load_data(const qsvdd::ExperimentConfig& config) {
    qsvdd::require_data_files(config);
    LoadedData data;
    data.train = qsvdd::load_idx(config.train_images, config.train_labels);
    data.test = qsvdd::load_idx(config.test_images, config.test_labels);
    std::cerr << "loaded " << data.train.size() << " train / " << data.test.size()
              << " test records from " << config.dataset << "\n";
    return data;
}

std::string fmt_auc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int cmd_show_circuit(const std::string& ansatz, int qubits, int trash, int layers, int convs,
                     bool share, bool final_conv, bool as_json) {
    qsvdd::CircuitProgram program;
    if (ansatz == "qcnn") {
        program = qsvdd::build_qcnn({qubits, convs, final_conv, share});
    } else {
        program = qsvdd::build_qae({qubits, trash, layers});
    }
    if (as_json) {
        std::cout << qsvdd::to_json(program) << "\n";
    } else {
        std::cout << qsvdd::render_diagram(program);
    }
    std::cout << "parameters: " << qsvdd::count_params(program) << "\n";
    std::cout << "depth: " << qsvdd::count_depth(program) << "\n";
    std::cout << "gates: " << program.gates.size() << "\n";
    std::cout << "digest: " << qsvdd::program_digest(program) << "\n";
    return 0;
}

int cmd_train(qsvdd::ExperimentConfig config, std::optional<int> cls,
              std::optional<std::uint64_t> seed, std::optional<std::string> method_override) {
    if (cls) config.classes = {*cls};
    if (seed) config.seeds = {*seed};
    if (method_override) config.methods = {*method_override};
    config.classes.resize(1);
    config.seeds.resize(1);
    config.methods.resize(1);
    qsvdd::validate_config(config);
    qsvdd::resolve_data_dir(config);
    const LoadedData data = load_data(config);
    write_provenance(config);

    const qsvdd::BenchmarkPlan plan = qsvdd::plan_from_config(config);
    const qsvdd::Method method = plan.methods.front();
    const int d_prime = plan.d_primes.front();
    const qsvdd::TaskSplit split = qsvdd::build_task_split(
        data.train, data.test, config.classes.front(), config.seeds.front(), config.scale);

    qsvdd::HypersphereModel model;
    qsvdd::TrainHistory history;
    const qsvdd::RunResult result =
        qsvdd::run_cell(split, method, d_prime, plan, &model, &history);

    nlohmann::json doc;
    doc["schema"] = kCheckpointSchema;
    doc["model"] = nlohmann::json::parse(qsvdd::model_to_json(model));
    doc["opt"] = nlohmann::json::parse(qsvdd::checkpoint_to_json(
        {qsvdd::program_digest(model.program), model.params.values, history.final_opt,
         result.epochs}));
    doc["method"] = qsvdd::method_name(method);
    doc["normal_class"] = result.normal_class;
    doc["seed"] = result.seed;
    doc["d_prime"] = result.d_prime;
    doc["auc"] = result.auc;

    char name[128];
    std::snprintf(name, sizeof(name), "%s_c%d_s%llu.checkpoint.json",
                  method == qsvdd::Method::Qsvdd ? "qsvdd" : "qae-occ", result.normal_class,
                  static_cast<unsigned long long>(result.seed));
    const fs::path ckpt_path = fs::path(config.output_dir) / name;
    write_text(ckpt_path, doc.dump(2) + "\n");

    std::cerr << "checkpoint: " << ckpt_path.string() << "\n";
    std::cout << "auc: " << fmt_auc(result.auc) << "\n";
    std::cout << "first_epoch_loss: " << result.first_epoch_loss << "\n";
    std::cout << "final_epoch_loss: " << result.final_epoch_loss << "\n";
    return 0;
}

int cmd_eval(qsvdd::ExperimentConfig config, const std::string& checkpoint_path,
             std::optional<int> cls, std::optional<std::uint64_t> seed) {
    if (cls) config.classes = {*cls};
    if (seed) config.seeds = {*seed};
    qsvdd::validate_config(config);
    qsvdd::resolve_data_dir(config);

    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint " + checkpoint_path);
    }
    std::ostringstream body;
    body << in.rdbuf();
    const nlohmann::json doc = nlohmann::json::parse(body.str());
    if (!doc.contains("schema") || doc["schema"] != kCheckpointSchema) {
        throw std::runtime_error(std::string("checkpoint: expected schema ") +
                                 kCheckpointSchema);
    }
    const qsvdd::HypersphereModel model = qsvdd::model_from_json(doc.at("model").dump());
    const int normal_class = cls ? *cls : doc.at("normal_class").get<int>();
    const std::uint64_t split_seed = seed ? *seed : doc.at("seed").get<std::uint64_t>();

    const LoadedData data = load_data(config);
    const qsvdd::TaskSplit split =
        qsvdd::build_task_split(data.train, data.test, normal_class, split_seed, config.scale);

    std::vector<double> scores_normal;
    for (const qsvdd::EncodedSample& sample : split.test_normal) {
        scores_normal.push_back(qsvdd::anomaly_score(model, sample.state));
    }
    std::vector<double> scores_abnormal;
    for (const qsvdd::EncodedSample& sample : split.test_abnormal) {
        scores_abnormal.push_back(qsvdd::anomaly_score(model, sample.state));
    }
    std::cout << "auc: " << fmt_auc(qsvdd::roc_auc(scores_normal, scores_abnormal)) << "\n";
    std::cout << "test_normal: " << scores_normal.size() << "\n";
    std::cout << "test_abnormal: " << scores_abnormal.size() << "\n";
    return 0;
}

int cmd_benchmark(qsvdd::ExperimentConfig config, const std::string& format_name, bool sweep) {
    if (sweep) {
        config.d_primes = {1, 3, 6, 9, 12, 15};
    }
    qsvdd::validate_config(config);
    qsvdd::resolve_data_dir(config);
    const LoadedData data = load_data(config);
    write_provenance(config);

    const qsvdd::BenchmarkPlan plan = qsvdd::plan_from_config(config);
    const qsvdd::ExportFormat format =
        format_name == "json" ? qsvdd::ExportFormat::Json : qsvdd::ExportFormat::Csv;
    const std::string ext = format_name == "json" ? ".json" : ".csv";
    const fs::path out_dir(config.output_dir);

    std::vector<qsvdd::RunResult> partial;
    std::vector<qsvdd::RunResult> results;
    try {
        results = qsvdd::run_benchmark(data.train, data.test, plan,
                                       [&](const qsvdd::RunResult& r) {
                                           partial.push_back(r);
                                           std::cerr << "done " << qsvdd::method_name(r.method)
                                                     << " class " << r.normal_class << " d'="
                                                     << r.d_prime << " seed " << r.seed
                                                     << " auc " << fmt_auc(r.auc) << "\n";
                                       });
    } catch (const std::exception& err) {
        if (!partial.empty()) {
            const std::string flushed = (out_dir / ("results.partial" + ext)).string();
            qsvdd::export_results(partial, flushed, format);
            std::cerr << "flushed " << partial.size() << " completed runs to " << flushed
                      << "\n";
        }
        throw;
    }

    const std::string raw_path = (out_dir / ("results" + ext)).string();
    qsvdd::export_results(results, raw_path, format);
    if (sweep) {
        qsvdd::export_sweep_summary(results, (out_dir / "sweep_summary.csv").string());
    }
    std::cerr << "wrote " << raw_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-class anomaly detection with variational quantum circuits"};
    app.require_subcommand(1);

    // show-circuit
    auto* show = app.add_subcommand("show-circuit", "Print an ansatz diagram and its counts");
    std::string ansatz;
    int qubits = 8, trash = 6, layers = 9, convs = 2;
    bool no_share = false, no_final_conv = false, as_json = false;
    show->add_option("--ansatz", ansatz, "Ansatz family")
        ->required()
        ->check(CLI::IsMember({"qcnn", "qae"}));
    show->add_option("--qubits", qubits, "Total qubits");
    show->add_option("--trash", trash, "QAE trash qubits");
    show->add_option("--layers", layers, "QAE layers");
    show->add_option("--convs", convs, "Convolution layers per block");
    show->add_flag("--no-share", no_share, "Give every block its own parameters");
    show->add_flag("--no-final-conv", no_final_conv, "Skip the last two-qubit convolution");
    show->add_flag("--json", as_json, "Emit the serialized program instead of a diagram");

    // shared config options
    const auto add_config_opts = [](CLI::App* cmd, std::string& config_path,
                                    std::string& preset, std::string& out_dir) {
        cmd->add_option("--config", config_path, "Experiment config file")->required();
        cmd->add_option("--preset", preset, "Preset: desk = scale 0.1, 1 seed, 20 epochs")
            ->check(CLI::IsMember({"desk"}));
        cmd->add_option("--out", out_dir, "Override output_dir");
    };

    // train
    auto* train = app.add_subcommand("train", "Train one (method, class, seed) cell");
    std::string train_config, train_preset, train_out, train_method;
    int train_class = -1;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false, train_class_set = false;
    add_config_opts(train, train_config, train_preset, train_out);
    train->add_option("--class", train_class, "Normal class (default: first in config)")
        ->check(CLI::Range(0, 9))
        ->each([&](const std::string&) { train_class_set = true; });
    train->add_option("--seed", train_seed, "Seed (default: first in config)")
        ->each([&](const std::string&) { train_seed_set = true; });
    train->add_option("--method", train_method, "Override method")
        ->check(CLI::IsMember({"qsvdd", "qae-occ"}));

    // eval
    auto* eval = app.add_subcommand("eval", "Score a test split from a checkpoint");
    std::string eval_config, eval_preset, eval_out, eval_checkpoint;
    int eval_class = -1;
    std::uint64_t eval_seed = 0;
    bool eval_seed_set = false, eval_class_set = false;
    add_config_opts(eval, eval_config, eval_preset, eval_out);
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint written by train")->required();
    eval->add_option("--class", eval_class, "Normal class (default: checkpoint's)")
        ->check(CLI::Range(0, 9))
        ->each([&](const std::string&) { eval_class_set = true; });
    eval->add_option("--seed", eval_seed, "Split seed (default: checkpoint's)")
        ->each([&](const std::string&) { eval_seed_set = true; });

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run the full (method, class, seed, d') grid");
    std::string bench_config, bench_preset, bench_out, bench_format = "csv";
    int bench_jobs = 0;
    add_config_opts(bench, bench_config, bench_preset, bench_out);
    bench->add_option("--format", bench_format, "Result file format")
        ->check(CLI::IsMember({"csv", "json"}));
    bench->add_option("--jobs", bench_jobs, "Parallel benchmark cells")->check(CLI::Range(1, 64));

    // sweep-latent
    auto* sweep = app.add_subcommand(
        "sweep-latent", "Benchmark over feature dimensions 1, 3, 6, 9, 12, 15");
    std::string sweep_config, sweep_preset, sweep_out, sweep_format = "csv";
    int sweep_jobs = 0;
    add_config_opts(sweep, sweep_config, sweep_preset, sweep_out);
    sweep->add_option("--format", sweep_format, "Result file format")
        ->check(CLI::IsMember({"csv", "json"}));
    sweep->add_option("--jobs", sweep_jobs, "Parallel benchmark cells")->check(CLI::Range(1, 64));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(show)) {
            return cmd_show_circuit(ansatz, qubits, trash, layers, convs, !no_share,
                                    !no_final_conv, as_json);
        }

        const auto load_config = [](const std::string& path, const std::string& preset,
                                    const std::string& out_override) {
            qsvdd::ExperimentConfig config = qsvdd::parse_config(path);
            if (preset == "desk") {
                apply_desk_preset(config);
            }
            if (!out_override.empty()) {
                config.output_dir = out_override;
            }
            return config;
        };

        if (app.got_subcommand(train)) {
            return cmd_train(load_config(train_config, train_preset, train_out),
                             train_class_set ? std::optional<int>(train_class) : std::nullopt,
                             train_seed_set ? std::optional<std::uint64_t>(train_seed)
                                            : std::nullopt,
                             train_method.empty() ? std::nullopt
                                                  : std::optional<std::string>(train_method));
        }
        if (app.got_subcommand(eval)) {
            return cmd_eval(load_config(eval_config, eval_preset, eval_out), eval_checkpoint,
                            eval_class_set ? std::optional<int>(eval_class) : std::nullopt,
                            eval_seed_set ? std::optional<std::uint64_t>(eval_seed)
                                          : std::nullopt);
        }
        if (app.got_subcommand(bench)) {
            qsvdd::ExperimentConfig config = load_config(bench_config, bench_preset, bench_out);
            if (bench_jobs > 0) config.jobs = bench_jobs;
            return cmd_benchmark(std::move(config), bench_format, false);
        }
        if (app.got_subcommand(sweep)) {
            qsvdd::ExperimentConfig config = load_config(sweep_config, sweep_preset, sweep_out);
            if (sweep_jobs > 0) config.jobs = sweep_jobs;
            return cmd_benchmark(std::move(config), sweep_format, true);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
