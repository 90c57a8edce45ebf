#include "qsvdd/detection.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace qsvdd {

namespace {

const std::vector<std::string>& full_pauli_order() {
    static const std::vector<std::string> order = {"IX", "IY", "IZ", "XI", "XX",
                                                   "XY", "XZ", "YI", "YX", "YY",
                                                   "YZ", "ZI", "ZX", "ZY", "ZZ"};
    return order;
}

}  // namespace

ObservableSet default_observable_set(int d_prime) {
    const auto& order = full_pauli_order();
    if (d_prime < 1 || d_prime > static_cast<int>(order.size())) {
        throw std::invalid_argument("default_observable_set: d_prime must be 1..15, got " +
                                    std::to_string(d_prime));
    }
    ObservableSet set;
    set.labels.assign(order.begin(), order.begin() + d_prime);
    return set;
}

std::vector<PauliTerm> bind_observables(const ObservableSet& set,
                                        std::span<const int> output_qubits) {
    if (output_qubits.size() != 2) {
        throw std::invalid_argument("bind_observables: need exactly 2 output qubits, got " +
                                    std::to_string(output_qubits.size()));
    }
    if (set.labels.empty()) {
        throw std::invalid_argument("bind_observables: empty observable set");
    }
    std::vector<PauliTerm> bound;
    bound.reserve(set.labels.size());
    for (const std::string& label : set.labels) {
        if (label == "II") {
            throw std::invalid_argument("bind_observables: the identity is not a feature");
        }
        if (std::count(set.labels.begin(), set.labels.end(), label) != 1) {
            throw std::invalid_argument("bind_observables: duplicate label " + label);
        }
        bound.push_back(PauliTerm::from_label(label, output_qubits));
    }
    return bound;
}

std::vector<double> feature_map(const CircuitProgram& program, std::span<const double> params,
                                const std::vector<PauliTerm>& observables,
                                const Statevector& input) {
    const Statevector out = execute(program, params, input);
    std::vector<double> features;
    features.reserve(observables.size());
    for (const PauliTerm& term : observables) {
        features.push_back(expectation(out, term));
    }
    return features;
}

std::pair<std::vector<double>, double> fit_center_radius(
    const std::vector<std::vector<double>>& features, CenterMode mode) {
    if (features.empty()) {
        throw std::invalid_argument("fit_center_radius: empty feature list");
    }
    const std::size_t dim = features.front().size();
    for (const std::vector<double>& row : features) {
        if (row.size() != dim) {
            throw std::invalid_argument("fit_center_radius: ragged feature list");
        }
    }
    std::vector<double> center(dim, 0.0);
    if (mode == CenterMode::Mean) {
        for (const std::vector<double>& row : features) {
            for (std::size_t j = 0; j < dim; ++j) {
                center[j] += row[j];
            }
        }
        for (double& c : center) {
            c /= static_cast<double>(features.size());
        }
    }
    double radius = 0.0;
    for (const std::vector<double>& row : features) {
        double dist_sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - center[j];
            dist_sq += d * d;
        }
        radius = std::max(radius, dist_sq);
    }
    return {std::move(center), radius};
}

double anomaly_score(const HypersphereModel& model, const Statevector& sample) {
    const std::vector<PauliTerm> bound =
        bind_observables(model.observables, model.program.output_qubits);
    const std::vector<double> features =
        feature_map(model.program, model.params.values, bound, sample);
    if (features.size() != model.center.size()) {
        throw std::invalid_argument("anomaly_score: center dimension mismatch");
    }
    double dist_sq = 0.0;
    for (std::size_t j = 0; j < features.size(); ++j) {
        const double d = features[j] - model.center[j];
        dist_sq += d * d;
    }
    return dist_sq - model.radius;
}

double roc_auc(std::span<const double> scores_normal, std::span<const double> scores_abnormal) {
    if (scores_normal.empty() || scores_abnormal.empty()) {
        throw std::invalid_argument("roc_auc: empty score list");
    }
    // Midrank formulation of the Mann-Whitney statistic.
    struct Entry {
        double score;
        bool abnormal;
    };
    std::vector<Entry> all;
    all.reserve(scores_normal.size() + scores_abnormal.size());
    for (double s : scores_normal) all.push_back({s, false});
    for (double s : scores_abnormal) all.push_back({s, true});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double abnormal_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].abnormal) abnormal_rank_sum += midrank;
        }
        i = j;
    }
    const double n_a = static_cast<double>(scores_abnormal.size());
    const double n_n = static_cast<double>(scores_normal.size());
    return (abnormal_rank_sum - n_a * (n_a + 1.0) / 2.0) / (n_a * n_n);
}

const char* method_name(Method method) {
    return method == Method::Qsvdd ? "QSVDD" : "QAE-OCC";
}

Method method_from_name(const std::string& name) {
    if (name == "QSVDD" || name == "qsvdd") return Method::Qsvdd;
    if (name == "QAE-OCC" || name == "qae-occ") return Method::QaeOcc;
    throw std::invalid_argument("unknown method: " + name);
}

std::string model_to_json(const HypersphereModel& model) {
    nlohmann::json doc;
    doc["schema"] = "qsvdd.model.v1";
    doc["program"] = nlohmann::json::parse(to_json(model.program));
    doc["digest"] = program_digest(model.program);
    doc["params"] = model.params.values;
    doc["init_seed"] = model.params.init_seed;
    doc["observables"] = model.observables.labels;
    doc["center"] = model.center;
    doc["radius"] = model.radius;
    doc["threshold"] = model.threshold;
    return doc.dump(2);
}

HypersphereModel model_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("model_from_json: ") + err.what());
    }
    if (!doc.contains("schema") || doc["schema"] != "qsvdd.model.v1") {
        throw std::invalid_argument("model_from_json: expected schema qsvdd.model.v1");
    }
    HypersphereModel model;
    model.program = program_from_json(doc.at("program").dump());
    if (doc.at("digest").get<std::string>() != program_digest(model.program)) {
        throw std::invalid_argument("model_from_json: program digest mismatch");
    }
    model.params.values = doc.at("params").get<std::vector<double>>();
    model.params.init_seed = doc.at("init_seed").get<std::uint64_t>();
    model.observables.labels = doc.at("observables").get<std::vector<std::string>>();
    model.center = doc.at("center").get<std::vector<double>>();
    model.radius = doc.at("radius").get<double>();
    model.threshold = doc.at("threshold").get<double>();
    if (static_cast<int>(model.params.values.size()) != model.program.slot_count) {
        throw std::invalid_argument("model_from_json: parameter count mismatch");
    }
    return model;
}

RunResult run_cell(const TaskSplit& split, Method method, int d_prime,
                   const BenchmarkPlan& plan, HypersphereModel* fitted_model,
                   TrainHistory* history_out) {
    if (split.train.empty()) {
        throw std::invalid_argument("run_cell: split has no training samples");
    }
    const auto started = std::chrono::steady_clock::now();
    const int n_qubits = split.train.front().state.n_qubits;

    CircuitProgram program;
    LossSpec loss;
    if (method == Method::Qsvdd) {
        QcnnShape shape = plan.qcnn;
        shape.n_qubits = n_qubits;
        program = build_qcnn(shape);
        const std::vector<PauliTerm> bound =
            bind_observables(default_observable_set(d_prime), program.output_qubits);
        loss = LossSpec::qsvdd(bound, std::vector<double>(bound.size(), 0.0));
    } else {
        QaeShape shape = plan.qae;
        shape.n = n_qubits;
        program = build_qae(shape);
        std::vector<int> trash(static_cast<std::size_t>(shape.n_t));
        std::iota(trash.begin(), trash.end(), 0);
        loss = LossSpec::qae(trash);
    }

    std::vector<Statevector> train_states;
    train_states.reserve(split.train.size());
    for (const EncodedSample& sample : split.train) {
        train_states.push_back(sample.state);
    }

    TrainConfig config = plan.train;
    config.seed = split.seed;
    const TrainHistory history = train_model(program, loss, train_states, config);

    HypersphereModel model;
    model.program = program;
    model.params = history.final_params;
    model.observables = default_observable_set(d_prime);
    const std::vector<PauliTerm> bound =
        bind_observables(model.observables, program.output_qubits);
    std::vector<std::vector<double>> train_features;
    train_features.reserve(train_states.size());
    for (const Statevector& state : train_states) {
        train_features.push_back(feature_map(program, model.params.values, bound, state));
    }
    auto [center, radius] = fit_center_radius(
        train_features, method == Method::Qsvdd ? CenterMode::Zero : CenterMode::Mean);
    model.center = std::move(center);
    model.radius = radius;

    std::vector<double> scores_normal;
    scores_normal.reserve(split.test_normal.size());
    for (const EncodedSample& sample : split.test_normal) {
        scores_normal.push_back(anomaly_score(model, sample.state));
    }
    std::vector<double> scores_abnormal;
    scores_abnormal.reserve(split.test_abnormal.size());
    for (const EncodedSample& sample : split.test_abnormal) {
        scores_abnormal.push_back(anomaly_score(model, sample.state));
    }

    RunResult result;
    result.dataset_id = plan.dataset_id;
    result.method = method;
    result.normal_class = split.normal_class;
    result.seed = split.seed;
    result.d_prime = d_prime;
    result.auc = roc_auc(scores_normal, scores_abnormal);
    result.epochs = config.epochs;
    result.first_epoch_loss = history.epoch_loss.front();
    result.final_epoch_loss = history.epoch_loss.back();
    const auto ended = std::chrono::steady_clock::now();
    result.wall_seconds =
        config.record_time ? std::chrono::duration<double>(ended - started).count() : 0.0;
    if (fitted_model) {
        *fitted_model = std::move(model);
    }
    if (history_out) {
        *history_out = history;
    }
    return result;
}

std::vector<RunResult> run_benchmark(
    const std::vector<ImageRecord>& train_records,
    const std::vector<ImageRecord>& test_records, const BenchmarkPlan& plan,
    const std::function<void(const RunResult&)>& on_result) {
    struct Cell {
        Method method;
        int normal_class;
        int d_prime;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (Method method : plan.methods) {
        for (int cls : plan.classes) {
            for (int d_prime : plan.d_primes) {
                for (std::uint64_t seed : plan.seeds) {
                    cells.push_back({method, cls, d_prime, seed});
                }
            }
        }
    }
    if (cells.empty()) {
        throw std::invalid_argument("run_benchmark: empty grid");
    }

    std::vector<RunResult> results(cells.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex failure_mutex;
    std::string failure;

    const auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cells.size()) break;
            const Cell& cell = cells[i];
            try {
                const TaskSplit split = build_task_split(train_records, test_records,
                                                         cell.normal_class, cell.seed,
                                                         plan.scale);
                results[i] = run_cell(split, cell.method, cell.d_prime, plan);
                if (on_result) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    on_result(results[i]);
                }
            } catch (const std::exception& err) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure.empty()) failure = err.what();
            }
        }
    };

    const int jobs = std::clamp<int>(plan.jobs, 1, static_cast<int>(cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    if (!failure.empty()) {
        throw std::runtime_error("run_benchmark: " + failure);
    }
    return results;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct AggregateKey {
    std::string dataset;
    Method method;
    int normal_class;
    int d_prime;

    bool operator==(const AggregateKey&) const = default;
};

struct AggregateCell {
    AggregateKey key;
    std::vector<double> aucs;
};

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mu) * (x - mu);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<AggregateCell> aggregate_results(const std::vector<RunResult>& results) {
    std::vector<AggregateCell> cells;
    for (const RunResult& r : results) {
        const AggregateKey key{r.dataset_id, r.method, r.normal_class, r.d_prime};
        auto it = std::find_if(cells.begin(), cells.end(),
                               [&](const AggregateCell& c) { return c.key == key; });
        if (it == cells.end()) {
            cells.push_back({key, {}});
            it = cells.end() - 1;
        }
        it->aucs.push_back(r.auc);
    }
    return cells;
}

std::string aggregate_path(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    const std::size_t slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + ".aggregate";
    }
    return path.substr(0, dot) + ".aggregate" + path.substr(dot);
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << body;
    if (!out.flush()) {
        throw std::runtime_error("failed writing " + path);
    }
}

}  // namespace

void export_results(const std::vector<RunResult>& results, const std::string& path,
                    ExportFormat format) {
    if (results.empty()) {
        throw std::invalid_argument("export_results: nothing to export");
    }
    const std::vector<AggregateCell> cells = aggregate_results(results);

    // Per (dataset, method, d') summary: mean of the per-class means and of
    // the per-class stds, mirroring the per-class table's bottom row.
    struct SummaryKey {
        std::string dataset;
        Method method;
        int d_prime;
        bool operator==(const SummaryKey&) const = default;
    };
    std::vector<std::pair<SummaryKey, std::pair<std::vector<double>, std::vector<double>>>>
        summaries;
    for (const AggregateCell& cell : cells) {
        const SummaryKey key{cell.key.dataset, cell.key.method, cell.key.d_prime};
        auto it = std::find_if(summaries.begin(), summaries.end(),
                               [&](const auto& s) { return s.first == key; });
        if (it == summaries.end()) {
            summaries.push_back({key, {}});
            it = summaries.end() - 1;
        }
        it->second.first.push_back(mean_of(cell.aucs));
        it->second.second.push_back(sample_std(cell.aucs));
    }

    if (format == ExportFormat::Csv) {
        std::string raw = "dataset,method,normal_class,d_prime,seed,auc,epochs,wall_seconds\n";
        for (const RunResult& r : results) {
            raw += r.dataset_id + ',' + method_name(r.method) + ',' +
                   std::to_string(r.normal_class) + ',' + std::to_string(r.d_prime) + ',' +
                   std::to_string(r.seed) + ',' + fmt_double(r.auc) + ',' +
                   std::to_string(r.epochs) + ',' + fmt_double(r.wall_seconds) + '\n';
        }
        write_file(path, raw);

        std::string agg = "dataset,method,normal_class,d_prime,mean_auc,std_auc,runs\n";
        for (const AggregateCell& cell : cells) {
            agg += cell.key.dataset + ',' + method_name(cell.key.method) + ',' +
                   std::to_string(cell.key.normal_class) + ',' +
                   std::to_string(cell.key.d_prime) + ',' + fmt_double(mean_of(cell.aucs)) +
                   ',' + fmt_double(sample_std(cell.aucs)) + ',' +
                   std::to_string(cell.aucs.size()) + '\n';
        }
        for (const auto& [key, stats] : summaries) {
            agg += key.dataset + ',' + method_name(key.method) + ",mean," +
                   std::to_string(key.d_prime) + ',' + fmt_double(mean_of(stats.first)) + ',' +
                   fmt_double(mean_of(stats.second)) + ',' +
                   std::to_string(stats.first.size()) + '\n';
        }
        write_file(aggregate_path(path), agg);
        return;
    }

    nlohmann::json raw = nlohmann::json::array();
    for (const RunResult& r : results) {
        raw.push_back({{"dataset", r.dataset_id},
                       {"method", method_name(r.method)},
                       {"normal_class", r.normal_class},
                       {"d_prime", r.d_prime},
                       {"seed", r.seed},
                       {"auc", r.auc},
                       {"epochs", r.epochs},
                       {"wall_seconds", r.wall_seconds}});
    }
    write_file(path, raw.dump(2) + "\n");

    nlohmann::json agg = nlohmann::json::array();
    for (const AggregateCell& cell : cells) {
        agg.push_back({{"dataset", cell.key.dataset},
                       {"method", method_name(cell.key.method)},
                       {"normal_class", cell.key.normal_class},
                       {"d_prime", cell.key.d_prime},
                       {"mean_auc", mean_of(cell.aucs)},
                       {"std_auc", sample_std(cell.aucs)},
                       {"runs", cell.aucs.size()}});
    }
    for (const auto& [key, stats] : summaries) {
        agg.push_back({{"dataset", key.dataset},
                       {"method", method_name(key.method)},
                       {"normal_class", "mean"},
                       {"d_prime", key.d_prime},
                       {"mean_auc", mean_of(stats.first)},
                       {"std_auc", mean_of(stats.second)},
                       {"runs", stats.first.size()}});
    }
    write_file(aggregate_path(path), agg.dump(2) + "\n");
}

void export_sweep_summary(const std::vector<RunResult>& results, const std::string& path) {
    if (results.empty()) {
        throw std::invalid_argument("export_sweep_summary: nothing to export");
    }
    struct Group {
        std::string dataset;
        int d_prime;
        std::vector<double> aucs;
    };
    std::vector<Group> groups;
    for (const RunResult& r : results) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.dataset == r.dataset_id && g.d_prime == r.d_prime;
        });
        if (it == groups.end()) {
            groups.push_back({r.dataset_id, r.d_prime, {}});
            it = groups.end() - 1;
        }
        it->aucs.push_back(r.auc);
    }
    std::string body = "dataset,d_prime,mean_auc,std_auc,runs\n";
    for (const Group& g : groups) {
        body += g.dataset + ',' + std::to_string(g.d_prime) + ',' + fmt_double(mean_of(g.aucs)) +
                ',' + fmt_double(sample_std(g.aucs)) + ',' + std::to_string(g.aucs.size()) + '\n';
    }
    write_file(path, body);
}

}  // namespace qsvdd
