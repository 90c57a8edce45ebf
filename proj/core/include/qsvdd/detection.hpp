#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsvdd/circuit.hpp"
#include "qsvdd/dataset.hpp"
#include "qsvdd/statevector.hpp"
#include "qsvdd/training.hpp"

namespace qsvdd {

/// Ordered two-qubit Pauli labels over a program's output qubit pair. The
/// feature space dimension d' is the number of entries.
struct ObservableSet {
    std::vector<std::string> labels;

    int d_prime() const { return static_cast<int>(labels.size()); }
    bool operator==(const ObservableSet&) const = default;
};

/// First d_prime entries of the fixed order IX, IY, IZ, XI, XX, XY, XZ, YI,
/// YX, YY, YZ, ZI, ZX, ZY, ZZ. Errors outside 1..15.
ObservableSet default_observable_set(int d_prime);

/// Resolves each label onto the two given output qubits. Errors if
/// output_qubits is not exactly a pair or a label is malformed/duplicated.
std::vector<PauliTerm> bind_observables(const ObservableSet& set,
                                        std::span<const int> output_qubits);

/// v_j = <P_j> on execute(program, params, input).
std::vector<double> feature_map(const CircuitProgram& program, std::span<const double> params,
                                const std::vector<PauliTerm>& observables,
                                const Statevector& input);

enum class CenterMode { Zero, Mean };

/// Zero mode pins the center at the origin; Mean mode uses the feature mean.
/// The radius is the largest squared distance from the center over the given
/// training features. Errors on empty input.
std::pair<std::vector<double>, double> fit_center_radius(
    const std::vector<std::vector<double>>& features, CenterMode mode);

struct HypersphereModel {
    CircuitProgram program;
    ParamStore params;
    ObservableSet observables;
    std::vector<double> center;
    double radius = 0.0;
    double threshold = 0.0;  // decision boundary b, fixed at 0
};

/// ||feature_map(sample) - center||^2 - radius; anomalous iff > threshold.
double anomaly_score(const HypersphereModel& model, const Statevector& sample);

/// Mann-Whitney estimate: fraction of (abnormal, normal) pairs where the
/// abnormal sample scores strictly higher, ties counted one half. Computed
/// via midranks; O((n+m) log(n+m)). Errors on an empty list.
double roc_auc(std::span<const double> scores_normal, std::span<const double> scores_abnormal);

std::string model_to_json(const HypersphereModel& model);
HypersphereModel model_from_json(const std::string& text);

enum class Method { Qsvdd, QaeOcc };

const char* method_name(Method method);  // "QSVDD" / "QAE-OCC"
Method method_from_name(const std::string& name);

/// The benchmark grid: every (method, class, seed, d') cell trains a fresh
/// model on its one-class split and scores the test set.
struct BenchmarkPlan {
    std::string dataset_id = "mnist";
    std::vector<Method> methods = {Method::Qsvdd};
    std::vector<int> classes = {0};
    std::vector<std::uint64_t> seeds = {0};
    std::vector<int> d_primes = {9};
    double scale = 1.0;
    TrainConfig train;
    QcnnShape qcnn;
    QaeShape qae{8, 6, 9};
    int jobs = 1;
};

struct RunResult {
    std::string dataset_id;
    Method method = Method::Qsvdd;
    int normal_class = 0;
    std::uint64_t seed = 0;
    int d_prime = 9;
    double auc = 0.0;
    int epochs = 0;
    double wall_seconds = 0.0;
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
};

/// Trains and scores one cell. Exposed so the CLI's single-run `train` and
/// `eval` paths share the benchmark's exact pipeline.
RunResult run_cell(const TaskSplit& split, Method method, int d_prime,
                   const BenchmarkPlan& plan, HypersphereModel* fitted_model = nullptr,
                   TrainHistory* history_out = nullptr);

/// Runs the whole grid; cells execute independently (plan.jobs in parallel)
/// and results come back in deterministic grid order. If a cell fails the
/// remaining cells still run, every completed result is handed to on_result
/// (serialized, as cells finish), and the first error is rethrown at the end
/// so callers can flush partial output.
std::vector<RunResult> run_benchmark(
    const std::vector<ImageRecord>& train_records,
    const std::vector<ImageRecord>& test_records, const BenchmarkPlan& plan,
    const std::function<void(const RunResult&)>& on_result = {});

enum class ExportFormat { Csv, Json };

/// Writes the raw per-run table to `path` and a mean/std aggregate per
/// (dataset, method, class, d') next to it ("<stem>.aggregate.<ext>"),
/// including a summary row per (dataset, method, d') that averages the
/// per-class means and stds. Deterministic output for identical results.
void export_results(const std::vector<RunResult>& results, const std::string& path,
                    ExportFormat format);

/// Per-(d_prime) mean/std summary across the given results; feeds the
/// latent-dimension sweep output.
void export_sweep_summary(const std::vector<RunResult>& results, const std::string& path);

}  // namespace qsvdd
