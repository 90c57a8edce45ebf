#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsvdd/circuit.hpp"
#include "qsvdd/statevector.hpp"

namespace qsvdd {

struct ParamStore {
    std::vector<double> values;
    std::uint64_t init_seed = 0;

    bool operator==(const ParamStore&) const = default;
};

/// Standard-normal initialization from the seeded generator.
ParamStore init_params(int slot_count, std::uint64_t seed);

/// Mean squared distance to the center: (1/m) sum_i ||v_i - c||^2.
double qsvdd_loss(const std::vector<std::vector<double>>& features,
                  const std::vector<double>& center);

/// sum_j (1 - <Z_j>) over the trash qubits, evaluated on the full state (the
/// trash marginal gives the same number). 0 iff every trash qubit is |0>.
double qae_loss(const Statevector& state, std::span<const int> trash_qubits);

/// A differentiable batch objective: a list of measured Pauli features plus
/// the scalar loss of the resulting feature matrix and its gradient w.r.t.
/// every feature entry. Rows of the matrix are samples, columns follow
/// `observables`.
struct LossSpec {
    enum class Kind { Qsvdd, Qae };

    Kind kind = Kind::Qsvdd;
    std::vector<PauliTerm> observables;
    std::vector<double> center;  // Qsvdd only, one entry per observable

    /// Distance-to-center loss over the given Pauli features.
    static LossSpec qsvdd(std::vector<PauliTerm> observables, std::vector<double> center);
    /// Batch mean of the trash-qubit loss (features are <Z> per trash qubit).
    static LossSpec qae(std::span<const int> trash_qubits);

    double value(const std::vector<std::vector<double>>& features) const;
    std::vector<std::vector<double>> dvalue(
        const std::vector<std::vector<double>>& features) const;
};

/// Feature matrix for a batch: row i = loss observables measured on
/// execute(program, params, batch[i]).
std::vector<std::vector<double>> batch_features(const CircuitProgram& program,
                                                std::span<const double> params,
                                                std::span<const Statevector> batch,
                                                const std::vector<PauliTerm>& observables);

double batch_loss(const CircuitProgram& program, std::span<const double> params,
                  std::span<const Statevector> batch, const LossSpec& loss);

/// Reference gradient: the parameter-shift rule applied per gate occurrence
/// (each +-pi/2 shift re-measures the features) and chained through the loss
/// via dvalue at the unshifted point. Exact for rotation gates.
std::vector<double> grad_parameter_shift(const CircuitProgram& program,
                                         std::span<const double> params,
                                         std::span<const Statevector> batch,
                                         const LossSpec& loss);

/// Central differences (L(p + h e_k) - L(p - h e_k)) / 2h per slot.
std::vector<double> grad_finite_difference(const CircuitProgram& program,
                                           std::span<const double> params,
                                           std::span<const Statevector> batch,
                                           const LossSpec& loss, double h);

/// Fast path: one forward pass plus one reverse sweep per sample, walking the
/// lowered gate list with the effective observable sum_j (dL/dv_ij) P_j.
/// Matches grad_parameter_shift to near machine precision.
std::vector<double> grad_adjoint(const CircuitProgram& program, std::span<const double> params,
                                 std::span<const Statevector> batch, const LossSpec& loss);

struct OptimizerState {
    int step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const OptimizerState&) const = default;
};

OptimizerState init_optimizer(int slot_count, double lr = 0.01, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);

/// Bias-corrected Adam update, in place. Errors on non-finite gradients.
void adam_step(OptimizerState& opt, std::vector<double>& params,
               std::span<const double> grads);

enum class GradMode { Adjoint, ParameterShift };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    GradMode grad_mode = GradMode::Adjoint;
    bool record_time = true;  // off = epoch_seconds all zero, for byte-stable outputs
};

struct TrainHistory {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_seconds;
    ParamStore final_params;
    OptimizerState final_opt;
};

/// Seeded init, seeded shuffles, mini-batch gradient steps with Adam.
/// Deterministic given the config. Errors on an empty training set or a
/// non-finite loss.
TrainHistory train_model(const CircuitProgram& program, const LossSpec& loss,
                         std::span<const Statevector> train_states, const TrainConfig& config);

/// Resume record: enough to continue optimization or to re-bind parameters to
/// a circuit, guarded by the program digest.
struct Checkpoint {
    std::string digest;
    std::vector<double> params;
    OptimizerState opt;
    int epoch = 0;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace qsvdd
