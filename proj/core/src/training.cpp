#include "qsvdd/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "qsvdd/rng.hpp"

namespace qsvdd {

ParamStore init_params(int slot_count, std::uint64_t seed) {
    if (slot_count < 0) {
        throw std::invalid_argument("init_params: negative slot count");
    }
    Rng rng(seed);
    ParamStore store;
    store.init_seed = seed;
    store.values.resize(static_cast<std::size_t>(slot_count));
    for (double& v : store.values) {
        v = rng.normal();
    }
    return store;
}

double qsvdd_loss(const std::vector<std::vector<double>>& features,
                  const std::vector<double>& center) {
    if (features.empty()) {
        throw std::invalid_argument("qsvdd_loss: empty batch");
    }
    double total = 0.0;
    for (const std::vector<double>& row : features) {
        if (row.size() != center.size()) {
            throw std::invalid_argument("qsvdd_loss: feature/center dimension mismatch");
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double d = row[j] - center[j];
            total += d * d;
        }
    }
    return total / static_cast<double>(features.size());
}

double qae_loss(const Statevector& state, std::span<const int> trash_qubits) {
    for (std::size_t i = 0; i < trash_qubits.size(); ++i) {
        for (std::size_t j = i + 1; j < trash_qubits.size(); ++j) {
            if (trash_qubits[i] == trash_qubits[j]) {
                throw std::invalid_argument("qae_loss: duplicate trash qubit");
            }
        }
    }
    double total = 0.0;
    for (int q : trash_qubits) {
        const PauliTerm z = PauliTerm::from_label("Z", std::span<const int>(&q, 1));
        total += 1.0 - expectation(state, z);
    }
    return total;
}

LossSpec LossSpec::qsvdd(std::vector<PauliTerm> observables, std::vector<double> center) {
    if (observables.size() != center.size()) {
        throw std::invalid_argument("LossSpec: center dimension must match observables");
    }
    if (observables.empty()) {
        throw std::invalid_argument("LossSpec: need at least one observable");
    }
    LossSpec spec;
    spec.kind = Kind::Qsvdd;
    spec.observables = std::move(observables);
    spec.center = std::move(center);
    return spec;
}

LossSpec LossSpec::qae(std::span<const int> trash_qubits) {
    if (trash_qubits.empty()) {
        throw std::invalid_argument("LossSpec: need at least one trash qubit");
    }
    LossSpec spec;
    spec.kind = Kind::Qae;
    for (int q : trash_qubits) {
        spec.observables.push_back(PauliTerm::from_label("Z", std::span<const int>(&q, 1)));
    }
    return spec;
}

namespace {

void check_features(const LossSpec& spec, const std::vector<std::vector<double>>& features) {
    if (features.empty()) {
        throw std::invalid_argument("loss: empty batch");
    }
    for (const std::vector<double>& row : features) {
        if (row.size() != spec.observables.size()) {
            throw std::invalid_argument("loss: feature row has wrong dimension");
        }
    }
}

}  // namespace

double LossSpec::value(const std::vector<std::vector<double>>& features) const {
    check_features(*this, features);
    if (kind == Kind::Qsvdd) {
        return qsvdd_loss(features, center);
    }
    // Batch mean of sum_j (1 - <Z_j>).
    double total = 0.0;
    for (const std::vector<double>& row : features) {
        for (double v : row) {
            total += 1.0 - v;
        }
    }
    return total / static_cast<double>(features.size());
}

std::vector<std::vector<double>> LossSpec::dvalue(
    const std::vector<std::vector<double>>& features) const {
    check_features(*this, features);
    const double m = static_cast<double>(features.size());
    std::vector<std::vector<double>> grad(features.size(),
                                          std::vector<double>(observables.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t j = 0; j < observables.size(); ++j) {
            grad[i][j] = kind == Kind::Qsvdd ? 2.0 * (features[i][j] - center[j]) / m : -1.0 / m;
        }
    }
    return grad;
}

std::vector<std::vector<double>> batch_features(const CircuitProgram& program,
                                                std::span<const double> params,
                                                std::span<const Statevector> batch,
                                                const std::vector<PauliTerm>& observables) {
    std::vector<std::vector<double>> features;
    features.reserve(batch.size());
    for (const Statevector& input : batch) {
        const Statevector out = execute(program, params, input);
        std::vector<double> row;
        row.reserve(observables.size());
        for (const PauliTerm& term : observables) {
            row.push_back(expectation(out, term));
        }
        features.push_back(std::move(row));
    }
    return features;
}

double batch_loss(const CircuitProgram& program, std::span<const double> params,
                  std::span<const Statevector> batch, const LossSpec& loss) {
    return loss.value(batch_features(program, params, batch, loss.observables));
}

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

// Runs the lowered gate list with one occurrence's angle offset by delta.
Statevector run_lowered_shifted(const std::vector<LoweredGate>& gates,
                                std::span<const double> params, const Statevector& input,
                                std::size_t shifted, double delta) {
    Statevector state = input;
    for (std::size_t g = 0; g < gates.size(); ++g) {
        if (g == shifted) {
            LoweredGate bumped = gates[g];
            bumped.fixed_angle = params[static_cast<std::size_t>(bumped.slot)] + delta;
            bumped.slot = -1;
            apply_lowered(state, bumped, params);
        } else {
            apply_lowered(state, gates[g], params);
        }
    }
    return state;
}

// <bra| sigma_axis(qubit) |ket> for a single-qubit Pauli generator.
cdouble pauli_bilinear(const Statevector& bra, const Statevector& ket, GateKind rotation,
                       int qubit) {
    const std::size_t mask = std::size_t{1} << (bra.n_qubits - 1 - qubit);
    cdouble total{0.0, 0.0};
    switch (rotation) {
        case GateKind::RX:
            for (std::size_t x = 0; x < bra.dim(); ++x) {
                total += std::conj(bra.amps[x]) * ket.amps[x ^ mask];
            }
            break;
        case GateKind::RY:
            for (std::size_t x = 0; x < bra.dim(); ++x) {
                const cdouble coef = (x & mask) ? cdouble{0.0, 1.0} : cdouble{0.0, -1.0};
                total += std::conj(bra.amps[x]) * coef * ket.amps[x ^ mask];
            }
            break;
        case GateKind::RZ:
            for (std::size_t x = 0; x < bra.dim(); ++x) {
                const double coef = (x & mask) ? -1.0 : 1.0;
                total += std::conj(bra.amps[x]) * coef * ket.amps[x];
            }
            break;
        default:
            throw std::logic_error("pauli_bilinear: not a rotation");
    }
    return total;
}

void apply_lowered_inverse(Statevector& state, const LoweredGate& gate,
                           std::span<const double> params) {
    if (gate.kind == GateKind::CNOT) {
        apply_cnot(state, gate.q0, gate.q1);
        return;
    }
    const double angle =
        gate.slot >= 0 ? params[static_cast<std::size_t>(gate.slot)] : gate.fixed_angle;
    switch (gate.kind) {
        case GateKind::RX: apply_rx(state, gate.q0, -angle); break;
        case GateKind::RY: apply_ry(state, gate.q0, -angle); break;
        case GateKind::RZ: apply_rz(state, gate.q0, -angle); break;
        default: throw std::logic_error("apply_lowered_inverse: unexpected gate kind");
    }
}

void check_gradient_inputs(const CircuitProgram& program, std::span<const double> params,
                           std::span<const Statevector> batch) {
    if (static_cast<int>(params.size()) != program.slot_count) {
        throw std::invalid_argument("gradient: parameter length mismatch");
    }
    if (batch.empty()) {
        throw std::invalid_argument("gradient: empty batch");
    }
    for (const Statevector& s : batch) {
        if (s.n_qubits != program.n_qubits) {
            throw std::invalid_argument("gradient: sample qubit count mismatch");
        }
    }
}

}  // namespace

std::vector<double> grad_parameter_shift(const CircuitProgram& program,
                                         std::span<const double> params,
                                         std::span<const Statevector> batch,
                                         const LossSpec& loss) {
    check_gradient_inputs(program, params, batch);
    const std::vector<LoweredGate> lowered = lower_program(program);
    const std::vector<std::vector<double>> features =
        batch_features(program, params, batch, loss.observables);
    const std::vector<std::vector<double>> weights = loss.dvalue(features);

    std::vector<double> grad(static_cast<std::size_t>(program.slot_count), 0.0);
    for (std::size_t g = 0; g < lowered.size(); ++g) {
        if (lowered[g].slot < 0) continue;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const Statevector plus =
                run_lowered_shifted(lowered, params, batch[i], g, kHalfPi);
            const Statevector minus =
                run_lowered_shifted(lowered, params, batch[i], g, -kHalfPi);
            double contrib = 0.0;
            for (std::size_t j = 0; j < loss.observables.size(); ++j) {
                const double dv = (expectation(plus, loss.observables[j]) -
                                   expectation(minus, loss.observables[j])) /
                                  2.0;
                contrib += weights[i][j] * dv;
            }
            grad[static_cast<std::size_t>(lowered[g].slot)] += contrib;
        }
    }
    return grad;
}

std::vector<double> grad_finite_difference(const CircuitProgram& program,
                                           std::span<const double> params,
                                           std::span<const Statevector> batch,
                                           const LossSpec& loss, double h) {
    check_gradient_inputs(program, params, batch);
    if (!(h > 0.0)) {
        throw std::invalid_argument("grad_finite_difference: h must be positive");
    }
    std::vector<double> shifted(params.begin(), params.end());
    std::vector<double> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        shifted[k] = params[k] + h;
        const double up = batch_loss(program, shifted, batch, loss);
        shifted[k] = params[k] - h;
        const double down = batch_loss(program, shifted, batch, loss);
        shifted[k] = params[k];
        grad[k] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> grad_adjoint(const CircuitProgram& program, std::span<const double> params,
                                 std::span<const Statevector> batch, const LossSpec& loss) {
    check_gradient_inputs(program, params, batch);
    const std::vector<LoweredGate> lowered = lower_program(program);

    // Forward pass: final states and the feature matrix, which fixes the
    // per-sample effective observable H_i = sum_j (dL/dv_ij) P_j.
    std::vector<Statevector> kets;
    kets.reserve(batch.size());
    std::vector<std::vector<double>> features;
    features.reserve(batch.size());
    for (const Statevector& input : batch) {
        Statevector state = input;
        for (const LoweredGate& gate : lowered) {
            apply_lowered(state, gate, params);
        }
        std::vector<double> row;
        row.reserve(loss.observables.size());
        for (const PauliTerm& term : loss.observables) {
            row.push_back(expectation(state, term));
        }
        features.push_back(std::move(row));
        kets.push_back(std::move(state));
    }
    const std::vector<std::vector<double>> weights = loss.dvalue(features);

    // Reverse sweep per sample: dE/dtheta_k = Im <bra_k| G |ket_k> with G the
    // rotation's Pauli generator; both vectors walk backward through the
    // inverse gates.
    std::vector<double> grad(static_cast<std::size_t>(program.slot_count), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Statevector ket = std::move(kets[i]);
        Statevector bra = ket;
        bra.amps.assign(bra.amps.size(), cdouble{0.0, 0.0});
        for (std::size_t j = 0; j < loss.observables.size(); ++j) {
            accumulate_pauli(ket, loss.observables[j], cdouble{weights[i][j], 0.0}, bra);
        }
        for (std::size_t g = lowered.size(); g-- > 0;) {
            const LoweredGate& gate = lowered[g];
            if (gate.slot >= 0) {
                grad[static_cast<std::size_t>(gate.slot)] +=
                    pauli_bilinear(bra, ket, gate.kind, gate.q0).imag();
            }
            apply_lowered_inverse(ket, gate, params);
            apply_lowered_inverse(bra, gate, params);
        }
    }
    return grad;
}

OptimizerState init_optimizer(int slot_count, double lr, double beta1, double beta2,
                              double epsilon) {
    if (slot_count < 0 || !(lr > 0.0)) {
        throw std::invalid_argument("init_optimizer: bad arguments");
    }
    OptimizerState opt;
    opt.lr = lr;
    opt.beta1 = beta1;
    opt.beta2 = beta2;
    opt.epsilon = epsilon;
    opt.first_moment.assign(static_cast<std::size_t>(slot_count), 0.0);
    opt.second_moment.assign(static_cast<std::size_t>(slot_count), 0.0);
    return opt;
}

void adam_step(OptimizerState& opt, std::vector<double>& params,
               std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != opt.first_moment.size() ||
        params.size() != opt.second_moment.size()) {
        throw std::invalid_argument("adam_step: length mismatch");
    }
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!std::isfinite(grads[k])) {
            throw std::runtime_error("adam_step: non-finite gradient at slot " +
                                     std::to_string(k) + ": " + std::to_string(grads[k]));
        }
    }
    opt.step += 1;
    const double bias1 = 1.0 - std::pow(opt.beta1, opt.step);
    const double bias2 = 1.0 - std::pow(opt.beta2, opt.step);
    for (std::size_t k = 0; k < params.size(); ++k) {
        opt.first_moment[k] = opt.beta1 * opt.first_moment[k] + (1.0 - opt.beta1) * grads[k];
        opt.second_moment[k] =
            opt.beta2 * opt.second_moment[k] + (1.0 - opt.beta2) * grads[k] * grads[k];
        const double m_hat = opt.first_moment[k] / bias1;
        const double v_hat = opt.second_moment[k] / bias2;
        params[k] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
}

TrainHistory train_model(const CircuitProgram& program, const LossSpec& loss,
                         std::span<const Statevector> train_states,
                         const TrainConfig& config) {
    if (train_states.empty()) {
        throw std::invalid_argument("train_model: empty training set");
    }
    if (config.epochs < 1 || config.batch_size < 1 || !(config.lr > 0.0)) {
        throw std::invalid_argument("train_model: need epochs >= 1, batch_size >= 1, lr > 0");
    }

    ParamStore params = init_params(program.slot_count, config.seed);
    OptimizerState opt = init_optimizer(program.slot_count, config.lr, config.beta1,
                                        config.beta2, config.epsilon);
    // Distinct stream from the init draw so batching is independent of
    // parameter count.
    Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(train_states.size());
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    const std::size_t n = train_states.size();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::vector<Statevector> batch;
            batch.reserve(stop - start);
            for (std::size_t b = start; b < stop; ++b) {
                batch.push_back(train_states[order[b]]);
            }
            const std::vector<double> grads =
                config.grad_mode == GradMode::Adjoint
                    ? grad_adjoint(program, params.values, batch, loss)
                    : grad_parameter_shift(program, params.values, batch, loss);
            const double value = batch_loss(program, params.values, batch, loss);
            if (!std::isfinite(value)) {
                throw std::runtime_error("train_model: non-finite loss at epoch " +
                                         std::to_string(epoch));
            }
            loss_sum += value * static_cast<double>(batch.size());
            adam_step(opt, params.values, grads);
        }
        history.epoch_loss.push_back(loss_sum / static_cast<double>(n));
        const auto ended = std::chrono::steady_clock::now();
        history.epoch_seconds.push_back(
            config.record_time ? std::chrono::duration<double>(ended - started).count() : 0.0);
    }
    history.final_params = std::move(params);
    history.final_opt = std::move(opt);
    return history;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json doc;
    doc["schema"] = "qsvdd.checkpoint.v1";
    doc["digest"] = ckpt.digest;
    doc["params"] = ckpt.params;
    doc["epoch"] = ckpt.epoch;
    doc["opt"] = {{"step", ckpt.opt.step},
                  {"first_moment", ckpt.opt.first_moment},
                  {"second_moment", ckpt.opt.second_moment},
                  {"lr", ckpt.opt.lr},
                  {"beta1", ckpt.opt.beta1},
                  {"beta2", ckpt.opt.beta2},
                  {"epsilon", ckpt.opt.epsilon}};
    return doc.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("checkpoint_from_json: ") + err.what());
    }
    if (!doc.contains("schema") || doc["schema"] != "qsvdd.checkpoint.v1") {
        throw std::invalid_argument("checkpoint_from_json: expected schema qsvdd.checkpoint.v1");
    }
    Checkpoint ckpt;
    ckpt.digest = doc.at("digest").get<std::string>();
    ckpt.params = doc.at("params").get<std::vector<double>>();
    ckpt.epoch = doc.at("epoch").get<int>();
    const nlohmann::json& opt = doc.at("opt");
    ckpt.opt.step = opt.at("step").get<int>();
    ckpt.opt.first_moment = opt.at("first_moment").get<std::vector<double>>();
    ckpt.opt.second_moment = opt.at("second_moment").get<std::vector<double>>();
    ckpt.opt.lr = opt.at("lr").get<double>();
    ckpt.opt.beta1 = opt.at("beta1").get<double>();
    ckpt.opt.beta2 = opt.at("beta2").get<double>();
    ckpt.opt.epsilon = opt.at("epsilon").get<double>();
    return ckpt;
}

}  // namespace qsvdd
