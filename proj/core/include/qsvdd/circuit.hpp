#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsvdd/statevector.hpp"

namespace qsvdd {

enum class ProgramKind : std::uint8_t { Custom, Qcnn, Qae };

const char* program_kind_name(ProgramKind kind);
ProgramKind program_kind_from_name(const std::string& name);

/// QCNN ansatz shape. Blocks of `convs_per_block` convolution layers followed
/// by a pooling step repeat until two active qubits remain; `final_conv` adds
/// one last convolution layer on that pair. With `share_params` every SU(4)
/// application inside one convolution layer reuses the same 15 slots.
struct QcnnShape {
    int n_qubits = 8;
    int convs_per_block = 2;
    bool final_conv = true;
    bool share_params = true;
};

/// QAE ansatz shape: n total qubits, the first n_t are trash, l layers.
struct QaeShape {
    int n = 8;
    int n_t = 6;
    int l = 1;

    /// Trainable parameter count: n_t + n*l.
    int param_count() const { return n_t + n * l; }
    /// Circuit depth: 1 + (C(n_t,2) + n_t*(n-n_t) + 1)*l, counting one unit
    /// per CNOT and one per full RY layer.
    int depth() const { return 1 + (n_t * (n_t - 1) / 2 + n_t * (n - n_t) + 1) * l; }
};

/// Immutable gate list plus the slot-sharing structure. Slot bindings live on
/// each GateSpec; gates bound to the same slot share one trainable value.
/// active_masks records, per gate, which qubits are still active at that
/// point (bit q set = qubit q active); pooling never emits gates, it just
/// shrinks the mask so later gates can be checked against it.
struct CircuitProgram {
    int n_qubits = 0;
    ProgramKind kind = ProgramKind::Custom;
    std::vector<GateSpec> gates;
    int slot_count = 0;
    std::vector<std::uint32_t> active_masks;
    std::vector<int> output_qubits;

    bool operator==(const CircuitProgram&) const = default;
};

/// Errors: n_qubits not a power of two or < 4, convs_per_block < 1.
CircuitProgram build_qcnn(const QcnnShape& shape);

/// Errors: n_t outside (0, n), l < 1, n > kMaxQubits.
CircuitProgram build_qae(const QaeShape& shape);

/// Number of unique trainable parameters (the program's slot_count).
int count_params(const CircuitProgram& program);

/// Sequential depth of the program. QAE programs count one unit per maximal
/// run of consecutive RY gates plus one per CNOT, which reproduces
/// 1 + (C(n_t,2) + n_t*(n-n_t) + 1)*l from the gate list alone. Other
/// programs are scheduled greedily (each gate starts at the earliest stage
/// after its qubits are free) and the stage count is returned.
int count_depth(const CircuitProgram& program);

/// Applies all gates in order, resolving slot bindings through params.
/// Errors: params.size() != slot_count, qubit-count mismatch.
Statevector execute(const CircuitProgram& program, std::span<const double> params,
                    const Statevector& input);

/// One primitive rotation or CNOT; U3 gates expand into five of these
/// (RZ/RX/RZ/RX/RZ with the two RX angles fixed at +-pi/2). Gradient code
/// walks this form so every trainable angle sits in a plain rotation.
struct LoweredGate {
    GateKind kind = GateKind::RZ;  // RX, RY, RZ or CNOT
    int q0 = -1;
    int q1 = -1;           // CNOT target, -1 otherwise
    int slot = -1;         // -1 = fixed angle
    double fixed_angle = 0.0;
};

std::vector<LoweredGate> lower_program(const CircuitProgram& program);

void apply_lowered(Statevector& state, const LoweredGate& gate,
                   std::span<const double> params);

/// Versioned JSON round-trip for golden tests and checkpoints.
std::string to_json(const CircuitProgram& program);
CircuitProgram program_from_json(const std::string& text);

/// Hex digest of the serialized program; checkpoints carry it so a resumed
/// run can refuse a mismatched architecture.
std::string program_digest(const CircuitProgram& program);

/// Plain-text wire diagram (one row per qubit, time left to right).
std::string render_diagram(const CircuitProgram& program);

}  // namespace qsvdd
