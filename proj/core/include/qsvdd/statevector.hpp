#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qsvdd {

using cdouble = std::complex<double>;

/// Exact n-qubit state. Qubit 0 is the most significant bit of the basis
/// index, so an amplitude vector maps onto basis labels in natural reading
/// order: amps[0b10] is |10>.
struct Statevector {
    int n_qubits = 0;
    std::vector<cdouble> amps;

    std::size_t dim() const { return amps.size(); }

    /// Bit value of `qubit` inside basis index `idx`.
    int bit(std::size_t idx, int qubit) const {
        return static_cast<int>((idx >> (n_qubits - 1 - qubit)) & 1U);
    }

    double norm_sq() const;
};

constexpr int kMaxQubits = 20;

/// |0...0> on n qubits.
Statevector init_zero_state(int n_qubits);

enum class GateKind : std::uint8_t { RX, RY, RZ, U3, CNOT };

const char* gate_name(GateKind kind);
GateKind gate_kind_from_name(const std::string& name);

/// Number of qubit operands for a gate kind (1 or 2).
int gate_arity(GateKind kind);
/// Number of parameter slots a gate kind binds (0, 1 or 3).
int gate_param_count(GateKind kind);

/// One gate with its qubit operands and parameter-slot bindings. Slots index
/// into an external parameter store; gates that share a slot share its value.
/// For CNOT, qubits = {control, target}.
struct GateSpec {
    GateKind kind = GateKind::RX;
    std::array<int, 2> qubits{-1, -1};
    std::array<int, 3> slots{-1, -1, -1};

    static GateSpec rx(int q, int slot) { return {GateKind::RX, {q, -1}, {slot, -1, -1}}; }
    static GateSpec ry(int q, int slot) { return {GateKind::RY, {q, -1}, {slot, -1, -1}}; }
    static GateSpec rz(int q, int slot) { return {GateKind::RZ, {q, -1}, {slot, -1, -1}}; }
    static GateSpec u3(int q, int s0, int s1, int s2) {
        return {GateKind::U3, {q, -1}, {s0, s1, s2}};
    }
    static GateSpec cnot(int control, int target) {
        return {GateKind::CNOT, {control, target}, {-1, -1, -1}};
    }

    bool operator==(const GateSpec&) const = default;
};

// In-place single-gate applications. Angles in radians;
// R_i(theta) = cos(theta/2) I - i sin(theta/2) sigma_i.
void apply_rx(Statevector& state, int qubit, double theta);
void apply_ry(Statevector& state, int qubit, double theta);
void apply_rz(Statevector& state, int qubit, double theta);
/// U3(theta, phi, delta) = Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(delta).
void apply_u3(Statevector& state, int qubit, double theta, double phi, double delta);
void apply_cnot(Statevector& state, int control, int target);

/// Applies `gate` with angles resolved through its slot bindings:
/// angle_i = params[gate.slots[i]].
void apply_gate(Statevector& state, const GateSpec& gate, std::span<const double> params);

/// The 15-parameter two-qubit block used as the convolution unit. Applies,
/// in order: U3(p0..p2) on a and U3(p3..p5) on b; CNOT(b->a); RZ(p6) on a and
/// RY(p7) on b; CNOT(a->b); RY(p8) on b; CNOT(b->a); U3(p9..p11) on a and
/// U3(p12..p14) on b.
void apply_su4_block(Statevector& state, int qubit_a, int qubit_b,
                     std::span<const double> params);

/// Tensor product of single-qubit Paulis acting on the named qubits, identity
/// elsewhere. axes[i] is one of 'X','Y','Z' and acts on qubits[i]; identity
/// factors are simply not listed. An empty term is the global identity.
struct PauliTerm {
    std::string axes;
    std::vector<int> qubits;

    /// Builds a term from a label like "IX" or "ZZ" over the given qubits
    /// (label[i] acts on target_qubits[i]); 'I' positions are dropped.
    static PauliTerm from_label(const std::string& label, std::span<const int> target_qubits);

    std::string label_on(std::span<const int> target_qubits) const;

    bool operator==(const PauliTerm&) const = default;
};

/// <psi| P |psi>, evaluated directly on the full statevector. Exact, no
/// sampling. Result is real for any Hermitian Pauli product.
double expectation(const Statevector& state, const PauliTerm& term);

/// dst += weight * (P src). Lets callers assemble weighted Pauli sums applied
/// to a state without materializing any operator matrix.
void accumulate_pauli(const Statevector& src, const PauliTerm& term, cdouble weight,
                      Statevector& dst);

/// 2^k x 2^k density operator over k kept qubits. Row-major entries;
/// keep-qubit 0 is the most significant bit of the reduced index.
struct DensityMatrix {
    int n_qubits = 0;
    std::vector<cdouble> entries;

    std::size_t dim() const { return std::size_t{1} << n_qubits; }
    cdouble at(std::size_t row, std::size_t col) const { return entries[row * dim() + col]; }
    cdouble trace() const;
};

/// Partial trace over every qubit not listed in keep_qubits. Test oracle:
/// production feature extraction evaluates Pauli expectations on the full
/// state instead, which is equivalent because pooled-out qubits are never
/// acted on again.
DensityMatrix reduced_density(const Statevector& state, std::span<const int> keep_qubits);

/// Tr(P rho), with term qubits indexing the reduced space. Built from dense
/// Pauli matrices, sharing no code with the statevector expectation path.
double expectation(const DensityMatrix& rho, const PauliTerm& term);

}  // namespace qsvdd
