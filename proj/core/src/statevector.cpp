#include "qsvdd/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace qsvdd {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

void check_qubit(const Statevector& state, int qubit, const char* who) {
    if (qubit < 0 || qubit >= state.n_qubits) {
        throw std::invalid_argument(std::string(who) + ": qubit index " +
                                    std::to_string(qubit) + " out of range for " +
                                    std::to_string(state.n_qubits) + " qubits");
    }
}

struct Mat2 {
    cdouble u00, u01, u10, u11;

    Mat2 operator*(const Mat2& rhs) const {
        return {u00 * rhs.u00 + u01 * rhs.u10, u00 * rhs.u01 + u01 * rhs.u11,
                u10 * rhs.u00 + u11 * rhs.u10, u10 * rhs.u01 + u11 * rhs.u11};
    }
};

Mat2 rx_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {{c, 0}, {0, -s}, {0, -s}, {c, 0}};
}

Mat2 ry_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {{c, 0}, {-s, 0}, {s, 0}, {c, 0}};
}

Mat2 rz_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {{c, -s}, {0, 0}, {0, 0}, {c, s}};
}

Mat2 u3_matrix(double theta, double phi, double delta) {
    return rz_matrix(phi) * rx_matrix(-kHalfPi) * rz_matrix(theta) * rx_matrix(kHalfPi) *
           rz_matrix(delta);
}

void apply_1q(Statevector& state, int qubit, const Mat2& u) {
    const std::size_t stride = std::size_t{1} << (state.n_qubits - 1 - qubit);
    cdouble* amps = state.amps.data();
    for (std::size_t block = 0; block < state.dim(); block += 2 * stride) {
        for (std::size_t i = block; i < block + stride; ++i) {
            const cdouble a0 = amps[i];
            const cdouble a1 = amps[i + stride];
            amps[i] = u.u00 * a0 + u.u01 * a1;
            amps[i + stride] = u.u10 * a0 + u.u11 * a1;
        }
    }
}

}  // namespace

double Statevector::norm_sq() const {
    double total = 0.0;
    for (const cdouble& a : amps) {
        total += std::norm(a);
    }
    return total;
}

Statevector init_zero_state(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("init_zero_state: n_qubits must be in [1, " +
                                    std::to_string(kMaxQubits) + "], got " +
                                    std::to_string(n_qubits));
    }
    Statevector state;
    state.n_qubits = n_qubits;
    state.amps.assign(std::size_t{1} << n_qubits, cdouble{0.0, 0.0});
    state.amps[0] = cdouble{1.0, 0.0};
    return state;
}

const char* gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::U3: return "U3";
        case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

GateKind gate_kind_from_name(const std::string& name) {
    if (name == "RX") return GateKind::RX;
    if (name == "RY") return GateKind::RY;
    if (name == "RZ") return GateKind::RZ;
    if (name == "U3") return GateKind::U3;
    if (name == "CNOT") return GateKind::CNOT;
    throw std::invalid_argument("unknown gate kind: " + name);
}

int gate_arity(GateKind kind) { return kind == GateKind::CNOT ? 2 : 1; }

int gate_param_count(GateKind kind) {
    switch (kind) {
        case GateKind::U3: return 3;
        case GateKind::CNOT: return 0;
        default: return 1;
    }
}

void apply_rx(Statevector& state, int qubit, double theta) {
    check_qubit(state, qubit, "apply_rx");
    apply_1q(state, qubit, rx_matrix(theta));
}

void apply_ry(Statevector& state, int qubit, double theta) {
    check_qubit(state, qubit, "apply_ry");
    apply_1q(state, qubit, ry_matrix(theta));
}

void apply_rz(Statevector& state, int qubit, double theta) {
    check_qubit(state, qubit, "apply_rz");
    // Diagonal: no pair mixing needed.
    const cdouble d0{std::cos(theta / 2), -std::sin(theta / 2)};
    const cdouble d1 = std::conj(d0);
    const std::size_t mask = std::size_t{1} << (state.n_qubits - 1 - qubit);
    for (std::size_t i = 0; i < state.dim(); ++i) {
        state.amps[i] *= (i & mask) ? d1 : d0;
    }
}

void apply_u3(Statevector& state, int qubit, double theta, double phi, double delta) {
    check_qubit(state, qubit, "apply_u3");
    apply_1q(state, qubit, u3_matrix(theta, phi, delta));
}

void apply_cnot(Statevector& state, int control, int target) {
    check_qubit(state, control, "apply_cnot");
    check_qubit(state, target, "apply_cnot");
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control and target must differ");
    }
    const std::size_t cmask = std::size_t{1} << (state.n_qubits - 1 - control);
    const std::size_t tmask = std::size_t{1} << (state.n_qubits - 1 - target);
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::swap(state.amps[i], state.amps[i | tmask]);
        }
    }
}

void apply_gate(Statevector& state, const GateSpec& gate, std::span<const double> params) {
    const auto angle = [&](int pos) {
        const int slot = gate.slots[pos];
        if (slot < 0 || static_cast<std::size_t>(slot) >= params.size()) {
            throw std::invalid_argument("apply_gate: slot binding out of range");
        }
        return params[static_cast<std::size_t>(slot)];
    };
    switch (gate.kind) {
        case GateKind::RX: apply_rx(state, gate.qubits[0], angle(0)); break;
        case GateKind::RY: apply_ry(state, gate.qubits[0], angle(0)); break;
        case GateKind::RZ: apply_rz(state, gate.qubits[0], angle(0)); break;
        case GateKind::U3:
            apply_u3(state, gate.qubits[0], angle(0), angle(1), angle(2));
            break;
        case GateKind::CNOT: apply_cnot(state, gate.qubits[0], gate.qubits[1]); break;
    }
}

void apply_su4_block(Statevector& state, int qubit_a, int qubit_b,
                     std::span<const double> params) {
    if (params.size() != 15) {
        throw std::invalid_argument("apply_su4_block: expected 15 parameters, got " +
                                    std::to_string(params.size()));
    }
    check_qubit(state, qubit_a, "apply_su4_block");
    check_qubit(state, qubit_b, "apply_su4_block");
    if (qubit_a == qubit_b) {
        throw std::invalid_argument("apply_su4_block: qubits must differ");
    }
    apply_u3(state, qubit_a, params[0], params[1], params[2]);
    apply_u3(state, qubit_b, params[3], params[4], params[5]);
    apply_cnot(state, qubit_b, qubit_a);
    apply_rz(state, qubit_a, params[6]);
    apply_ry(state, qubit_b, params[7]);
    apply_cnot(state, qubit_a, qubit_b);
    apply_ry(state, qubit_b, params[8]);
    apply_cnot(state, qubit_b, qubit_a);
    apply_u3(state, qubit_a, params[9], params[10], params[11]);
    apply_u3(state, qubit_b, params[12], params[13], params[14]);
}

PauliTerm PauliTerm::from_label(const std::string& label, std::span<const int> target_qubits) {
    if (label.size() != target_qubits.size()) {
        throw std::invalid_argument("PauliTerm: label \"" + label + "\" needs " +
                                    std::to_string(label.size()) + " target qubits, got " +
                                    std::to_string(target_qubits.size()));
    }
    PauliTerm term;
    for (std::size_t i = 0; i < label.size(); ++i) {
        const char axis = label[i];
        if (axis == 'I') {
            continue;
        }
        if (axis != 'X' && axis != 'Y' && axis != 'Z') {
            throw std::invalid_argument("PauliTerm: invalid axis '" + std::string(1, axis) +
                                        "' in label \"" + label + "\"");
        }
        term.axes.push_back(axis);
        term.qubits.push_back(target_qubits[i]);
    }
    for (std::size_t i = 0; i < term.qubits.size(); ++i) {
        for (std::size_t j = i + 1; j < term.qubits.size(); ++j) {
            if (term.qubits[i] == term.qubits[j]) {
                throw std::invalid_argument("PauliTerm: duplicate qubit " +
                                            std::to_string(term.qubits[i]));
            }
        }
    }
    return term;
}

std::string PauliTerm::label_on(std::span<const int> target_qubits) const {
    std::string label(target_qubits.size(), 'I');
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        const auto it = std::find(target_qubits.begin(), target_qubits.end(), qubits[i]);
        if (it == target_qubits.end()) {
            throw std::invalid_argument("PauliTerm: qubit " + std::to_string(qubits[i]) +
                                        " not among the requested targets");
        }
        label[static_cast<std::size_t>(it - target_qubits.begin())] = axes[i];
    }
    return label;
}

namespace {

// Bitmask form of a Pauli product: P|x> = coef(x) |x ^ flip| with
// coef(x) = prod over Y qubits of (bit ? i : -i) times prod over Z qubits of
// (bit ? -1 : +1).
struct PauliMasks {
    std::size_t flip = 0;
    std::size_t ymask = 0;
    std::size_t zmask = 0;
    int y_count = 0;
};

PauliMasks compile_pauli(const Statevector& state, const PauliTerm& term, const char* who) {
    PauliMasks m;
    for (std::size_t i = 0; i < term.qubits.size(); ++i) {
        check_qubit(state, term.qubits[i], who);
        const std::size_t bit = std::size_t{1} << (state.n_qubits - 1 - term.qubits[i]);
        switch (term.axes[i]) {
            case 'X': m.flip |= bit; break;
            case 'Y': m.flip |= bit; m.ymask |= bit; break;
            case 'Z': m.zmask |= bit; break;
            default:
                throw std::invalid_argument(std::string(who) + ": malformed Pauli term");
        }
    }
    m.y_count = static_cast<int>(std::popcount(m.ymask));
    return m;
}

cdouble pauli_coef(const PauliMasks& m, std::size_t x) {
    const int zparity = std::popcount(x & m.zmask) & 1;
    const int y_zeros = m.y_count - std::popcount(x & m.ymask);
    cdouble coef = (zparity ? -1.0 : 1.0) * ((y_zeros & 1) ? -1.0 : 1.0);
    switch (m.y_count & 3) {
        case 1: coef *= cdouble{0.0, 1.0}; break;
        case 2: coef *= -1.0; break;
        case 3: coef *= cdouble{0.0, -1.0}; break;
        default: break;
    }
    return coef;
}

}  // namespace

double expectation(const Statevector& state, const PauliTerm& term) {
    const PauliMasks m = compile_pauli(state, term, "expectation");
    double total = 0.0;
    for (std::size_t x = 0; x < state.dim(); ++x) {
        total += (std::conj(state.amps[x]) * pauli_coef(m, x) * state.amps[x ^ m.flip]).real();
    }
    return total;
}

void accumulate_pauli(const Statevector& src, const PauliTerm& term, cdouble weight,
                      Statevector& dst) {
    if (dst.n_qubits != src.n_qubits || dst.amps.size() != src.amps.size()) {
        throw std::invalid_argument("accumulate_pauli: src and dst shapes differ");
    }
    const PauliMasks m = compile_pauli(src, term, "accumulate_pauli");
    for (std::size_t x = 0; x < src.dim(); ++x) {
        dst.amps[x] += weight * pauli_coef(m, x) * src.amps[x ^ m.flip];
    }
}

cdouble DensityMatrix::trace() const {
    cdouble total{0.0, 0.0};
    for (std::size_t i = 0; i < dim(); ++i) {
        total += at(i, i);
    }
    return total;
}

DensityMatrix reduced_density(const Statevector& state, std::span<const int> keep_qubits) {
    if (keep_qubits.empty()) {
        throw std::invalid_argument("reduced_density: keep list must be nonempty");
    }
    for (std::size_t i = 0; i < keep_qubits.size(); ++i) {
        check_qubit(state, keep_qubits[i], "reduced_density");
        for (std::size_t j = i + 1; j < keep_qubits.size(); ++j) {
            if (keep_qubits[i] == keep_qubits[j]) {
                throw std::invalid_argument("reduced_density: duplicate keep qubit " +
                                            std::to_string(keep_qubits[i]));
            }
        }
    }
    const int k = static_cast<int>(keep_qubits.size());
    const int n = state.n_qubits;
    std::vector<int> env;
    for (int q = 0; q < n; ++q) {
        if (std::find(keep_qubits.begin(), keep_qubits.end(), q) == keep_qubits.end()) {
            env.push_back(q);
        }
    }
    const auto compose = [&](std::size_t kept, std::size_t rest) {
        std::size_t full = 0;
        for (int j = 0; j < k; ++j) {
            if ((kept >> (k - 1 - j)) & 1U) {
                full |= std::size_t{1} << (n - 1 - keep_qubits[j]);
            }
        }
        for (std::size_t j = 0; j < env.size(); ++j) {
            if ((rest >> (env.size() - 1 - j)) & 1U) {
                full |= std::size_t{1} << (n - 1 - env[j]);
            }
        }
        return full;
    };

    DensityMatrix rho;
    rho.n_qubits = k;
    rho.entries.assign(std::size_t{1} << (2 * k), cdouble{0.0, 0.0});
    const std::size_t kept_dim = std::size_t{1} << k;
    const std::size_t env_dim = std::size_t{1} << env.size();
    for (std::size_t row = 0; row < kept_dim; ++row) {
        for (std::size_t col = 0; col < kept_dim; ++col) {
            cdouble sum{0.0, 0.0};
            for (std::size_t rest = 0; rest < env_dim; ++rest) {
                sum += state.amps[compose(row, rest)] * std::conj(state.amps[compose(col, rest)]);
            }
            rho.entries[row * kept_dim + col] = sum;
        }
    }
    return rho;
}

double expectation(const DensityMatrix& rho, const PauliTerm& term) {
    const int k = rho.n_qubits;
    const std::size_t dim = rho.dim();
    // Dense 2^k x 2^k Pauli matrix, assembled entry by entry from the
    // single-qubit factors.
    const auto factor = [&](char axis, int row_bit, int col_bit) -> cdouble {
        switch (axis) {
            case 'I': return row_bit == col_bit ? 1.0 : 0.0;
            case 'X': return row_bit != col_bit ? 1.0 : 0.0;
            case 'Y':
                if (row_bit == col_bit) return 0.0;
                return row_bit ? cdouble{0.0, 1.0} : cdouble{0.0, -1.0};
            case 'Z':
                if (row_bit != col_bit) return 0.0;
                return row_bit ? -1.0 : 1.0;
            default: throw std::invalid_argument("expectation: malformed Pauli term");
        }
    };
    std::string axes_by_pos(static_cast<std::size_t>(k), 'I');
    for (std::size_t i = 0; i < term.qubits.size(); ++i) {
        if (term.qubits[i] < 0 || term.qubits[i] >= k) {
            throw std::invalid_argument("expectation: Pauli qubit outside reduced space");
        }
        axes_by_pos[static_cast<std::size_t>(term.qubits[i])] = term.axes[i];
    }
    cdouble total{0.0, 0.0};
    for (std::size_t row = 0; row < dim; ++row) {
        for (std::size_t col = 0; col < dim; ++col) {
            cdouble p{1.0, 0.0};
            for (int pos = 0; pos < k && p != cdouble{0.0, 0.0}; ++pos) {
                const int rb = static_cast<int>((row >> (k - 1 - pos)) & 1U);
                const int cb = static_cast<int>((col >> (k - 1 - pos)) & 1U);
                p *= factor(axes_by_pos[static_cast<std::size_t>(pos)], rb, cb);
            }
            total += p * rho.at(col, row);  // Tr(P rho) = sum_{r,c} P[r,c] rho[c,r]
        }
    }
    return total.real();
}

}  // namespace qsvdd
