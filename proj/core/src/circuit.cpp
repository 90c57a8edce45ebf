#include "qsvdd/circuit.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qsvdd {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;
constexpr const char* kProgramSchema = "qsvdd.program.v1";

std::uint32_t mask_of(const std::vector<int>& qubits) {
    std::uint32_t mask = 0;
    for (int q : qubits) {
        mask |= std::uint32_t{1} << q;
    }
    return mask;
}

struct Builder {
    CircuitProgram prog;
    std::uint32_t active = 0;

    void push(const GateSpec& gate) {
        prog.gates.push_back(gate);
        prog.active_masks.push_back(active);
    }

    // The 15-parameter two-qubit block: boundary U3 pairs around a
    // CNOT / RZ+RY / CNOT / RY / CNOT core.
    void su4(int a, int b, int base) {
        push(GateSpec::u3(a, base + 0, base + 1, base + 2));
        push(GateSpec::u3(b, base + 3, base + 4, base + 5));
        push(GateSpec::cnot(b, a));
        push(GateSpec::rz(a, base + 6));
        push(GateSpec::ry(b, base + 7));
        push(GateSpec::cnot(a, b));
        push(GateSpec::ry(b, base + 8));
        push(GateSpec::cnot(b, a));
        push(GateSpec::u3(a, base + 9, base + 10, base + 11));
        push(GateSpec::u3(b, base + 12, base + 13, base + 14));
    }
};

void check_built_program(const CircuitProgram& prog) {
    std::vector<bool> used(static_cast<std::size_t>(prog.slot_count), false);
    for (std::size_t g = 0; g < prog.gates.size(); ++g) {
        const GateSpec& gate = prog.gates[g];
        const std::uint32_t active = prog.active_masks[g];
        for (int i = 0; i < gate_arity(gate.kind); ++i) {
            if (!(active >> gate.qubits[i] & 1U)) {
                throw std::logic_error("program touches a pooled-out qubit");
            }
        }
        for (int i = 0; i < gate_param_count(gate.kind); ++i) {
            const int slot = gate.slots[i];
            if (slot < 0 || slot >= prog.slot_count) {
                throw std::logic_error("slot binding outside slot_count");
            }
            used[static_cast<std::size_t>(slot)] = true;
        }
    }
    if (!std::all_of(used.begin(), used.end(), [](bool u) { return u; })) {
        throw std::logic_error("unused parameter slot");
    }
}

}  // namespace

const char* program_kind_name(ProgramKind kind) {
    switch (kind) {
        case ProgramKind::Custom: return "custom";
        case ProgramKind::Qcnn: return "qcnn";
        case ProgramKind::Qae: return "qae";
    }
    return "?";
}

ProgramKind program_kind_from_name(const std::string& name) {
    if (name == "custom") return ProgramKind::Custom;
    if (name == "qcnn") return ProgramKind::Qcnn;
    if (name == "qae") return ProgramKind::Qae;
    throw std::invalid_argument("unknown program kind: " + name);
}

CircuitProgram build_qcnn(const QcnnShape& shape) {
    const int n = shape.n_qubits;
    if (n < 4 || !std::has_single_bit(static_cast<unsigned>(n))) {
        throw std::invalid_argument("build_qcnn: n_qubits must be a power of two >= 4, got " +
                                    std::to_string(n));
    }
    if (n > kMaxQubits) {
        throw std::invalid_argument("build_qcnn: n_qubits exceeds " + std::to_string(kMaxQubits));
    }
    if (shape.convs_per_block < 1) {
        throw std::invalid_argument("build_qcnn: convs_per_block must be >= 1");
    }

    Builder b;
    b.prog.n_qubits = n;
    b.prog.kind = ProgramKind::Qcnn;

    std::vector<int> ring(static_cast<std::size_t>(n));
    std::iota(ring.begin(), ring.end(), 0);
    b.active = mask_of(ring);

    int next_slot = 0;
    const auto conv_layer = [&] {
        const int layer_base = next_slot;
        if (shape.share_params) {
            next_slot += 15;
        }
        const auto block = [&](int qa, int qb) {
            int base = layer_base;
            if (!shape.share_params) {
                base = next_slot;
                next_slot += 15;
            }
            b.su4(qa, qb, base);
        };
        const std::size_t m = ring.size();
        if (m == 2) {
            block(ring[0], ring[1]);
            return;
        }
        for (std::size_t i = 0; i + 1 < m; i += 2) {
            block(ring[i], ring[i + 1]);
        }
        for (std::size_t i = 1; i + 1 < m; i += 2) {
            block(ring[i], ring[i + 1]);
        }
        block(ring[m - 1], ring[0]);  // periodic boundary
    };

    while (ring.size() > 2) {
        for (int c = 0; c < shape.convs_per_block; ++c) {
            conv_layer();
        }
        // Pooling keeps the even-indexed active qubits; the rest are never
        // touched again.
        std::vector<int> kept;
        for (std::size_t i = 0; i < ring.size(); i += 2) {
            kept.push_back(ring[i]);
        }
        ring = std::move(kept);
        b.active = mask_of(ring);
    }
    if (shape.final_conv) {
        conv_layer();
    }

    b.prog.slot_count = next_slot;
    b.prog.output_qubits = ring;
    check_built_program(b.prog);
    return b.prog;
}

CircuitProgram build_qae(const QaeShape& shape) {
    if (shape.n_t <= 0 || shape.n_t >= shape.n) {
        throw std::invalid_argument("build_qae: need 0 < n_t < n, got n_t=" +
                                    std::to_string(shape.n_t) + " n=" + std::to_string(shape.n));
    }
    if (shape.l < 1) {
        throw std::invalid_argument("build_qae: need l >= 1, got " + std::to_string(shape.l));
    }
    if (shape.n > kMaxQubits) {
        throw std::invalid_argument("build_qae: n exceeds " + std::to_string(kMaxQubits));
    }

    Builder b;
    b.prog.n_qubits = shape.n;
    b.prog.kind = ProgramKind::Qae;
    b.active = (std::uint32_t{1} << shape.n) - 1;

    int slot = 0;
    for (int q = 0; q < shape.n_t; ++q) {
        b.push(GateSpec::ry(q, slot++));
    }
    for (int layer = 0; layer < shape.l; ++layer) {
        for (int q = 0; q < shape.n; ++q) {
            b.push(GateSpec::ry(q, slot++));
        }
        for (int i = 0; i < shape.n_t; ++i) {
            for (int j = i + 1; j < shape.n_t; ++j) {
                b.push(GateSpec::cnot(i, j));
            }
        }
        for (int i = 0; i < shape.n_t; ++i) {
            for (int j = shape.n_t; j < shape.n; ++j) {
                b.push(GateSpec::cnot(i, j));
            }
        }
    }

    b.prog.slot_count = slot;
    for (int q = shape.n_t; q < shape.n; ++q) {
        b.prog.output_qubits.push_back(q);
    }
    check_built_program(b.prog);
    return b.prog;
}

int count_params(const CircuitProgram& program) { return program.slot_count; }

int count_depth(const CircuitProgram& program) {
    if (program.kind == ProgramKind::Qae) {
        // One unit per RY layer, one per CNOT. A layer ends when a qubit
        // repeats, so the opening trash layer and the first full layer stay
        // distinct. Recovers 1 + (C(n_t,2) + n_t*(n-n_t) + 1)*l from the list.
        int depth = 0;
        std::uint32_t layer_mask = 0;
        for (const GateSpec& gate : program.gates) {
            if (gate.kind == GateKind::RY) {
                const std::uint32_t bit = std::uint32_t{1} << gate.qubits[0];
                if (layer_mask == 0 || (layer_mask & bit)) {
                    ++depth;
                    layer_mask = 0;
                }
                layer_mask |= bit;
            } else {
                ++depth;
                layer_mask = 0;
            }
        }
        return depth;
    }
    // Earliest-stage schedule: a gate starts right after its qubits free up.
    std::vector<int> busy_until(static_cast<std::size_t>(program.n_qubits), 0);
    int depth = 0;
    for (const GateSpec& gate : program.gates) {
        int stage = 0;
        for (int i = 0; i < gate_arity(gate.kind); ++i) {
            stage = std::max(stage, busy_until[static_cast<std::size_t>(gate.qubits[i])]);
        }
        ++stage;
        for (int i = 0; i < gate_arity(gate.kind); ++i) {
            busy_until[static_cast<std::size_t>(gate.qubits[i])] = stage;
        }
        depth = std::max(depth, stage);
    }
    return depth;
}

Statevector execute(const CircuitProgram& program, std::span<const double> params,
                    const Statevector& input) {
    if (static_cast<int>(params.size()) != program.slot_count) {
        throw std::invalid_argument("execute: expected " + std::to_string(program.slot_count) +
                                    " parameters, got " + std::to_string(params.size()));
    }
    if (input.n_qubits != program.n_qubits) {
        throw std::invalid_argument("execute: program is on " +
                                    std::to_string(program.n_qubits) + " qubits, input has " +
                                    std::to_string(input.n_qubits));
    }
    Statevector state = input;
    for (const GateSpec& gate : program.gates) {
        apply_gate(state, gate, params);
    }
    return state;
}

std::vector<LoweredGate> lower_program(const CircuitProgram& program) {
    std::vector<LoweredGate> out;
    out.reserve(program.gates.size() * 2);
    for (const GateSpec& gate : program.gates) {
        const int q = gate.qubits[0];
        switch (gate.kind) {
            case GateKind::RX:
            case GateKind::RY:
            case GateKind::RZ:
                out.push_back({gate.kind, q, -1, gate.slots[0], 0.0});
                break;
            case GateKind::U3:
                // Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(delta), applied
                // right to left; slots are (theta, phi, delta).
                out.push_back({GateKind::RZ, q, -1, gate.slots[2], 0.0});
                out.push_back({GateKind::RX, q, -1, -1, kHalfPi});
                out.push_back({GateKind::RZ, q, -1, gate.slots[0], 0.0});
                out.push_back({GateKind::RX, q, -1, -1, -kHalfPi});
                out.push_back({GateKind::RZ, q, -1, gate.slots[1], 0.0});
                break;
            case GateKind::CNOT:
                out.push_back({GateKind::CNOT, gate.qubits[0], gate.qubits[1], -1, 0.0});
                break;
        }
    }
    return out;
}

void apply_lowered(Statevector& state, const LoweredGate& gate,
                   std::span<const double> params) {
    if (gate.kind == GateKind::CNOT) {
        apply_cnot(state, gate.q0, gate.q1);
        return;
    }
    const double angle =
        gate.slot >= 0 ? params[static_cast<std::size_t>(gate.slot)] : gate.fixed_angle;
    switch (gate.kind) {
        case GateKind::RX: apply_rx(state, gate.q0, angle); break;
        case GateKind::RY: apply_ry(state, gate.q0, angle); break;
        case GateKind::RZ: apply_rz(state, gate.q0, angle); break;
        default: throw std::logic_error("apply_lowered: unexpected gate kind");
    }
}

std::string to_json(const CircuitProgram& program) {
    nlohmann::json doc;
    doc["schema"] = kProgramSchema;
    doc["kind"] = program_kind_name(program.kind);
    doc["n_qubits"] = program.n_qubits;
    doc["slot_count"] = program.slot_count;
    doc["output_qubits"] = program.output_qubits;
    doc["active_masks"] = program.active_masks;
    nlohmann::json gates = nlohmann::json::array();
    for (const GateSpec& gate : program.gates) {
        nlohmann::json g;
        g["g"] = gate_name(gate.kind);
        g["q"] = std::vector<int>(gate.qubits.begin(),
                                  gate.qubits.begin() + gate_arity(gate.kind));
        if (gate_param_count(gate.kind) > 0) {
            g["s"] = std::vector<int>(gate.slots.begin(),
                                      gate.slots.begin() + gate_param_count(gate.kind));
        }
        gates.push_back(std::move(g));
    }
    doc["gates"] = std::move(gates);
    return doc.dump(2);
}

CircuitProgram program_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("program_from_json: ") + err.what());
    }
    if (!doc.contains("schema") || doc["schema"] != kProgramSchema) {
        throw std::invalid_argument(std::string("program_from_json: expected schema ") +
                                    kProgramSchema);
    }
    CircuitProgram prog;
    prog.kind = program_kind_from_name(doc.at("kind").get<std::string>());
    prog.n_qubits = doc.at("n_qubits").get<int>();
    prog.slot_count = doc.at("slot_count").get<int>();
    prog.output_qubits = doc.at("output_qubits").get<std::vector<int>>();
    prog.active_masks = doc.at("active_masks").get<std::vector<std::uint32_t>>();
    if (prog.n_qubits < 1 || prog.n_qubits > kMaxQubits) {
        throw std::invalid_argument("program_from_json: n_qubits out of range");
    }
    for (const nlohmann::json& g : doc.at("gates")) {
        GateSpec gate;
        gate.kind = gate_kind_from_name(g.at("g").get<std::string>());
        const auto qubits = g.at("q").get<std::vector<int>>();
        if (static_cast<int>(qubits.size()) != gate_arity(gate.kind)) {
            throw std::invalid_argument("program_from_json: wrong qubit count for " +
                                        std::string(gate_name(gate.kind)));
        }
        for (std::size_t i = 0; i < qubits.size(); ++i) {
            if (qubits[i] < 0 || qubits[i] >= prog.n_qubits) {
                throw std::invalid_argument("program_from_json: qubit index out of range");
            }
            gate.qubits[i] = qubits[i];
        }
        const int n_params = gate_param_count(gate.kind);
        if (n_params > 0) {
            const auto slots = g.at("s").get<std::vector<int>>();
            if (static_cast<int>(slots.size()) != n_params) {
                throw std::invalid_argument("program_from_json: wrong slot count for " +
                                            std::string(gate_name(gate.kind)));
            }
            for (std::size_t i = 0; i < slots.size(); ++i) {
                gate.slots[i] = slots[i];
            }
        }
        prog.gates.push_back(gate);
    }
    if (prog.active_masks.size() != prog.gates.size()) {
        throw std::invalid_argument("program_from_json: active_masks length mismatch");
    }
    try {
        check_built_program(prog);
    } catch (const std::logic_error& err) {
        // Internal-invariant wording, but here it means bad input.
        throw std::invalid_argument(std::string("program_from_json: ") + err.what());
    }
    return prog;
}

std::string program_digest(const CircuitProgram& program) {
    // FNV-1a over the canonical serialization.
    const std::string text = to_json(program);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

std::string render_diagram(const CircuitProgram& program) {
    // Pack gates into earliest-possible stages, then print one column per
    // stage and one row per qubit.
    const int n = program.n_qubits;
    std::vector<int> busy_until(static_cast<std::size_t>(n), 0);
    std::vector<int> stage_of(program.gates.size(), 0);
    int n_stages = 0;
    for (std::size_t g = 0; g < program.gates.size(); ++g) {
        const GateSpec& gate = program.gates[g];
        int stage = 0;
        for (int i = 0; i < gate_arity(gate.kind); ++i) {
            stage = std::max(stage, busy_until[static_cast<std::size_t>(gate.qubits[i])]);
        }
        for (int i = 0; i < gate_arity(gate.kind); ++i) {
            busy_until[static_cast<std::size_t>(gate.qubits[i])] = stage + 1;
        }
        stage_of[g] = stage;
        n_stages = std::max(n_stages, stage + 1);
    }

    std::vector<std::vector<std::string>> cells(
        static_cast<std::size_t>(n), std::vector<std::string>(static_cast<std::size_t>(n_stages)));
    for (std::size_t g = 0; g < program.gates.size(); ++g) {
        const GateSpec& gate = program.gates[g];
        const std::size_t col = static_cast<std::size_t>(stage_of[g]);
        if (gate.kind == GateKind::CNOT) {
            const int control = gate.qubits[0];
            const int target = gate.qubits[1];
            cells[static_cast<std::size_t>(control)][col] = "o";
            cells[static_cast<std::size_t>(target)][col] = "X";
            for (int q = std::min(control, target) + 1; q < std::max(control, target); ++q) {
                auto& cell = cells[static_cast<std::size_t>(q)][col];
                if (cell.empty()) {
                    cell = "|";
                }
            }
        } else {
            std::ostringstream label;
            label << gate_name(gate.kind) << '(';
            for (int i = 0; i < gate_param_count(gate.kind); ++i) {
                if (i) label << ',';
                label << gate.slots[i];
            }
            label << ')';
            cells[static_cast<std::size_t>(gate.qubits[0])][col] = label.str();
        }
    }

    std::vector<std::size_t> widths(static_cast<std::size_t>(n_stages), 1);
    for (int q = 0; q < n; ++q) {
        for (std::size_t c = 0; c < static_cast<std::size_t>(n_stages); ++c) {
            widths[c] = std::max(widths[c], cells[static_cast<std::size_t>(q)][c].size());
        }
    }

    std::ostringstream out;
    for (int q = 0; q < n; ++q) {
        out << 'q' << q << ": ";
        if (q < 10 && n > 10) out << ' ';
        for (std::size_t c = 0; c < static_cast<std::size_t>(n_stages); ++c) {
            const std::string& cell = cells[static_cast<std::size_t>(q)][c];
            out << '-' << cell;
            for (std::size_t pad = cell.size(); pad < widths[c]; ++pad) {
                out << '-';
            }
        }
        out << "-\n";
    }
    return out.str();
}

}  // namespace qsvdd
