#include <benchmark/benchmark.h>

#include <vector>

#include "qsvdd/circuit.hpp"
#include "qsvdd/dataset.hpp"
#include "qsvdd/detection.hpp"
#include "qsvdd/rng.hpp"
#include "qsvdd/statevector.hpp"
#include "qsvdd/training.hpp"

namespace {

qsvdd::Statevector random_state(int n_qubits, std::uint64_t seed) {
    qsvdd::Rng rng(seed);
    std::vector<double> raw(std::size_t{1} << n_qubits);
    for (auto& v : raw) v = rng.uniform(0.05, 1.0);
    return qsvdd::amplitude_encode(raw);
}

void bm_gate_apply(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto sv = random_state(n, 7);
    double angle = 0.3;
    for (auto _ : state) {
        qsvdd::apply_ry(sv, n / 2, angle);
        angle += 1e-6;
        benchmark::DoNotOptimize(sv.amps.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_gate_apply)->Arg(8)->Arg(12)->Arg(16);

void bm_su4_block(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto sv = random_state(n, 11);
    qsvdd::Rng rng(3);
    std::vector<double> params(15);
    for (auto& p : params) p = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        qsvdd::apply_su4_block(sv, 0, n / 2, params);
        benchmark::DoNotOptimize(sv.amps.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_su4_block)->Arg(8)->Arg(12);

void bm_execute_qcnn8(benchmark::State& state) {
    const auto program = qsvdd::build_qcnn(qsvdd::QcnnShape{8, 2, true, true});
    const auto params = qsvdd::init_params(program.slot_count, 5);
    const auto input = random_state(8, 13);
    for (auto _ : state) {
        auto out = qsvdd::execute(program, params.values, input);
        benchmark::DoNotOptimize(out.amps.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_execute_qcnn8);

void bm_feature_map(benchmark::State& state) {
    const auto program = qsvdd::build_qcnn(qsvdd::QcnnShape{8, 2, true, true});
    const auto params = qsvdd::init_params(program.slot_count, 5);
    const auto observables =
        qsvdd::bind_observables(qsvdd::default_observable_set(9), program.output_qubits);
    const auto input = random_state(8, 17);
    for (auto _ : state) {
        auto features = qsvdd::feature_map(program, params.values, observables, input);
        benchmark::DoNotOptimize(features.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_feature_map);

void bm_adjoint_gradient(benchmark::State& state) {
    const auto program = qsvdd::build_qcnn(qsvdd::QcnnShape{8, 2, true, true});
    const auto params = qsvdd::init_params(program.slot_count, 5);
    const auto observables =
        qsvdd::bind_observables(qsvdd::default_observable_set(9), program.output_qubits);
    const auto loss = qsvdd::LossSpec::qsvdd(observables, std::vector<double>(9, 0.0));
    const std::vector<qsvdd::Statevector> batch{random_state(8, 19)};
    for (auto _ : state) {
        auto grads = qsvdd::grad_adjoint(program, params.values, batch, loss);
        benchmark::DoNotOptimize(grads.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_adjoint_gradient);

}  // namespace

BENCHMARK_MAIN();
