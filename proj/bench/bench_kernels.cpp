#include <benchmark/benchmark.h>

#include <random>

#include "vqc/circuit.hpp"
#include "vqc/grape.hpp"
#include "vqc/hamiltonian.hpp"
#include "vqc/kernels.hpp"

namespace {

using vqc::kernels::Backend;

struct Problem {
  std::vector<vqc::ControlField> controls;
  vqc::kernels::Generators gens;
  vqc::RMatrix amplitudes;
  vqc::CMatrix target;
};

Problem make_problem(int n_qubits, int steps) {
  Problem p;
  p.controls = vqc::build_controls(vqc::grid_spec(n_qubits));
  p.gens = vqc::to_generators(p.controls);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  p.amplitudes.resize(static_cast<Eigen::Index>(p.controls.size()), steps);
  for (Eigen::Index f = 0; f < p.amplitudes.rows(); ++f) {
    for (int k = 0; k < steps; ++k) p.amplitudes(f, k) = p.controls[f].bound * unit(rng);
  }
  p.target = vqc::CMatrix::Identity(p.gens.dim(), p.gens.dim());
  return p;
}

template <Backend backend>
void BM_Propagate(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(vqc::kernels::propagate(p.gens, p.amplitudes, 0.05, backend));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <Backend backend>
void BM_FidelityGradient(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        vqc::kernels::fidelity_gradient(p.gens, p.amplitudes, 0.05, p.target, backend));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

// Qubits x steps: a CX-sized block and a 4-qubit QAOA block.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({2, 76})->Args({3, 200})->Args({4, 500})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Propagate<Backend::serial>)->Apply(shapes);
BENCHMARK(BM_Propagate<Backend::parallel>)->Apply(shapes);
BENCHMARK(BM_FidelityGradient<Backend::serial>)->Apply(shapes);
BENCHMARK(BM_FidelityGradient<Backend::parallel>)->Apply(shapes);

BENCHMARK_MAIN();
