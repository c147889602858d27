#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqc/hamiltonian.hpp"
#include "vqc/kernels.hpp"
#include "vqc/linalg.hpp"

namespace vqc {

/// Piecewise-constant control amplitudes, one row per control field.
struct ControlPulse {
  double dt = 0.05;     // ns
  RMatrix amplitudes;   // fields x steps, rad/ns

  int n_fields() const { return static_cast<int>(amplitudes.rows()); }
  int n_steps() const { return static_cast<int>(amplitudes.cols()); }
  double total_time() const { return n_steps() * dt; }

  static ControlPulse zeros(int n_fields, int n_steps, double dt);
};

struct GrapeConfig {
  double target_fidelity = 0.999;
  int max_iterations = 1000;
  double learning_rate = 0.01;
  double decay_rate = 0.9999;  // per-iteration multiplier on the learning rate
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double penalty_weight = 1e-4;  // weight of the mean squared normalized amplitude
  std::uint64_t rng_seed = 1;
  double dt = 0.05;             // ns
  int sample_rate_divisor = 1;  // 20 reproduces 1 GSa/s at dt = 0.05 ns
  int max_dense_width = 6;
  kernels::Backend backend = kernels::Backend::parallel;

  double step() const { return dt * sample_rate_divisor; }
  void validate() const;
};

struct GrapeResult {
  ControlPulse pulse;
  double fidelity = 0.0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> cost_history;
};

/// Controls in the form the kernels consume. Throws std::invalid_argument for
/// non-Hermitian or complex generators.
kernels::Generators to_generators(const std::vector<ControlField>& controls);

/// Total propagator of `pulse` under `controls`.
CMatrix propagate(const ControlPulse& pulse, const std::vector<ControlField>& controls);

/// Phase-insensitive trace fidelity |Tr(target^dagger achieved)|^2 / d^2.
double fidelity(const CMatrix& achieved, const CMatrix& target);

/// GRAPE cost and its gradient. Amplitudes are u_f = bound_f * tanh(x_f); the
/// gradient is taken with respect to x.
struct CostGradient {
  double cost = 0.0;
  double fidelity = 0.0;
  RMatrix d_cost;  // fields x steps, d cost / d x
};

/// cost = (1 - F) + penalty_weight * mean((u / bound)^2)
CostGradient cost_gradient(const RMatrix& x, const std::vector<ControlField>& controls,
                           const kernels::Generators& gens, const CMatrix& target, double dt,
                           double penalty_weight, kernels::Backend backend);

/// Maps unconstrained parameters to bounded amplitudes.
RMatrix bounded_amplitudes(const RMatrix& x, const std::vector<ControlField>& controls);

/// Bounded ADAM descent on the GRAPE cost for a fixed total time. Stops as soon
/// as the exact fidelity reaches the target.
GrapeResult grape_optimize(const CMatrix& target, const HamiltonianSpec& spec,
                           const GrapeConfig& config, double total_time);

GrapeResult grape_optimize(const CMatrix& target, const std::vector<ControlField>& controls,
                           const GrapeConfig& config, double total_time);

/// Process-wide count of grape_optimize calls, for latency accounting and tests.
std::uint64_t grape_invocations();

/// Pulse export: {dt_ns, labels[], amplitudes[][], total_time_ns, fidelity}.
nlohmann::json pulse_to_json(const ControlPulse& pulse, const std::vector<std::string>& labels,
                             double fidelity);
ControlPulse pulse_from_json(const nlohmann::json& j);

}  // namespace vqc
