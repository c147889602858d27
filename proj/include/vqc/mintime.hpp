#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "vqc/grape.hpp"

namespace vqc {

struct MinTimeConfig {
  double precision = 0.3;               // ns, final bisection window
  std::optional<double> upper_bound;    // explicit M in ns; unset means use the gate baseline
  double doubling_cap = 4.0;            // largest multiple of M tried when M is infeasible

  void validate(double dt) const;
};

struct Probe {
  double time = 0.0;
  bool converged = false;
  double fidelity = 0.0;
  int iterations = 0;
};

struct MinTimeResult {
  double minimal_time = 0.0;
  ControlPulse pulse;
  double fidelity = 1.0;
  std::vector<Probe> probes;
  int grape_runs = 0;
  long total_iterations = 0;
};

/// Raised when even the largest doubled upper bound fails to converge.
class NoConvergenceError : public std::runtime_error {
 public:
  NoConvergenceError(const std::string& what, std::vector<Probe> probes)
      : std::runtime_error(what), probes_(std::move(probes)) {}
  const std::vector<Probe>& probes() const { return probes_; }

 private:
  std::vector<Probe> probes_;
};

/// Seed for the probe with the given index, derived from the base seed.
std::uint64_t probe_seed(std::uint64_t base_seed, int probe_index);

/// Rounds up to the next multiple of `dt` (with a small tolerance for values already on the grid).
double ceil_to_grid(double t, double dt);

/// Shortest total time at which GRAPE reaches the target fidelity, by bisection
/// between 0 and a feasible upper bound. Every probe is a fresh GRAPE run.
MinTimeResult minimal_pulse_time(const CMatrix& target, const std::vector<ControlField>& controls,
                                 const GrapeConfig& grape_config, const MinTimeConfig& config,
                                 double baseline_runtime);

MinTimeResult minimal_pulse_time(const CMatrix& target, const HamiltonianSpec& spec,
                                 const GrapeConfig& grape_config, const MinTimeConfig& config,
                                 double baseline_runtime);

}  // namespace vqc
