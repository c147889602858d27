#include "vqc/mintime.hpp"

#include <cmath>
#include <sstream>

namespace vqc {

void MinTimeConfig::validate(double dt) const {
  if (!(precision >= dt - 1e-12)) throw std::invalid_argument("mintime: precision must be >= dt");
  if (upper_bound && !(*upper_bound > 0.0)) {
    throw std::invalid_argument("mintime: explicit upper bound must be positive");
  }
  if (!(doubling_cap >= 1.0)) throw std::invalid_argument("mintime: doubling cap must be >= 1");
}

std::uint64_t probe_seed(std::uint64_t base_seed, int probe_index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(probe_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double ceil_to_grid(double t, double dt) {
  const double steps = std::ceil(t / dt - 1e-9);
  return std::max(0.0, steps) * dt;
}

MinTimeResult minimal_pulse_time(const CMatrix& target, const HamiltonianSpec& spec,
                                 const GrapeConfig& grape_config, const MinTimeConfig& config,
                                 double baseline_runtime) {
  return minimal_pulse_time(target, build_controls(spec, grape_config.max_dense_width), grape_config,
                            config, baseline_runtime);
}

MinTimeResult minimal_pulse_time(const CMatrix& target, const std::vector<ControlField>& controls,
                                 const GrapeConfig& grape_config, const MinTimeConfig& config,
                                 double baseline_runtime) {
  grape_config.validate();
  const double dt = grape_config.step();
  config.validate(dt);

  MinTimeResult result;
  result.pulse = ControlPulse::zeros(static_cast<int>(controls.size()), 0, dt);
  if (fidelity(CMatrix::Identity(target.rows(), target.cols()), target) >=
      grape_config.target_fidelity) {
    return result;
  }

  double upper = 0.0;
  if (config.upper_bound) {
    upper = *config.upper_bound;
  } else {
    if (!(baseline_runtime > 0.0)) {
      throw std::invalid_argument("mintime: gate-baseline upper bound needs a positive baseline runtime");
    }
    upper = baseline_runtime;
  }
  upper = std::max(ceil_to_grid(upper, dt), dt);

  int probe_index = 0;
  std::optional<GrapeResult> best;
  auto probe = [&](double time) {
    GrapeConfig cfg = grape_config;
    cfg.rng_seed = probe_seed(grape_config.rng_seed, probe_index++);
    GrapeResult r = grape_optimize(target, controls, cfg, time);
    result.probes.push_back({time, r.converged, r.fidelity, r.iterations_used});
    ++result.grape_runs;
    result.total_iterations += r.iterations_used;
    if (r.converged) best = std::move(r);
    return result.probes.back().converged;
  };

  double hi = upper;
  bool feasible = probe(hi);
  for (double multiple = 2.0; !feasible && multiple <= config.doubling_cap + 1e-9; multiple *= 2.0) {
    hi = ceil_to_grid(upper * multiple, dt);
    feasible = probe(hi);
  }
  if (!feasible) {
    std::ostringstream os;
    os << "no convergence up to " << hi << " ns (fidelity " << result.probes.back().fidelity << ")";
    throw NoConvergenceError(os.str(), result.probes);
  }

  double lo = 0.0;
  while (hi - lo > config.precision + 1e-9) {
    const double mid = ceil_to_grid(0.5 * (lo + hi), dt);
    if (mid >= hi - 1e-9) break;
    // An infeasible probe between feasible ones is optimizer noise; the window
    // still moves up and the probe stays in the log.
    if (probe(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  result.minimal_time = hi;
  result.pulse = best->pulse;
  result.fidelity = best->fidelity;
  return result;
}

}  // namespace vqc
