#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "vqc/grape.hpp"
#include "vqc/mintime.hpp"
#include "vqc/pipeline.hpp"

namespace vqc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a batch run needs besides the circuit.
struct RunConfig {
  Device device;
  GrapeConfig grape;
  MinTimeConfig mintime;
  HyperGrid grid = HyperGrid::defaults();
  int tune_iterations = 1000;  // GRAPE budget per grid point while tuning
  int max_block_width = 4;
};

/// Parses flat `key = value` lines; `#` starts a comment. Recognized keys:
///
///   charge_bound_ghz, flux_bound_ghz, coupling_bound_ghz   control bounds
///   topology            `interaction`, `grid` or an edge list such as `0-1,1-2,2-3`
///   dt_ns, sample_rate_divisor, target_fidelity, max_iterations,
///   learning_rate, decay_rate, penalty_weight, seed, max_dense_width
///   precision_ns, doubling_cap                             minimal-time search
///   learning_rates, decay_rates                            comma-separated tuning grid
///   tune_iterations, max_block_width
///
/// Unknown keys and malformed values raise ConfigError with the line number.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

}  // namespace vqc
