#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqc/circuit.hpp"
#include "vqc/grape.hpp"
#include "vqc/hamiltonian.hpp"
#include "vqc/mintime.hpp"
#include "vqc/partition.hpp"

namespace vqc {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which couplers a block's GRAPE problem may drive.
enum class Topology {
  Interaction,  // exactly the pairs the block's two-qubit gates act on
  Grid,         // a near-square grid over the block's qubits (1x2, 1x3, 2x2)
  Explicit,     // the register edges listed in Device::edges
};

std::string to_string(Topology t);

/// Control bounds plus the coupling topology.
struct Device {
  double charge_bound = ghz_to_rad_per_ns(0.1);
  double flux_bound = ghz_to_rad_per_ns(1.5);
  double coupling_bound = ghz_to_rad_per_ns(0.05);
  Topology topology = Topology::Interaction;
  std::vector<Edge> edges;  // register edges, Explicit only

  /// Hamiltonian for `local_circuit`, whose qubit k is register qubit `qubits[k]`.
  HamiltonianSpec local(const Circuit& local_circuit, std::span<const int> qubits) const;
  /// Same bounds on an explicit local edge list.
  HamiltonianSpec with_edges(int n_qubits, std::vector<Edge> local_edges) const;
  /// Whether a two-qubit gate may act on register qubits a and b.
  bool coupled(int a, int b) const;
};

/// Shortest-direction representative of an angle, in (-pi, pi].
double shortest_angle(double radians);

/// Closed-form single-qubit rotation on the [charge, flux] fields: a constant
/// drive for the shortest time on the dt grid. Zero rotations give an empty pulse.
ControlPulse analytic_rotation_pulse(GateKind kind, double angle, const Device& device, double dt);

enum class SegmentSource { Library, Cache, Analytic, RuntimeGrape };
std::string to_string(SegmentSource source);
SegmentSource parse_segment_source(const std::string& s);

/// A pulse on a few register qubits. `qubits` is in the pulse's local operand
/// order; `local_edges` are the couplings the pulse drives.
struct Segment {
  SegmentSource source = SegmentSource::Library;
  std::string label;  // gate name, block hash or block tag
  std::vector<int> qubits;
  std::vector<Edge> local_edges;
  double start_ns = 0.0;
  ControlPulse pulse;
  double fidelity = 1.0;  // against the segment's own target

  double duration() const { return pulse.total_time(); }
  double end() const { return start_ns + duration(); }
};

struct CompileStats {
  int grape_calls = 0;  // runtime GRAPE searches
  long iterations = 0;  // optimizer iterations spent at runtime
  double wall_ms = 0.0;
  std::optional<double> verified_fidelity;
};

struct CompiledSchedule {
  std::string mode;
  std::string circuit;
  int width = 0;
  double dt = 0.05;
  Device device;
  std::vector<Segment> segments;
  double total_duration = 0.0;
  CompileStats stats;
};

nlohmann::json schedule_to_json(const CompiledSchedule& schedule);
CompiledSchedule schedule_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Gate library

struct LibraryEntry {
  GateKind kind = GateKind::H;
  double angle = 0.0;  // pi for rotations
  ControlPulse pulse;
  double fidelity = 0.0;
  std::vector<Probe> probes;

  double duration() const { return pulse.total_time(); }
};

struct GatePulseLibrary {
  Device device;
  double dt = 0.05;
  std::map<GateKind, LibraryEntry> entries;

  const LibraryEntry& at(GateKind kind) const;
  GateTimes durations() const;
};

/// Minimal-time pulses for H, CX, SWAP, Rx(pi) and Rz(pi), each searched below
/// its reference duration. Throws PipelineError naming a gate that fails.
GatePulseLibrary build_gate_library(const Device& device, const GrapeConfig& grape_config,
                                    const MinTimeConfig& mintime_config);

/// Pulses at exactly the given durations, without a time search.
GatePulseLibrary build_gate_library_fixed(const Device& device, const GrapeConfig& grape_config,
                                          const GateTimes& durations = GateTimes::reference());

nlohmann::json library_to_json(const GatePulseLibrary& library);
GatePulseLibrary library_from_json(const nlohmann::json& j);
void save_library(const GatePulseLibrary& library, const std::filesystem::path& dir);
GatePulseLibrary load_library(const std::filesystem::path& dir);

/// Per-gate pulses placed as soon as possible; rotations by pi come from the
/// library, other angles from analytic_rotation_pulse, zero rotations vanish.
CompiledSchedule compile_gate_based(const Circuit& circuit, const Parametrization& params,
                                    const GatePulseLibrary& library);

// ---------------------------------------------------------------------------
// Pulse cache

/// Hex FNV-1a 64 over the block body and its local couplings.
std::string block_hash(const Block& block, const Device& device);

nlohmann::json plan_to_json(const PartitionPlan& plan, const Device& device);

struct CacheEntry {
  std::string hash;
  std::string body;
  int width = 0;
  std::string origin;  // "grape" or "gate_fallback"
  double duration = 0.0;
  double fidelity = 0.0;
  double baseline_ns = 0.0;
  std::vector<Probe> probes;
  std::vector<Segment> segments;  // local qubits, offsets from the block start
};

nlohmann::json cache_entry_to_json(const CacheEntry& entry);
CacheEntry cache_entry_from_json(const nlohmann::json& j);

/// Content-addressed pulses. With a directory each entry persists as
/// `<hash>.json`; existing entries are loaded on construction. Insertion of
/// distinct keys is safe from several threads and duplicates are ignored.
class PulseCache {
 public:
  PulseCache() = default;
  explicit PulseCache(std::filesystem::path dir);

  std::optional<CacheEntry> find(const std::string& hash) const;
  bool contains(const std::string& hash) const;
  /// Returns false if the hash was already present.
  bool insert(CacheEntry entry);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, CacheEntry> entries_;
};

struct PrecomputeStats {
  int fixed_blocks = 0;
  int compiled = 0;
  int cache_hits = 0;
  int fallbacks = 0;
  int grape_runs = 0;
  long iterations = 0;
  double wall_ms = 0.0;
};

/// Minimal-time pulses for every Fixed block of `plan` missing from the cache.
/// Blocks whose search fails or exceeds their gate-based runtime are cached as
/// their gate-based pulses. `jobs` > 1 compiles distinct blocks concurrently.
PrecomputeStats precompute_fixed_blocks(const PartitionPlan& plan, const Device& device,
                                        const GrapeConfig& grape_config,
                                        const MinTimeConfig& mintime_config,
                                        const GatePulseLibrary& library, PulseCache& cache,
                                        int jobs = 1);

inline PrecomputeStats precompute_strict(const PartitionPlan& plan, const Device& device,
                                         const GrapeConfig& grape_config,
                                         const MinTimeConfig& mintime_config,
                                         const GatePulseLibrary& library, PulseCache& cache,
                                         int jobs = 1) {
  return precompute_fixed_blocks(plan, device, grape_config, mintime_config, library, cache, jobs);
}

/// Cached Fixed pulses and analytic ParamGate pulses, concatenated serially.
/// Runs no optimizer. Throws PipelineError on a cache miss.
CompiledSchedule compile_strict(const PartitionPlan& plan, const PulseCache& cache,
                                const Parametrization& params, const Device& device, double dt);

/// Binds the circuit, splits it into blocks of at most `max_width` qubits and
/// searches a minimal-time pulse per block, concatenated serially.
CompiledSchedule compile_full_grape(const Circuit& circuit, const Parametrization& params,
                                    const GatePulseLibrary& library,
                                    const GrapeConfig& grape_config,
                                    const MinTimeConfig& mintime_config, int max_width = 4);

// ---------------------------------------------------------------------------
// Hyperparameter tuning

struct HyperGrid {
  std::vector<double> learning_rates;
  std::vector<double> decay_rates;

  /// 7 log-spaced learning rates in [1e-3, 1] x decay rates {0.999, 0.9999, 1}.
  static HyperGrid defaults();
  std::size_t size() const { return learning_rates.size() * decay_rates.size(); }
};

struct GridScore {
  double learning_rate = 0.0;
  double decay_rate = 0.0;
  double score = 0.0;            // mean infidelity above the target (0 when all converge)
  double mean_iterations = 0.0;  // the budget counts for runs that never converge
};

struct TunedEntry {
  double learning_rate = 0.0;
  double decay_rate = 0.0;
  double score = 0.0;
};

struct TuneResult {
  TunedEntry best;
  std::vector<GridScore> grid;
};

using TunedHyperparams = std::map<std::string, TunedEntry>;

/// `k` angles evenly spaced inside (0, 2pi).
std::vector<double> evenly_spaced_angles(int k);

/// Grid search at a fixed pulse time. Each grid point runs GRAPE (budget =
/// grape_config.max_iterations) on the block bound at every sampled angle.
/// Ties on score go to fewer mean iterations, then the smaller learning rate.
TuneResult tune_hyperparameters(const Block& block, std::span<const double> angle_samples,
                                const HyperGrid& grid, const Device& device,
                                const GrapeConfig& grape_config, double fixed_time, int jobs = 1);

/// Tunes every distinct SingleParam block of a flexible plan, at the block's
/// largest gate-based runtime over the samples.
TunedHyperparams tune_plan(const PartitionPlan& plan, std::span<const double> angle_samples,
                           const HyperGrid& grid, const Device& device,
                           const GrapeConfig& grape_config, const GatePulseLibrary& library,
                           int jobs = 1, std::map<std::string, TuneResult>* details = nullptr);

nlohmann::json tuned_to_json(const TunedHyperparams& tuned);
TunedHyperparams tuned_from_json(const nlohmann::json& j);

/// Cached Fixed pulses plus one minimal-time search per SingleParam block with
/// its tuned learning and decay rates, concatenated serially.
CompiledSchedule compile_flexible(const PartitionPlan& plan, const TunedHyperparams& tuned,
                                  const Parametrization& params, const GatePulseLibrary& library,
                                  const GrapeConfig& grape_config,
                                  const MinTimeConfig& mintime_config, const PulseCache& cache);

/// Propagates every segment on its local controls and compares the ordered
/// product with the circuit unitary. Throws PipelineError when two segments
/// overlap in time on a shared qubit.
double verify_schedule(const CompiledSchedule& schedule, const Circuit& circuit,
                       const Parametrization& params, int max_dense_width = kMaxDenseWidth);

/// Unitary realized by a segment list on `width` qubits.
CMatrix schedule_unitary(const CompiledSchedule& schedule, int max_dense_width = kMaxDenseWidth);

}  // namespace vqc
