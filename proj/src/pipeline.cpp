#include "vqc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "vqc/qasm_io.hpp"

namespace vqc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs fn(0..n-1) on up to `jobs` threads and rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::string> control_labels(const HamiltonianSpec& spec) {
  std::vector<std::string> labels;
  for (const auto& c : build_controls(spec)) labels.push_back(c.label);
  return labels;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json edges_to_json(const std::vector<Edge>& edges) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [a, b] : edges) out.push_back({a, b});
  return out;
}

std::vector<Edge> edges_from_json(const nlohmann::json& j) {
  std::vector<Edge> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return out;
}

nlohmann::json device_to_json(const Device& d) {
  nlohmann::json j = {{"charge_bound", d.charge_bound},
                      {"flux_bound", d.flux_bound},
                      {"coupling_bound", d.coupling_bound}};
  j["topology"] = to_string(d.topology);
  j["edges"] = edges_to_json(d.edges);
  return j;
}

Device device_from_json(const nlohmann::json& j) {
  Device d;
  d.charge_bound = j.at("charge_bound").get<double>();
  d.flux_bound = j.at("flux_bound").get<double>();
  d.coupling_bound = j.at("coupling_bound").get<double>();
  const auto topology = j.at("topology").get<std::string>();
  if (topology == "interaction") {
    d.topology = Topology::Interaction;
  } else if (topology == "grid") {
    d.topology = Topology::Grid;
  } else if (topology == "explicit") {
    d.topology = Topology::Explicit;
  } else {
    throw PipelineError("unknown topology '" + topology + "'");
  }
  d.edges = edges_from_json(j.at("edges"));
  return d;
}

nlohmann::json probes_to_json(const std::vector<Probe>& probes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : probes) {
    out.push_back({{"time_ns", p.time},
                   {"converged", p.converged},
                   {"fidelity", p.fidelity},
                   {"iterations", p.iterations}});
  }
  return out;
}

std::vector<Probe> probes_from_json(const nlohmann::json& j) {
  std::vector<Probe> out;
  for (const auto& p : j) {
    out.push_back({p.at("time_ns").get<double>(), p.at("converged").get<bool>(),
                   p.at("fidelity").get<double>(), p.at("iterations").get<int>()});
  }
  return out;
}

nlohmann::json segment_to_json(const Segment& s, const Device& device) {
  const auto spec = device.with_edges(static_cast<int>(s.qubits.size()), s.local_edges);
  return {{"source", to_string(s.source)},
          {"label", s.label},
          {"qubits", s.qubits},
          {"local_edges", edges_to_json(s.local_edges)},
          {"start_ns", s.start_ns},
          {"duration_ns", s.duration()},
          {"pulse", pulse_to_json(s.pulse, control_labels(spec), s.fidelity)}};
}

Segment segment_from_json(const nlohmann::json& j) {
  Segment s;
  s.source = parse_segment_source(j.at("source").get<std::string>());
  s.label = j.at("label").get<std::string>();
  s.qubits = j.at("qubits").get<std::vector<int>>();
  s.local_edges = edges_from_json(j.at("local_edges"));
  s.start_ns = j.at("start_ns").get<double>();
  s.pulse = pulse_from_json(j.at("pulse"));
  s.fidelity = j.at("pulse").at("fidelity").get<double>();
  return s;
}

std::string format_angle(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", a);
  return buf;
}

// Places segments of a per-block pulse into a schedule at `offset`,
// relabelling local qubits through `qubits`.
void place_segments(CompiledSchedule& out, const std::vector<Segment>& local,
                    const std::vector<int>& qubits, double offset) {
  for (Segment s : local) {
    for (int& q : s.qubits) q = qubits[q];
    s.start_ns += offset;
    out.segments.push_back(std::move(s));
  }
}

struct BlockPulse {
  std::vector<Segment> segments;  // local qubits, offsets from 0
  double duration = 0.0;
  double fidelity = 1.0;
  double baseline = 0.0;
  bool fallback = false;
  std::vector<Probe> probes;
  int runs = 0;
  long iterations = 0;
};

// Minimal-time pulse for a parameter-free block, or its gate-based pulses when
// GRAPE cannot beat them. `source` tags the GRAPE segment.
BlockPulse compile_block_pulse(const Block& block, const std::string& hash, const Device& device,
                               const GrapeConfig& grape_config, const MinTimeConfig& mintime_config,
                               const GatePulseLibrary& library, SegmentSource source) {
  const Circuit& local = block.subcircuit;
  const CompiledSchedule gate = compile_gate_based(local, {}, library);

  BlockPulse out;
  out.baseline = gate.total_duration;
  const HamiltonianSpec spec = device.local(block.subcircuit, block.qubits);
  const CMatrix target = build_unitary(local, {});

  GrapeConfig cfg = grape_config;
  cfg.rng_seed = grape_config.rng_seed ^ fnv1a(hash);
  // A pulse longer than the gate baseline is never used, so skip doubling.
  MinTimeConfig mcfg = mintime_config;
  mcfg.upper_bound.reset();
  mcfg.doubling_cap = 1.0;

  std::optional<MinTimeResult> found;
  try {
    found = minimal_pulse_time(target, build_controls(spec), cfg, mcfg, out.baseline);
    out.probes = found->probes;
    out.runs = found->grape_runs;
    out.iterations = found->total_iterations;
  } catch (const NoConvergenceError& e) {
    out.probes = e.probes();
    out.runs = static_cast<int>(e.probes().size());
    for (const auto& p : e.probes()) out.iterations += p.iterations;
  }

  if (found && found->minimal_time <= out.baseline + 1e-9) {
    out.duration = found->minimal_time;
    out.fidelity = found->fidelity;
    if (found->pulse.n_steps() > 0) {
      Segment s;
      s.source = source;
      s.label = hash;
      for (int k = 0; k < block.width(); ++k) s.qubits.push_back(k);
      s.local_edges = spec.edges;
      s.pulse = found->pulse;
      s.fidelity = found->fidelity;
      out.segments.push_back(std::move(s));
    }
    return out;
  }
  out.fallback = true;
  out.duration = gate.total_duration;
  out.segments = gate.segments;
  out.fidelity = 1.0;
  for (const auto& s : gate.segments) out.fidelity = std::min(out.fidelity, s.fidelity);
  return out;
}

Block bind_block(const Block& block, const Parametrization& params) {
  Block b = block;
  b.kind = BlockKind::Fixed;
  b.param = -1;
  b.subcircuit = merge_rotations(bind_parameters(block.subcircuit, block_parameters(block, params)));
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Device and analytic pulses

std::string to_string(Topology t) {
  switch (t) {
    case Topology::Interaction: return "interaction";
    case Topology::Grid: return "grid";
    case Topology::Explicit: return "explicit";
  }
  return "?";
}

HamiltonianSpec Device::local(const Circuit& local_circuit, std::span<const int> qubits) const {
  const int n = static_cast<int>(qubits.size());
  std::set<Edge> local_edges;
  switch (topology) {
    case Topology::Grid: {
      const auto grid = grid_edges(near_square_grid(n).first, near_square_grid(n).second);
      return with_edges(n, grid);
    }
    case Topology::Interaction:
      for (const auto& g : local_circuit.gates()) {
        if (g.qubits.size() == 2) {
          local_edges.emplace(std::min(g.qubits[0], g.qubits[1]), std::max(g.qubits[0], g.qubits[1]));
        }
      }
      break;
    case Topology::Explicit: {
      auto index_of = [&](int q) {
        auto it = std::find(qubits.begin(), qubits.end(), q);
        return it == qubits.end() ? -1 : static_cast<int>(it - qubits.begin());
      };
      for (const auto& [a, b] : edges) {
        const int la = index_of(a), lb = index_of(b);
        if (la >= 0 && lb >= 0) local_edges.emplace(std::min(la, lb), std::max(la, lb));
      }
      break;
    }
  }
  return with_edges(n, {local_edges.begin(), local_edges.end()});
}

bool Device::coupled(int a, int b) const {
  if (topology != Topology::Explicit) return true;
  const Edge e{std::min(a, b), std::max(a, b)};
  return std::any_of(edges.begin(), edges.end(), [&](const Edge& x) {
    return Edge{std::min(x.first, x.second), std::max(x.first, x.second)} == e;
  });
}

HamiltonianSpec Device::with_edges(int n_qubits, std::vector<Edge> local_edges) const {
  HamiltonianSpec spec;
  spec.n_qubits = n_qubits;
  spec.edges = std::move(local_edges);
  spec.charge_bound = charge_bound;
  spec.flux_bound = flux_bound;
  spec.coupling_bound = coupling_bound;
  return spec;
}

double shortest_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(radians, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

ControlPulse analytic_rotation_pulse(GateKind kind, double angle, const Device& device, double dt) {
  if (!is_rotation(kind)) throw PipelineError("analytic pulses exist only for rotations");
  const double a = shortest_angle(angle);
  if (std::abs(a) < 1e-12) return ControlPulse::zeros(2, 0, dt);
  // Rz(a) = diag(1, e^{ia}) = exp(-i u T |1><1|) with u T = -a.
  // Rx(a) = i exp(-i a/2 sigma_x), so the charge drive needs u T = a/2.
  const bool rz = kind == GateKind::RZ;
  const double bound = rz ? device.flux_bound : device.charge_bound;
  const double area = rz ? std::abs(a) : std::abs(a) / 2.0;
  const int steps = std::max(1, static_cast<int>(std::ceil(area / (bound * dt) - 1e-9)));
  const double duration = steps * dt;
  ControlPulse p = ControlPulse::zeros(2, steps, dt);
  p.amplitudes.row(rz ? 1 : 0).setConstant(rz ? -a / duration : a / (2.0 * duration));
  return p;
}

std::string to_string(SegmentSource source) {
  switch (source) {
    case SegmentSource::Library: return "library";
    case SegmentSource::Cache: return "cache";
    case SegmentSource::Analytic: return "analytic";
    case SegmentSource::RuntimeGrape: return "runtime_grape";
  }
  return "?";
}

SegmentSource parse_segment_source(const std::string& s) {
  if (s == "library") return SegmentSource::Library;
  if (s == "cache") return SegmentSource::Cache;
  if (s == "analytic") return SegmentSource::Analytic;
  if (s == "runtime_grape") return SegmentSource::RuntimeGrape;
  throw PipelineError("unknown segment source '" + s + "'");
}

nlohmann::json schedule_to_json(const CompiledSchedule& schedule) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : schedule.segments) segments.push_back(segment_to_json(s, schedule.device));
  const auto& st = schedule.stats;
  return {{"mode", schedule.mode},
          {"circuit", schedule.circuit},
          {"width", schedule.width},
          {"dt_ns", schedule.dt},
          {"device", device_to_json(schedule.device)},
          {"total_duration_ns", schedule.total_duration},
          {"stats",
           {{"grape_calls", st.grape_calls},
            {"iterations", st.iterations},
            {"wall_ms", st.wall_ms},
            {"verified_fidelity", st.verified_fidelity ? nlohmann::json(*st.verified_fidelity)
                                                       : nlohmann::json(nullptr)}}},
          {"segments", std::move(segments)}};
}

CompiledSchedule schedule_from_json(const nlohmann::json& j) {
  CompiledSchedule s;
  s.mode = j.at("mode").get<std::string>();
  s.circuit = j.value("circuit", "");
  s.width = j.at("width").get<int>();
  s.dt = j.at("dt_ns").get<double>();
  s.device = device_from_json(j.at("device"));
  s.total_duration = j.at("total_duration_ns").get<double>();
  const auto& st = j.at("stats");
  s.stats.grape_calls = st.at("grape_calls").get<int>();
  s.stats.iterations = st.at("iterations").get<long>();
  s.stats.wall_ms = st.at("wall_ms").get<double>();
  if (!st.at("verified_fidelity").is_null()) {
    s.stats.verified_fidelity = st.at("verified_fidelity").get<double>();
  }
  for (const auto& seg : j.at("segments")) s.segments.push_back(segment_from_json(seg));
  return s;
}

// ---------------------------------------------------------------------------
// Gate library

const LibraryEntry& GatePulseLibrary::at(GateKind kind) const {
  auto it = entries.find(kind);
  if (it == entries.end()) {
    throw PipelineError("gate library has no pulse for " + std::string(to_string(kind)));
  }
  return it->second;
}

GateTimes GatePulseLibrary::durations() const {
  GateTimes t;
  for (const auto& [kind, e] : entries) t.set(kind, e.duration());
  return t;
}

namespace {

struct LibraryTarget {
  GateKind kind;
  double angle;
  int width;
};

constexpr LibraryTarget kLibraryTargets[] = {
    {GateKind::RZ, std::numbers::pi, 1}, {GateKind::RX, std::numbers::pi, 1},
    {GateKind::H, 0.0, 1},               {GateKind::CX, 0.0, 2},
    {GateKind::SWAP, 0.0, 2},
};

HamiltonianSpec library_spec(const Device& device, int width) {
  return device.with_edges(width, width == 2 ? std::vector<Edge>{{0, 1}} : std::vector<Edge>{});
}

}  // namespace

GatePulseLibrary build_gate_library(const Device& device, const GrapeConfig& grape_config,
                                    const MinTimeConfig& mintime_config) {
  GatePulseLibrary lib{device, grape_config.step(), {}};
  const GateTimes reference = GateTimes::reference();
  for (const auto& t : kLibraryTargets) {
    const auto controls = build_controls(library_spec(device, t.width));
    try {
      auto r = minimal_pulse_time(gate_matrix(t.kind, t.angle), controls, grape_config,
                                  mintime_config, reference.at(t.kind));
      lib.entries[t.kind] = {t.kind, t.angle, std::move(r.pulse), r.fidelity, std::move(r.probes)};
    } catch (const NoConvergenceError& e) {
      throw PipelineError("gate library: " + std::string(to_string(t.kind)) + " failed: " + e.what());
    }
  }
  return lib;
}

GatePulseLibrary build_gate_library_fixed(const Device& device, const GrapeConfig& grape_config,
                                          const GateTimes& durations) {
  GatePulseLibrary lib{device, grape_config.step(), {}};
  for (const auto& t : kLibraryTargets) {
    const auto controls = build_controls(library_spec(device, t.width));
    const double time = durations.at(t.kind);
    auto r = grape_optimize(gate_matrix(t.kind, t.angle), controls, grape_config, time);
    if (!r.converged) {
      throw PipelineError("gate library: " + std::string(to_string(t.kind)) + " did not reach " +
                          "the target at " + format_angle(time) + " ns (fidelity " +
                          format_angle(r.fidelity) + ")");
    }
    lib.entries[t.kind] = {t.kind, t.angle, std::move(r.pulse), r.fidelity,
                           {{time, true, r.fidelity, r.iterations_used}}};
  }
  return lib;
}

nlohmann::json library_to_json(const GatePulseLibrary& library) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [kind, e] : library.entries) {
    const int width = arity(kind);
    entries.push_back({{"gate", std::string(to_string(kind))},
                       {"angle", e.angle},
                       {"duration_ns", e.duration()},
                       {"fidelity", e.fidelity},
                       {"probes", probes_to_json(e.probes)},
                       {"pulse", pulse_to_json(e.pulse,
                                               control_labels(library_spec(library.device, width)),
                                               e.fidelity)}});
  }
  return {{"dt_ns", library.dt}, {"device", device_to_json(library.device)}, {"entries", entries}};
}

GatePulseLibrary library_from_json(const nlohmann::json& j) {
  GatePulseLibrary lib;
  lib.dt = j.at("dt_ns").get<double>();
  lib.device = device_from_json(j.at("device"));
  for (const auto& e : j.at("entries")) {
    const auto name = e.at("gate").get<std::string>();
    std::optional<GateKind> kind;
    for (auto k : {GateKind::RZ, GateKind::RX, GateKind::H, GateKind::CX, GateKind::SWAP}) {
      if (to_string(k) == name) kind = k;
    }
    if (!kind) throw PipelineError("gate library: unknown gate '" + name + "'");
    lib.entries[*kind] = {*kind, e.at("angle").get<double>(), pulse_from_json(e.at("pulse")),
                          e.at("fidelity").get<double>(), probes_from_json(e.at("probes"))};
  }
  return lib;
}

void save_library(const GatePulseLibrary& library, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "library.json");
  if (!out) throw PipelineError("cannot write " + (dir / "library.json").string());
  out << library_to_json(library).dump(1) << "\n";
}

GatePulseLibrary load_library(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "library.json" : dir;
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot read gate library " + path.string());
  return library_from_json(nlohmann::json::parse(in));
}

CompiledSchedule compile_gate_based(const Circuit& circuit, const Parametrization& params,
                                    const GatePulseLibrary& library) {
  const auto t0 = Clock::now();
  const Circuit bound = merge_rotations(bind_parameters(circuit, params));
  CompiledSchedule out;
  out.mode = "gate";
  out.width = circuit.width();
  out.dt = library.dt;
  out.device = library.device;

  std::vector<double> ready(circuit.width(), 0.0);
  for (const auto& g : bound.gates()) {
    Segment s;
    s.qubits = g.qubits;
    if (is_rotation(g.kind)) {
      const double a = shortest_angle(g.angle->value());
      if (std::abs(a) < 1e-12) continue;
      if (std::abs(std::abs(a) - std::numbers::pi) < 1e-9) {
        const auto& e = library.at(g.kind);
        s.source = SegmentSource::Library;
        s.label = std::string(to_string(g.kind)) + "(pi)";
        s.pulse = e.pulse;
        s.fidelity = e.fidelity;
      } else {
        s.source = SegmentSource::Analytic;
        s.label = std::string(to_string(g.kind)) + "(" + format_angle(a) + ")";
        s.pulse = analytic_rotation_pulse(g.kind, a, library.device, library.dt);
        s.fidelity = fidelity(propagate(s.pulse, build_controls(library_spec(library.device, 1))),
                              gate_matrix(g.kind, a));
      }
    } else {
      const auto& e = library.at(g.kind);
      s.source = SegmentSource::Library;
      s.label = std::string(to_string(g.kind));
      s.pulse = e.pulse;
      s.fidelity = e.fidelity;
      if (g.qubits.size() == 2) {
        if (!library.device.coupled(g.qubits[0], g.qubits[1])) {
          throw PipelineError("qubits " + std::to_string(g.qubits[0]) + " and " +
                              std::to_string(g.qubits[1]) + " are not coupled");
        }
        s.local_edges = {{0, 1}};
      }
    }
    double start = 0.0;
    for (int q : g.qubits) start = std::max(start, ready[q]);
    s.start_ns = start;
    for (int q : g.qubits) ready[q] = s.end();
    out.total_duration = std::max(out.total_duration, s.end());
    out.segments.push_back(std::move(s));
  }
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Cache

std::string block_hash(const Block& block, const Device& device) {
  std::string key = serialize_circuit(block.subcircuit);
  key += "\nedges:";
  for (const auto& [a, b] : device.local(block.subcircuit, block.qubits).edges) {
    key += std::to_string(a) + "-" + std::to_string(b) + ",";
  }
  return hex64(fnv1a(key));
}

nlohmann::json plan_to_json(const PartitionPlan& plan, const Device& device) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : plan.blocks) {
    blocks.push_back({{"tag", b.tag()},
                      {"qubits", b.qubits},
                      {"body", serialize_circuit(b.subcircuit)},
                      {"hash", block_hash(b, device)}});
  }
  return {{"parent_width", plan.parent_width},
          {"parent_params", plan.parent_params},
          {"blocks", std::move(blocks)}};
}

nlohmann::json cache_entry_to_json(const CacheEntry& entry) {
  // Segments carry their own couplings; bounds travel with the device of the
  // schedule that consumes them.
  Device d;
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : entry.segments) segments.push_back(segment_to_json(s, d));
  return {{"hash", entry.hash},
          {"body", entry.body},
          {"width", entry.width},
          {"origin", entry.origin},
          {"duration_ns", entry.duration},
          {"fidelity", entry.fidelity},
          {"baseline_ns", entry.baseline_ns},
          {"probes", probes_to_json(entry.probes)},
          {"segments", std::move(segments)}};
}

CacheEntry cache_entry_from_json(const nlohmann::json& j) {
  CacheEntry e;
  e.hash = j.at("hash").get<std::string>();
  e.body = j.at("body").get<std::string>();
  e.width = j.at("width").get<int>();
  e.origin = j.at("origin").get<std::string>();
  e.duration = j.at("duration_ns").get<double>();
  e.fidelity = j.at("fidelity").get<double>();
  e.baseline_ns = j.at("baseline_ns").get<double>();
  e.probes = probes_from_json(j.at("probes"));
  for (const auto& s : j.at("segments")) e.segments.push_back(segment_from_json(s));
  return e;
}

PulseCache::PulseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(*dir_);
  for (const auto& file : std::filesystem::directory_iterator(*dir_)) {
    if (file.path().extension() != ".json") continue;
    std::ifstream in(file.path());
    auto entry = cache_entry_from_json(nlohmann::json::parse(in));
    entries_.emplace(entry.hash, std::move(entry));
  }
}

std::optional<CacheEntry> PulseCache::find(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool PulseCache::contains(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  return entries_.contains(hash);
}

std::size_t PulseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

bool PulseCache::insert(CacheEntry entry) {
  std::unique_lock lock(mutex_);
  if (entries_.contains(entry.hash)) return false;
  if (dir_) {
    const auto path = *dir_ / (entry.hash + ".json");
    const auto tmp = *dir_ / (entry.hash + ".json.tmp");
    {
      std::ofstream out(tmp);
      if (!out) throw PipelineError("cannot write cache entry " + tmp.string());
      out << cache_entry_to_json(entry).dump(1) << "\n";
    }
    std::filesystem::rename(tmp, path);
  }
  const std::string key = entry.hash;
  entries_.emplace(key, std::move(entry));
  return true;
}

PrecomputeStats precompute_fixed_blocks(const PartitionPlan& plan, const Device& device,
                                        const GrapeConfig& grape_config,
                                        const MinTimeConfig& mintime_config,
                                        const GatePulseLibrary& library, PulseCache& cache,
                                        int jobs) {
  const auto t0 = Clock::now();
  PrecomputeStats stats;
  std::vector<std::pair<const Block*, std::string>> todo;
  std::set<std::string> queued;
  for (const auto& b : plan.blocks) {
    if (b.kind != BlockKind::Fixed) continue;
    ++stats.fixed_blocks;
    auto hash = block_hash(b, device);
    if (cache.contains(hash)) {
      ++stats.cache_hits;
      continue;
    }
    if (queued.insert(hash).second) todo.emplace_back(&b, std::move(hash));
  }

  GrapeConfig cfg = grape_config;
  if (jobs > 1) cfg.backend = kernels::Backend::serial;
  std::mutex stats_mutex;
  parallel_for(todo.size(), jobs, [&](std::size_t i) {
    const auto& [block, hash] = todo[i];
    const auto bp = compile_block_pulse(*block, hash, device, cfg, mintime_config, library,
                                        SegmentSource::Cache);
    CacheEntry entry{hash,          serialize_circuit(block->subcircuit),
                     block->width(), bp.fallback ? "gate_fallback" : "grape",
                     bp.duration,   bp.fidelity,
                     bp.baseline,   bp.probes,
                     bp.segments};
    cache.insert(std::move(entry));
    std::lock_guard lock(stats_mutex);
    ++stats.compiled;
    stats.fallbacks += bp.fallback ? 1 : 0;
    stats.grape_runs += bp.runs;
    stats.iterations += bp.iterations;
  });
  stats.wall_ms = elapsed_ms(t0);
  return stats;
}

namespace {

CompiledSchedule start_schedule(const std::string& mode, int width, const Device& device, double dt) {
  CompiledSchedule out;
  out.mode = mode;
  out.width = width;
  out.device = device;
  out.dt = dt;
  return out;
}

// Appends a cached Fixed block at `offset` and returns its duration.
double place_cached(CompiledSchedule& out, const Block& block, const PulseCache& cache,
                    double offset) {
  const auto hash = block_hash(block, out.device);
  const auto entry = cache.find(hash);
  if (!entry) throw PipelineError("cache miss for block " + hash + " (" + block.tag() + ")");
  place_segments(out, entry->segments, block.qubits, offset);
  return entry->duration;
}

// Appends the analytic pulse of a one-gate block and returns its duration.
double place_param_gate(CompiledSchedule& out, const Block& block, const Parametrization& params,
                        double offset) {
  const Gate& g = block.subcircuit.gates().front();
  const double angle = g.angle->evaluate(block_parameters(block, params).view());
  Segment s;
  s.source = SegmentSource::Analytic;
  s.label = std::string(to_string(g.kind)) + "(" + format_angle(shortest_angle(angle)) + ")";
  s.qubits = {block.qubits[g.qubits[0]]};
  s.start_ns = offset;
  s.pulse = analytic_rotation_pulse(g.kind, angle, out.device, out.dt);
  if (s.pulse.n_steps() == 0) return 0.0;
  s.fidelity = fidelity(propagate(s.pulse, build_controls(out.device.with_edges(1, {}))),
                        gate_matrix(g.kind, angle));
  out.segments.push_back(std::move(s));
  return out.segments.back().duration();
}

}  // namespace

CompiledSchedule compile_strict(const PartitionPlan& plan, const PulseCache& cache,
                                const Parametrization& params, const Device& device, double dt) {
  const auto t0 = Clock::now();
  if (params.size() != static_cast<std::size_t>(plan.parent_params)) {
    throw PipelineError("parametrization has " + std::to_string(params.size()) +
                        " values, plan expects " + std::to_string(plan.parent_params));
  }
  auto out = start_schedule("strict", plan.parent_width, device, dt);
  double offset = 0.0;
  for (const auto& b : plan.blocks) {
    switch (b.kind) {
      case BlockKind::Fixed: offset += place_cached(out, b, cache, offset); break;
      case BlockKind::ParamGate: offset += place_param_gate(out, b, params, offset); break;
      default: throw PipelineError("strict plans hold only Fixed and ParamGate blocks");
    }
  }
  out.total_duration = offset;
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

CompiledSchedule compile_full_grape(const Circuit& circuit, const Parametrization& params,
                                    const GatePulseLibrary& library,
                                    const GrapeConfig& grape_config,
                                    const MinTimeConfig& mintime_config, int max_width) {
  const auto t0 = Clock::now();
  const Circuit bound = merge_rotations(bind_parameters(circuit, params));
  auto out = start_schedule("grape", circuit.width(), library.device, grape_config.step());
  double offset = 0.0;
  for (const auto& b : block_max_width(bound, max_width)) {
    const auto hash = block_hash(b, library.device);
    const auto bp = compile_block_pulse(b, hash, library.device, grape_config, mintime_config,
                                        library, SegmentSource::RuntimeGrape);
    place_segments(out, bp.segments, b.qubits, offset);
    offset += bp.duration;
    ++out.stats.grape_calls;
    out.stats.iterations += bp.iterations;
  }
  out.total_duration = offset;
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Tuning

HyperGrid HyperGrid::defaults() {
  HyperGrid g;
  for (int i = 0; i < 7; ++i) g.learning_rates.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  g.decay_rates = {0.999, 0.9999, 1.0};
  return g;
}

std::vector<double> evenly_spaced_angles(int k) {
  if (k < 1) throw PipelineError("need at least one angle sample");
  std::vector<double> out;
  for (int s = 0; s < k; ++s) out.push_back(2.0 * std::numbers::pi * (s + 1) / (k + 1));
  return out;
}

namespace {

Parametrization sample_point(const Block& block, int parent_params, double angle) {
  Parametrization p;
  p.values.assign(parent_params, 0.0);
  if (block.param >= 0) p.values[block.param] = angle;
  return p;
}

}  // namespace

TuneResult tune_hyperparameters(const Block& block, std::span<const double> angle_samples,
                                const HyperGrid& grid, const Device& device,
                                const GrapeConfig& grape_config, double fixed_time, int jobs) {
  if (grid.size() == 0) throw PipelineError("empty hyperparameter grid");
  if (angle_samples.empty()) throw PipelineError("need at least one angle sample");
  if (block.kind != BlockKind::SingleParam && block.kind != BlockKind::Fixed &&
      block.kind != BlockKind::ParamGate) {
    throw PipelineError("tuning needs a block with at most one parameter");
  }
  const int parent_params = block.subcircuit.param_count();
  std::vector<CMatrix> targets;
  for (double a : angle_samples) {
    targets.push_back(block_unitary(block, sample_point(block, parent_params, a)));
    if (block.param < 0) break;
  }
  const auto controls = build_controls(device.local(block.subcircuit, block.qubits));

  TuneResult result;
  for (double lr : grid.learning_rates) {
    for (double decay : grid.decay_rates) result.grid.push_back({lr, decay, 0.0, 0.0});
  }
  GrapeConfig base = grape_config;
  if (jobs > 1) base.backend = kernels::Backend::serial;
  const double floor = 1.0 - grape_config.target_fidelity;
  parallel_for(result.grid.size(), jobs, [&](std::size_t i) {
    auto& point = result.grid[i];
    GrapeConfig cfg = base;
    cfg.learning_rate = point.learning_rate;
    cfg.decay_rate = point.decay_rate;
    for (const auto& target : targets) {
      const auto r = grape_optimize(target, controls, cfg, fixed_time);
      point.score += std::max(0.0, (1.0 - r.fidelity) - floor);
      point.mean_iterations += r.converged ? r.iterations_used : cfg.max_iterations;
    }
    point.score /= static_cast<double>(targets.size());
    point.mean_iterations /= static_cast<double>(targets.size());
  });

  const auto best = std::min_element(result.grid.begin(), result.grid.end(),
                                     [](const GridScore& a, const GridScore& b) {
                                       if (a.score != b.score) return a.score < b.score;
                                       if (a.mean_iterations != b.mean_iterations) {
                                         return a.mean_iterations < b.mean_iterations;
                                       }
                                       return a.learning_rate < b.learning_rate;
                                     });
  result.best = {best->learning_rate, best->decay_rate, best->score};
  return result;
}

TunedHyperparams tune_plan(const PartitionPlan& plan, std::span<const double> angle_samples,
                           const HyperGrid& grid, const Device& device,
                           const GrapeConfig& grape_config, const GatePulseLibrary& library,
                           int jobs, std::map<std::string, TuneResult>* details) {
  TunedHyperparams tuned;
  for (const auto& b : plan.blocks) {
    if (b.kind != BlockKind::SingleParam) continue;
    const auto hash = block_hash(b, device);
    if (tuned.contains(hash)) continue;
    double fixed_time = grape_config.step();
    for (double a : angle_samples) {
      const Block bound = bind_block(b, sample_point(b, plan.parent_params, a));
      fixed_time = std::max(fixed_time, compile_gate_based(bound.subcircuit, {}, library).total_duration);
    }
    auto r = tune_hyperparameters(b, angle_samples, grid, device, grape_config, fixed_time, jobs);
    tuned[hash] = r.best;
    if (details) (*details)[hash] = std::move(r);
  }
  return tuned;
}

nlohmann::json tuned_to_json(const TunedHyperparams& tuned) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [hash, e] : tuned) {
    out[hash] = {{"learning_rate", e.learning_rate},
                 {"decay_rate", e.decay_rate},
                 {"score", e.score}};
  }
  return out;
}

TunedHyperparams tuned_from_json(const nlohmann::json& j) {
  TunedHyperparams out;
  for (const auto& [hash, e] : j.items()) {
    out[hash] = {e.at("learning_rate").get<double>(), e.at("decay_rate").get<double>(),
                 e.at("score").get<double>()};
  }
  return out;
}

CompiledSchedule compile_flexible(const PartitionPlan& plan, const TunedHyperparams& tuned,
                                  const Parametrization& params, const GatePulseLibrary& library,
                                  const GrapeConfig& grape_config,
                                  const MinTimeConfig& mintime_config, const PulseCache& cache) {
  const auto t0 = Clock::now();
  if (params.size() != static_cast<std::size_t>(plan.parent_params)) {
    throw PipelineError("parametrization has " + std::to_string(params.size()) +
                        " values, plan expects " + std::to_string(plan.parent_params));
  }
  const Device& device = library.device;
  auto out = start_schedule("flexible", plan.parent_width, device, grape_config.step());
  double offset = 0.0;
  for (const auto& b : plan.blocks) {
    switch (b.kind) {
      case BlockKind::Fixed: offset += place_cached(out, b, cache, offset); break;
      case BlockKind::ParamGate: offset += place_param_gate(out, b, params, offset); break;
      case BlockKind::SingleParam: {
        const auto hash = block_hash(b, device);
        auto it = tuned.find(hash);
        if (it == tuned.end()) throw PipelineError("missing tuned hyperparameters for block " + hash);
        GrapeConfig cfg = grape_config;
        cfg.learning_rate = it->second.learning_rate;
        cfg.decay_rate = it->second.decay_rate;
        const Block bound = bind_block(b, params);
        const auto bp = compile_block_pulse(bound, block_hash(bound, device), device, cfg,
                                            mintime_config, library, SegmentSource::RuntimeGrape);
        place_segments(out, bp.segments, b.qubits, offset);
        offset += bp.duration;
        ++out.stats.grape_calls;
        out.stats.iterations += bp.iterations;
        break;
      }
      case BlockKind::Mixed: throw PipelineError("flexible plans cannot hold multi-parameter blocks");
    }
  }
  out.total_duration = offset;
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

CMatrix schedule_unitary(const CompiledSchedule& schedule, int max_dense_width) {
  if (schedule.width > max_dense_width) {
    throw PipelineError("width " + std::to_string(schedule.width) + " exceeds dense unitary cap " +
                        std::to_string(max_dense_width));
  }
  const auto& segs = schedule.segments;
  std::vector<std::size_t> order(segs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return segs[a].start_ns < segs[b].start_ns; });

  constexpr double eps = 1e-9;
  for (std::size_t x = 0; x < order.size(); ++x) {
    const auto& a = segs[order[x]];
    for (std::size_t y = x + 1; y < order.size(); ++y) {
      const auto& b = segs[order[y]];
      if (b.start_ns >= a.end() - eps) break;
      for (int q : a.qubits) {
        if (std::find(b.qubits.begin(), b.qubits.end(), q) != b.qubits.end() &&
            a.duration() > eps && b.duration() > eps) {
          throw PipelineError("segments '" + a.label + "' and '" + b.label +
                              "' overlap in time on qubit " + std::to_string(q));
        }
      }
    }
  }

  const auto dim = static_cast<Eigen::Index>(dim_for(schedule.width));
  CMatrix u = CMatrix::Identity(dim, dim);
  for (std::size_t i : order) {
    const auto& s = segs[i];
    if (s.pulse.n_steps() == 0) continue;
    for (int q : s.qubits) {
      if (q < 0 || q >= schedule.width) throw PipelineError("segment qubit out of range");
    }
    const auto spec = schedule.device.with_edges(static_cast<int>(s.qubits.size()), s.local_edges);
    apply_operator(u, propagate(s.pulse, build_controls(spec)), s.qubits, schedule.width);
  }
  return u;
}

double verify_schedule(const CompiledSchedule& schedule, const Circuit& circuit,
                       const Parametrization& params, int max_dense_width) {
  if (schedule.width != circuit.width()) {
    throw PipelineError("schedule width " + std::to_string(schedule.width) +
                        " does not match circuit width " + std::to_string(circuit.width()));
  }
  return fidelity(schedule_unitary(schedule, max_dense_width),
                  build_unitary(circuit, params, max_dense_width));
}

}  // namespace vqc
