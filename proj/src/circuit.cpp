#include "vqc/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace vqc {

ParamAngle ParamAngle::constant(double radians) { return ParamAngle(-1, 0.0, radians); }

ParamAngle ParamAngle::affine(int param_index, double coefficient, double offset) {
  if (param_index < 0) throw CircuitError("parameter index must be non-negative");
  if (coefficient == 0.0) return constant(offset);
  return ParamAngle(param_index, coefficient, offset);
}

double ParamAngle::value() const {
  if (is_affine()) {
    throw UnboundParameterError("angle depends on unbound parameter t[" +
                                std::to_string(param_index_) + "]");
  }
  return offset_;
}

double ParamAngle::evaluate(std::span<const double> theta) const {
  if (is_constant()) return offset_;
  if (static_cast<std::size_t>(param_index_) >= theta.size()) {
    throw CircuitError("parameter index " + std::to_string(param_index_) +
                       " outside parametrization of length " + std::to_string(theta.size()));
  }
  return coefficient_ * theta[param_index_] + offset_;
}

std::optional<ParamAngle> merge_angles(const ParamAngle& a, const ParamAngle& b) {
  if (a.is_constant() && b.is_constant()) return ParamAngle::constant(a.offset() + b.offset());
  if (a.is_constant()) {
    return ParamAngle::affine(b.param_index(), b.coefficient(), b.offset() + a.offset());
  }
  if (b.is_constant()) {
    return ParamAngle::affine(a.param_index(), a.coefficient(), a.offset() + b.offset());
  }
  if (a.param_index() != b.param_index()) return std::nullopt;
  return ParamAngle::affine(a.param_index(), a.coefficient() + b.coefficient(),
                            a.offset() + b.offset());
}

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::RZ: return "rz";
    case GateKind::RX: return "rx";
    case GateKind::H: return "h";
    case GateKind::CX: return "cx";
    case GateKind::SWAP: return "swap";
  }
  return "?";
}

int arity(GateKind kind) { return (kind == GateKind::CX || kind == GateKind::SWAP) ? 2 : 1; }

bool is_rotation(GateKind kind) { return kind == GateKind::RZ || kind == GateKind::RX; }

bool Gate::touches(int q) const { return std::find(qubits.begin(), qubits.end(), q) != qubits.end(); }

Circuit::Circuit(int width, int param_count, std::vector<Gate> gates)
    : width_(width), param_count_(param_count) {
  if (width < 0) throw CircuitError("circuit width must be non-negative");
  if (param_count < 0) throw CircuitError("parameter count must be non-negative");
  gates_.reserve(gates.size());
  for (auto& g : gates) add(std::move(g));
}

void Circuit::add(Gate g) {
  validate(g);
  gates_.push_back(std::move(g));
}

void Circuit::validate(const Gate& g) const {
  if (static_cast<int>(g.qubits.size()) != arity(g.kind)) {
    throw CircuitError(std::string(to_string(g.kind)) + " expects " +
                       std::to_string(arity(g.kind)) + " qubit(s)");
  }
  for (std::size_t i = 0; i < g.qubits.size(); ++i) {
    if (g.qubits[i] < 0 || g.qubits[i] >= width_) {
      throw CircuitError("qubit index " + std::to_string(g.qubits[i]) + " out of range for width " +
                         std::to_string(width_));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (g.qubits[i] == g.qubits[j]) throw CircuitError("gate qubits must be distinct");
    }
  }
  if (is_rotation(g.kind) != g.angle.has_value()) {
    throw CircuitError(std::string(to_string(g.kind)) +
                       (g.angle ? " takes no angle" : " requires an angle"));
  }
  if (g.angle && g.angle->is_affine() && g.angle->param_index() >= param_count_) {
    throw CircuitError("parameter index " + std::to_string(g.angle->param_index()) +
                       " >= parameter count " + std::to_string(param_count_));
  }
}

CMatrix gate_matrix(GateKind kind, double angle) {
  using namespace std::complex_literals;
  switch (kind) {
    case GateKind::RX: {
      const double c = std::cos(angle / 2), s = std::sin(angle / 2);
      CMatrix m(2, 2);
      m << 1i * c, s, s, 1i * c;
      return m;
    }
    case GateKind::RZ: {
      CMatrix m = CMatrix::Zero(2, 2);
      m(0, 0) = 1.0;
      m(1, 1) = std::exp(1i * angle);
      return m;
    }
    case GateKind::H: {
      CMatrix m(2, 2);
      m << 1, 1, 1, -1;
      return m * (1.0 / std::numbers::sqrt2);
    }
    case GateKind::CX: {
      CMatrix m = CMatrix::Zero(4, 4);
      m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
      return m;
    }
    case GateKind::SWAP: {
      CMatrix m = CMatrix::Zero(4, 4);
      m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
      return m;
    }
  }
  throw CircuitError("unknown gate kind");
}

CMatrix gate_matrix(const Gate& gate) {
  return gate_matrix(gate.kind, gate.angle ? gate.angle->value() : 0.0);
}

namespace {

void check_parametrization(const Circuit& circuit, const Parametrization& params) {
  if (params.size() != static_cast<std::size_t>(circuit.param_count())) {
    throw CircuitError("parametrization has " + std::to_string(params.size()) +
                       " values, circuit expects " + std::to_string(circuit.param_count()));
  }
}

}  // namespace

CMatrix build_unitary(const Circuit& circuit, const Parametrization& params, int max_dense_width) {
  check_parametrization(circuit, params);
  if (circuit.width() > max_dense_width) {
    throw CircuitError("width " + std::to_string(circuit.width()) +
                       " exceeds dense unitary cap " + std::to_string(max_dense_width));
  }
  const auto dim = static_cast<Eigen::Index>(dim_for(circuit.width()));
  CMatrix u = CMatrix::Identity(dim, dim);
  for (const auto& g : circuit.gates()) {
    const double angle = g.angle ? g.angle->evaluate(params.view()) : 0.0;
    apply_operator(u, gate_matrix(g.kind, angle), g.qubits, circuit.width());
  }
  return u;
}

Circuit bind_parameters(const Circuit& circuit, const Parametrization& params) {
  check_parametrization(circuit, params);
  Circuit out(circuit.width(), 0);
  for (const auto& g : circuit.gates()) {
    Gate bound = g;
    if (g.angle) bound.angle = ParamAngle::constant(g.angle->evaluate(params.view()));
    out.add(std::move(bound));
  }
  return out;
}

Circuit merge_rotations(const Circuit& circuit) {
  std::vector<std::optional<Gate>> out;
  out.reserve(circuit.size());
  // Output positions of the gates touching each qubit, in order.
  std::vector<std::vector<std::size_t>> history(circuit.width());

  auto try_merge = [&](std::size_t earlier, std::size_t later) {
    Gate& a = *out[earlier];
    const Gate& b = *out[later];
    if (a.kind != b.kind || !is_rotation(a.kind)) return false;
    auto merged = merge_angles(*a.angle, *b.angle);
    if (!merged) return false;
    a.angle = *merged;
    out[later].reset();
    return true;
  };

  for (const auto& g : circuit.gates()) {
    out.push_back(g);
    const std::size_t pos = out.size() - 1;
    if (!is_rotation(g.kind)) {
      for (int q : g.qubits) history[q].push_back(pos);
      continue;
    }
    auto& h = history[g.qubits[0]];
    h.push_back(pos);
    // A merge can make the result mergeable with its own predecessor, e.g. a
    // parametrized pair that cancels to a constant.
    while (h.size() >= 2 && try_merge(h[h.size() - 2], h.back())) h.pop_back();
  }

  Circuit result(circuit.width(), circuit.param_count());
  for (auto& g : out) {
    if (g) result.add(std::move(*g));
  }
  return result;
}

GateTimes GateTimes::reference() {
  return GateTimes({{GateKind::RZ, 0.4},
                    {GateKind::RX, 2.5},
                    {GateKind::H, 1.4},
                    {GateKind::CX, 3.8},
                    {GateKind::SWAP, 7.4}});
}

double GateTimes::at(GateKind kind) const {
  auto it = durations_.find(kind);
  if (it == durations_.end()) {
    throw CircuitError("no duration for gate kind " + std::string(to_string(kind)));
  }
  return it->second;
}

AsapSchedule asap_schedule(const Circuit& circuit, const GateTimes& times) {
  AsapSchedule s;
  std::vector<double> ready(circuit.width(), 0.0);
  s.start_ns.reserve(circuit.size());
  s.duration_ns.reserve(circuit.size());
  for (const auto& g : circuit.gates()) {
    double start = 0.0;
    for (int q : g.qubits) start = std::max(start, ready[q]);
    const double d = times.at(g.kind);
    for (int q : g.qubits) ready[q] = start + d;
    s.start_ns.push_back(start);
    s.duration_ns.push_back(d);
    s.total_ns = std::max(s.total_ns, start + d);
  }
  return s;
}

double critical_path_runtime(const Circuit& circuit, const GateTimes& times) {
  return asap_schedule(circuit, times).total_ns;
}

std::vector<int> active_qubits(const Circuit& circuit) {
  std::set<int> qs;
  for (const auto& g : circuit.gates()) qs.insert(g.qubits.begin(), g.qubits.end());
  return {qs.begin(), qs.end()};
}

}  // namespace vqc
