#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vqc/linalg.hpp"

namespace vqc {

/// Raised when a symbolic angle is used where a bound value is required.
class UnboundParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a circuit, gate or parametrization violates its invariants.
class CircuitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A rotation angle that is either a constant or `coefficient * theta[index] + offset`.
class ParamAngle {
 public:
  static ParamAngle constant(double radians);
  /// A zero coefficient collapses to `constant(offset)`.
  static ParamAngle affine(int param_index, double coefficient, double offset = 0.0);

  bool is_constant() const { return param_index_ < 0; }
  bool is_affine() const { return param_index_ >= 0; }

  /// Bound value of a constant angle; throws UnboundParameterError for affine ones.
  double value() const;
  int param_index() const { return param_index_; }
  double coefficient() const { return coefficient_; }
  double offset() const { return offset_; }

  double evaluate(std::span<const double> theta) const;

  bool operator==(const ParamAngle&) const = default;

 private:
  ParamAngle(int index, double coefficient, double offset)
      : param_index_(index), coefficient_(coefficient), offset_(offset) {}

  int param_index_ = -1;
  double coefficient_ = 0.0;
  double offset_ = 0.0;
};

/// Sum of two angles, or nullopt when they depend on different parameters.
std::optional<ParamAngle> merge_angles(const ParamAngle& a, const ParamAngle& b);

enum class GateKind { RZ, RX, H, CX, SWAP };

std::string_view to_string(GateKind kind);
int arity(GateKind kind);
bool is_rotation(GateKind kind);

struct Gate {
  GateKind kind;
  std::vector<int> qubits;
  std::optional<ParamAngle> angle;

  static Gate rz(int q, ParamAngle a) { return {GateKind::RZ, {q}, a}; }
  static Gate rx(int q, ParamAngle a) { return {GateKind::RX, {q}, a}; }
  static Gate rz(int q, double a) { return rz(q, ParamAngle::constant(a)); }
  static Gate rx(int q, double a) { return rx(q, ParamAngle::constant(a)); }
  static Gate h(int q) { return {GateKind::H, {q}, std::nullopt}; }
  static Gate cx(int control, int target) { return {GateKind::CX, {control, target}, std::nullopt}; }
  static Gate swap(int a, int b) { return {GateKind::SWAP, {a, b}, std::nullopt}; }

  bool is_parametrized() const { return angle && angle->is_affine(); }
  bool touches(int q) const;

  bool operator==(const Gate&) const = default;
};

/// Ordered gate list over `width` qubits with `param_count` variational parameters.
class Circuit {
 public:
  Circuit() = default;
  Circuit(int width, int param_count, std::vector<Gate> gates = {});

  int width() const { return width_; }
  int param_count() const { return param_count_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  bool empty() const { return gates_.empty(); }

  /// Appends after validating qubit and parameter indices.
  void add(Gate g);

  bool operator==(const Circuit&) const = default;

 private:
  void validate(const Gate& g) const;

  int width_ = 0;
  int param_count_ = 0;
  std::vector<Gate> gates_;
};

/// Concrete values for every variational parameter of a circuit.
struct Parametrization {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::span<const double> view() const { return values; }
};

/// Default cap on the register width for dense unitary construction.
inline constexpr int kMaxDenseWidth = 6;

/// Matrix of a gate kind at a bound angle (ignored for H, CX, SWAP).
CMatrix gate_matrix(GateKind kind, double angle = 0.0);

/// Matrix of a gate whose angle is constant; throws UnboundParameterError otherwise.
CMatrix gate_matrix(const Gate& gate);

/// Product of the circuit's gates in program order (later gates on the left).
CMatrix build_unitary(const Circuit& circuit, const Parametrization& params,
                      int max_dense_width = kMaxDenseWidth);

/// Resolves every affine angle to a constant; the result has no parameters.
Circuit bind_parameters(const Circuit& circuit, const Parametrization& params);

/// Combines same-axis rotations on a qubit with no intervening gate on that qubit.
Circuit merge_rotations(const Circuit& circuit);

/// Pulse duration per gate kind, in ns.
class GateTimes {
 public:
  GateTimes() = default;
  explicit GateTimes(std::map<GateKind, double> durations) : durations_(std::move(durations)) {}

  /// Durations of the gmon reference library: Rz 0.4, Rx 2.5, H 1.4, CX 3.8, SWAP 7.4.
  static GateTimes reference();

  double at(GateKind kind) const;
  void set(GateKind kind, double ns) { durations_[kind] = ns; }
  bool contains(GateKind kind) const { return durations_.contains(kind); }

 private:
  std::map<GateKind, double> durations_;
};

/// As-soon-as-possible placement where gates sharing a qubit serialize.
struct AsapSchedule {
  std::vector<double> start_ns;
  std::vector<double> duration_ns;
  double total_ns = 0.0;
};

AsapSchedule asap_schedule(const Circuit& circuit, const GateTimes& times);

/// Longest path through the qubit-conflict DAG weighted by `times`.
double critical_path_runtime(const Circuit& circuit, const GateTimes& times);

/// Qubits touched by any gate, ascending.
std::vector<int> active_qubits(const Circuit& circuit);

}  // namespace vqc
