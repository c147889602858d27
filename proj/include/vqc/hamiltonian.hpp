#pragma once

#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vqc/linalg.hpp"

namespace vqc {

/// Converts a frequency in GHz to an angular rate in rad/ns (GHz * ns = 1).
constexpr double ghz_to_rad_per_ns(double ghz) { return 2.0 * std::numbers::pi * ghz; }

using Edge = std::pair<int, int>;

/// Control Hamiltonian description for a gmon register in the qubit subspace.
struct HamiltonianSpec {
  int n_qubits = 1;
  std::vector<Edge> edges;
  double charge_bound = ghz_to_rad_per_ns(0.1);    // rad/ns
  double flux_bound = ghz_to_rad_per_ns(1.5);      // rad/ns
  double coupling_bound = ghz_to_rad_per_ns(0.05); // rad/ns

  /// Throws std::invalid_argument on non-positive bounds or bad edges.
  void validate() const;

  /// Same bounds, restricted to `qubits` and relabelled to 0..k-1 in the given order.
  HamiltonianSpec restricted(std::span<const int> qubits) const;

  bool operator==(const HamiltonianSpec&) const = default;
};

/// Nearest-neighbour edges of a rows x cols grid, row-major qubit numbering.
std::vector<Edge> grid_edges(int rows, int cols);

/// The most square rows x cols grid holding exactly n qubits (1x2, 1x3, 2x2, 2x3, ...).
std::pair<int, int> near_square_grid(int n);

/// Spec for `n` qubits on their near-square grid, with default bounds.
HamiltonianSpec grid_spec(int n);

struct ControlField {
  std::string label;  // charge[j], flux[j], coupling[j,k]
  CMatrix matrix;     // Hermitian generator on the full register
  double bound;       // rad/ns
};

/// Charge (sigma_x) and flux (|1><1|) fields per qubit in qubit order, then one
/// sigma_x (x) sigma_x coupling per edge. The drift Hamiltonian is zero.
std::vector<ControlField> build_controls(const HamiltonianSpec& spec,
                                         int max_dense_width = 6);

}  // namespace vqc
