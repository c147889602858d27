#include "vqc/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace vqc {

void HamiltonianSpec::validate() const {
  if (n_qubits < 1) throw std::invalid_argument("hamiltonian: need at least one qubit");
  if (!(charge_bound > 0) || !(flux_bound > 0) || !(coupling_bound > 0)) {
    throw std::invalid_argument("hamiltonian: amplitude bounds must be positive");
  }
  std::set<Edge> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits || a == b) {
      throw std::invalid_argument("hamiltonian: invalid edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ")");
    }
    if (!seen.insert(std::minmax(a, b)).second) {
      throw std::invalid_argument("hamiltonian: duplicate edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ")");
    }
  }
}

HamiltonianSpec HamiltonianSpec::restricted(std::span<const int> qubits) const {
  HamiltonianSpec out = *this;
  out.n_qubits = static_cast<int>(qubits.size());
  out.edges.clear();
  auto local = [&](int q) {
    auto it = std::find(qubits.begin(), qubits.end(), q);
    return it == qubits.end() ? -1 : static_cast<int>(it - qubits.begin());
  };
  for (auto [a, b] : edges) {
    const int la = local(a), lb = local(b);
    if (la >= 0 && lb >= 0) out.edges.emplace_back(std::min(la, lb), std::max(la, lb));
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

std::vector<Edge> grid_edges(int rows, int cols) {
  std::vector<Edge> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int q = r * cols + c;
      if (c + 1 < cols) out.emplace_back(q, q + 1);
      if (r + 1 < rows) out.emplace_back(q, q + cols);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<int, int> near_square_grid(int n) {
  int rows = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (rows > 1 && n % rows != 0) --rows;
  rows = std::max(rows, 1);
  return {rows, n / rows};
}

HamiltonianSpec grid_spec(int n) {
  HamiltonianSpec spec;
  spec.n_qubits = n;
  auto [rows, cols] = near_square_grid(n);
  spec.edges = grid_edges(rows, cols);
  return spec;
}

std::vector<ControlField> build_controls(const HamiltonianSpec& spec, int max_dense_width) {
  spec.validate();
  if (spec.n_qubits > max_dense_width) {
    throw std::invalid_argument("hamiltonian: " + std::to_string(spec.n_qubits) +
                                " qubits exceeds dense cap " + std::to_string(max_dense_width));
  }
  CMatrix sigma_x(2, 2);
  sigma_x << 0, 1, 1, 0;
  CMatrix excited = CMatrix::Zero(2, 2);
  excited(1, 1) = 1.0;
  const CMatrix xx = kron(sigma_x, sigma_x);

  std::vector<ControlField> fields;
  fields.reserve(2 * spec.n_qubits + spec.edges.size());
  for (int j = 0; j < spec.n_qubits; ++j) {
    const int q[] = {j};
    fields.push_back({"charge[" + std::to_string(j) + "]",
                      embed_operator(sigma_x, q, spec.n_qubits), spec.charge_bound});
    fields.push_back({"flux[" + std::to_string(j) + "]",
                      embed_operator(excited, q, spec.n_qubits), spec.flux_bound});
  }
  for (auto [a, b] : spec.edges) {
    const int q[] = {a, b};
    fields.push_back({"coupling[" + std::to_string(a) + "," + std::to_string(b) + "]",
                      embed_operator(xx, q, spec.n_qubits), spec.coupling_bound});
  }
  return fields;
}

}  // namespace vqc
