#pragma once

// Propagation and gradient kernels for piecewise-constant control pulses.
//
// Every generator produced by the gmon Hamiltonian is real symmetric, so each
// step Hamiltonian H_k = sum_f u_f[k] G_f is diagonalized as O_k diag(l_k) O_k^T
// with a real orthogonal O_k, and exp(-i H_k dt) = O_k diag(exp(-i l_k dt)) O_k^T.
//
// The gradient is exact for the piecewise-constant propagator: the derivative
// of each step exponential is taken in its eigenbasis (divided differences of
// exp(-i l dt)), not through the first-order -i dt G_f U_k approximation.
//
// Two implementations share this interface: `serial` is the reference, and
// `parallel` spreads the per-step diagonalization and gradient contraction
// over OpenMP threads. The cumulative products stay sequential in both.

#include <span>
#include <vector>

#include "vqc/linalg.hpp"

namespace vqc::kernels {

/// Real symmetric generators with their nonzero pattern.
class Generators {
 public:
  Generators() = default;
  explicit Generators(std::vector<RMatrix> dense);

  int count() const { return static_cast<int>(dense_.size()); }
  Eigen::Index dim() const { return dim_; }
  const RMatrix& operator[](int f) const { return dense_[f]; }

  /// sum_f amplitudes[f] * G_f
  void combine(std::span<const double> amplitudes, RMatrix& out) const;

  /// sum_{c,d} G_f[c,d] * z[c,d]
  Complex contract(int f, const CMatrix& z) const;

 private:
  struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    double value;
  };
  std::vector<RMatrix> dense_;
  std::vector<std::vector<Entry>> nonzeros_;
  Eigen::Index dim_ = 0;
};

enum class Backend { serial, parallel };

/// Product of all step exponentials, later steps on the left. `amplitudes` is
/// fields x steps.
CMatrix propagate(const Generators& gens, const RMatrix& amplitudes, double dt,
                  Backend backend = Backend::parallel);

struct FidelityGradient {
  double fidelity = 0.0;
  CMatrix unitary;
  RMatrix d_fidelity;  // fields x steps, dF/du
};

/// Trace fidelity |Tr(target^dagger U)|^2 / d^2 and its derivative with respect
/// to every amplitude.
FidelityGradient fidelity_gradient(const Generators& gens, const RMatrix& amplitudes, double dt,
                                   const CMatrix& target, Backend backend = Backend::parallel);

/// Number of OpenMP threads the parallel backend will use.
int max_threads();

}  // namespace vqc::kernels
