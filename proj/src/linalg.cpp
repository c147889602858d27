#include "vqc/linalg.hpp"

#include <stdexcept>
#include <vector>

namespace vqc {

CMatrix embed_operator(const CMatrix& op, std::span<const int> qubits, int n_qubits) {
  const auto k = static_cast<int>(qubits.size());
  if (op.rows() != (Eigen::Index{1} << k) || op.cols() != op.rows()) {
    throw std::invalid_argument("embed_operator: operator size does not match qubit count");
  }
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  std::vector<int> shifts(k);
  Eigen::Index mask = 0;
  for (int i = 0; i < k; ++i) {
    if (qubits[i] < 0 || qubits[i] >= n_qubits) {
      throw std::out_of_range("embed_operator: qubit index out of range");
    }
    shifts[i] = n_qubits - 1 - qubits[i];
    mask |= Eigen::Index{1} << shifts[i];
  }
  auto local_index = [&](Eigen::Index full) {
    Eigen::Index idx = 0;
    for (int i = 0; i < k; ++i) idx = (idx << 1) | ((full >> shifts[i]) & 1);
    return idx;
  };

  CMatrix out = CMatrix::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    const Eigen::Index rest = col & ~mask;
    const Eigen::Index lc = local_index(col);
    for (Eigen::Index lr = 0; lr < op.rows(); ++lr) {
      const Complex v = op(lr, lc);
      if (v == Complex{}) continue;
      Eigen::Index row = rest;
      for (int i = 0; i < k; ++i) {
        if ((lr >> (k - 1 - i)) & 1) row |= Eigen::Index{1} << shifts[i];
      }
      out(row, col) = v;
    }
  }
  return out;
}

void apply_operator(CMatrix& target, const CMatrix& op, std::span<const int> qubits, int n_qubits) {
  const auto k = static_cast<int>(qubits.size());
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  const Eigen::Index local = Eigen::Index{1} << k;
  if (target.rows() != dim) throw std::invalid_argument("apply_operator: row count is not 2^n");
  if (op.rows() != local || op.cols() != local) {
    throw std::invalid_argument("apply_operator: operator size does not match qubit count");
  }
  std::vector<Eigen::Index> offsets(local, 0);
  Eigen::Index mask = 0;
  for (int i = 0; i < k; ++i) {
    if (qubits[i] < 0 || qubits[i] >= n_qubits) {
      throw std::out_of_range("apply_operator: qubit index out of range");
    }
    const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - qubits[i]);
    mask |= bit;
    for (Eigen::Index l = 0; l < local; ++l) {
      if ((l >> (k - 1 - i)) & 1) offsets[l] |= bit;
    }
  }
  Eigen::VectorXcd gathered(local);
  for (Eigen::Index col = 0; col < target.cols(); ++col) {
    for (Eigen::Index base = 0; base < dim; ++base) {
      if (base & mask) continue;
      for (Eigen::Index l = 0; l < local; ++l) gathered(l) = target(base | offsets[l], col);
      for (Eigen::Index l = 0; l < local; ++l) {
        target(base | offsets[l], col) = op.row(l).transpose().cwiseProduct(gathered).sum();
      }
    }
  }
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double unitarity_error(const CMatrix& u) {
  const CMatrix g = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return g.cwiseAbs().maxCoeff();
}

double hermiticity_error(const CMatrix& a) {
  if (a.rows() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace vqc
