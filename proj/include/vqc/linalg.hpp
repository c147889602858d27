#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace vqc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Qubit 0 is the most significant bit of a basis index, so |q0 q1 ... q_{n-1}>
// maps to row q0*2^{n-1} + ... + q_{n-1}. This matches the printed CX matrix
// with the control on the first operand.

/// Embeds a 2x2 or 4x4 operator acting on `qubits` (in operand order) into an
/// n-qubit register.
CMatrix embed_operator(const CMatrix& op, std::span<const int> qubits, int n_qubits);

/// Left-multiplies `target` (2^n rows) in place by `op` embedded on `qubits`,
/// without materializing the embedded matrix.
void apply_operator(CMatrix& target, const CMatrix& op, std::span<const int> qubits, int n_qubits);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// max |(U^dagger U - I)_{ij}|
double unitarity_error(const CMatrix& u);

/// max |A - A^dagger|
double hermiticity_error(const CMatrix& a);

inline std::size_t dim_for(int n_qubits) { return std::size_t{1} << n_qubits; }

}  // namespace vqc
