#include "vqc/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace vqc::kernels {

Generators::Generators(std::vector<RMatrix> dense) : dense_(std::move(dense)) {
  if (dense_.empty()) return;
  dim_ = dense_.front().rows();
  nonzeros_.resize(dense_.size());
  for (std::size_t f = 0; f < dense_.size(); ++f) {
    const RMatrix& g = dense_[f];
    if (g.rows() != dim_ || g.cols() != dim_) {
      throw std::invalid_argument("generators must share one square dimension");
    }
    for (Eigen::Index c = 0; c < dim_; ++c) {
      for (Eigen::Index r = 0; r < dim_; ++r) {
        if (g(r, c) != 0.0) nonzeros_[f].push_back({r, c, g(r, c)});
      }
    }
  }
}

void Generators::combine(std::span<const double> amplitudes, RMatrix& out) const {
  out.setZero(dim_, dim_);
  for (std::size_t f = 0; f < nonzeros_.size(); ++f) {
    const double a = amplitudes[f];
    if (a == 0.0) continue;
    for (const auto& e : nonzeros_[f]) out(e.row, e.col) += a * e.value;
  }
}

Complex Generators::contract(int f, const CMatrix& z) const {
  Complex acc{};
  for (const auto& e : nonzeros_[f]) acc += e.value * z(e.row, e.col);
  return acc;
}

int max_threads() { return omp_get_max_threads(); }

namespace {

struct Step {
  RMatrix basis;              // O_k
  RVector eigenvalues;        // l_k
  Eigen::VectorXcd phases;    // exp(-i l_k dt)
};

void diagonalize(const Generators& gens, const RMatrix& amplitudes, double dt, Eigen::Index k,
                 Eigen::SelfAdjointEigenSolver<RMatrix>& solver, RMatrix& h, std::vector<double>& column,
                 Step& step) {
  for (Eigen::Index f = 0; f < amplitudes.rows(); ++f) column[f] = amplitudes(f, k);
  gens.combine(column, h);
  solver.compute(h, Eigen::ComputeEigenvectors);
  step.basis = solver.eigenvectors();
  step.eigenvalues = solver.eigenvalues();
  step.phases.resize(step.eigenvalues.size());
  for (Eigen::Index i = 0; i < step.eigenvalues.size(); ++i) {
    step.phases(i) = std::polar(1.0, -step.eigenvalues(i) * dt);
  }
}

std::vector<Step> diagonalize_all(const Generators& gens, const RMatrix& amplitudes, double dt,
                                  Backend backend) {
  if (amplitudes.rows() != gens.count()) {
    throw std::invalid_argument("pulse has " + std::to_string(amplitudes.rows()) +
                                " fields, controls have " + std::to_string(gens.count()));
  }
  const Eigen::Index n = amplitudes.cols();
  std::vector<Step> steps(n);
  if (backend == Backend::serial) {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(gens.dim());
    RMatrix h;
    std::vector<double> column(gens.count());
    for (Eigen::Index k = 0; k < n; ++k) diagonalize(gens, amplitudes, dt, k, solver, h, column, steps[k]);
    return steps;
  }
#pragma omp parallel
  {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(gens.dim());
    RMatrix h;
    std::vector<double> column(gens.count());
#pragma omp for schedule(static)
    for (Eigen::Index k = 0; k < n; ++k) diagonalize(gens, amplitudes, dt, k, solver, h, column, steps[k]);
  }
  return steps;
}

// Divided differences of exp(-i l dt): the eigenbasis kernel of d exp(-i H dt).
void divided_differences(const Step& step, double dt, CMatrix& gamma) {
  const Eigen::Index d = step.eigenvalues.size();
  gamma.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double half = 0.5 * (step.eigenvalues(i) - step.eigenvalues(j)) * dt;
      const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
      const double mean = 0.5 * (step.eigenvalues(i) + step.eigenvalues(j)) * dt;
      gamma(i, j) = Complex(0.0, -dt) * std::polar(sinc, -mean);
    }
  }
}

// dg/du_f[k] for g = Tr(P_k U_k R_{k-1}), given A = O^T R_{k-1} and B = P_k O.
void step_gradient(const Generators& gens, const Step& step, double dt, const CMatrix& a,
                   const CMatrix& b, Complex g, double scale, Eigen::Index k, CMatrix& q,
                   CMatrix& gamma, CMatrix& s, CMatrix& z, RMatrix& out) {
  q.noalias() = a * b;
  divided_differences(step, dt, gamma);
  s = q.transpose().cwiseProduct(gamma);
  z.noalias() = step.basis * s * step.basis.transpose();
  for (int f = 0; f < gens.count(); ++f) {
    out(f, k) = scale * (std::conj(g) * gens.contract(f, z)).real();
  }
}

}  // namespace

CMatrix propagate(const Generators& gens, const RMatrix& amplitudes, double dt, Backend backend) {
  const auto steps = diagonalize_all(gens, amplitudes, dt, backend);
  CMatrix u = CMatrix::Identity(gens.dim(), gens.dim());
  CMatrix tmp;
  for (const auto& st : steps) {
    tmp.noalias() = st.basis.transpose() * u;
    u.noalias() = st.basis * (st.phases.asDiagonal() * tmp);
  }
  return u;
}

FidelityGradient fidelity_gradient(const Generators& gens, const RMatrix& amplitudes, double dt,
                                   const CMatrix& target, Backend backend) {
  const Eigen::Index d = gens.dim();
  if (target.rows() != d || target.cols() != d) {
    throw std::invalid_argument("target dimension does not match the controls");
  }
  const auto steps = diagonalize_all(gens, amplitudes, dt, backend);
  const auto n = static_cast<Eigen::Index>(steps.size());

  // Forward sweep, keeping A_k = O_k^T R_{k-1}.
  std::vector<CMatrix> fwd(n);
  CMatrix r = CMatrix::Identity(d, d);
  for (Eigen::Index k = 0; k < n; ++k) {
    fwd[k].noalias() = steps[k].basis.transpose() * r;
    r.noalias() = steps[k].basis * (steps[k].phases.asDiagonal() * fwd[k]);
  }

  FidelityGradient out;
  const CMatrix target_dag = target.adjoint();
  const Complex g = (target_dag * r).trace();
  const double dd = static_cast<double>(d) * static_cast<double>(d);
  out.fidelity = std::norm(g) / dd;
  out.unitary = std::move(r);
  out.d_fidelity.setZero(gens.count(), n);
  const double scale = 2.0 / dd;

  CMatrix p = target_dag;
  if (backend == Backend::serial) {
    CMatrix b, q, gamma, s, z;
    for (Eigen::Index k = n - 1; k >= 0; --k) {
      b.noalias() = p * steps[k].basis;
      step_gradient(gens, steps[k], dt, fwd[k], b, g, scale, k, q, gamma, s, z, out.d_fidelity);
      p.noalias() = (b * steps[k].phases.asDiagonal()) * steps[k].basis.transpose();
    }
    return out;
  }

  std::vector<CMatrix> bwd(n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    bwd[k].noalias() = p * steps[k].basis;
    p.noalias() = (bwd[k] * steps[k].phases.asDiagonal()) * steps[k].basis.transpose();
  }
#pragma omp parallel
  {
    CMatrix q, gamma, s, z;
#pragma omp for schedule(static)
    for (Eigen::Index k = 0; k < n; ++k) {
      step_gradient(gens, steps[k], dt, fwd[k], bwd[k], g, scale, k, q, gamma, s, z, out.d_fidelity);
    }
  }
  return out;
}

}  // namespace vqc::kernels
