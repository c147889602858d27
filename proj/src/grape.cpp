#include "vqc/grape.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

namespace vqc {

namespace {
std::atomic<std::uint64_t> invocation_counter{0};
}  // namespace

std::uint64_t grape_invocations() { return invocation_counter.load(); }

ControlPulse ControlPulse::zeros(int n_fields, int n_steps, double dt) {
  return ControlPulse{dt, RMatrix::Zero(n_fields, n_steps)};
}

void GrapeConfig::validate() const {
  if (!(target_fidelity > 0.0 && target_fidelity <= 1.0)) {
    throw std::invalid_argument("grape: target fidelity must lie in (0, 1]");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("grape: learning rate must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("grape: dt must be positive");
  if (sample_rate_divisor < 1) throw std::invalid_argument("grape: sample-rate divisor must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("grape: max_iterations must be >= 0");
}

kernels::Generators to_generators(const std::vector<ControlField>& controls) {
  std::vector<RMatrix> dense;
  dense.reserve(controls.size());
  for (const auto& c : controls) {
    if (c.matrix.rows() != c.matrix.cols()) {
      throw std::invalid_argument("control " + c.label + " is not square");
    }
    if (hermiticity_error(c.matrix) > 1e-12) {
      throw std::invalid_argument("control " + c.label + " is not Hermitian");
    }
    if (c.matrix.imag().cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("control " + c.label + " has complex entries; only real symmetric generators are supported");
    }
    if (!(c.bound > 0.0)) throw std::invalid_argument("control " + c.label + " has a non-positive bound");
    dense.push_back(c.matrix.real());
  }
  return kernels::Generators(std::move(dense));
}

CMatrix propagate(const ControlPulse& pulse, const std::vector<ControlField>& controls) {
  const auto gens = to_generators(controls);
  if (pulse.n_fields() != gens.count()) {
    throw std::invalid_argument("pulse has " + std::to_string(pulse.n_fields()) +
                                " fields, controls have " + std::to_string(gens.count()));
  }
  return kernels::propagate(gens, pulse.amplitudes, pulse.dt);
}

double fidelity(const CMatrix& achieved, const CMatrix& target) {
  if (achieved.rows() != target.rows() || achieved.cols() != target.cols()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  const double d = static_cast<double>(target.rows());
  const double f = std::norm((target.adjoint() * achieved).trace()) / (d * d);
  return std::min(1.0, std::max(0.0, f));
}

RMatrix bounded_amplitudes(const RMatrix& x, const std::vector<ControlField>& controls) {
  RMatrix u = x.array().tanh().matrix();
  for (Eigen::Index f = 0; f < u.rows(); ++f) u.row(f) *= controls[f].bound;
  return u;
}

CostGradient cost_gradient(const RMatrix& x, const std::vector<ControlField>& controls,
                           const kernels::Generators& gens, const CMatrix& target, double dt,
                           double penalty_weight, kernels::Backend backend) {
  const RMatrix a = x.array().tanh().matrix();  // normalized amplitudes
  RMatrix u = a;
  for (Eigen::Index f = 0; f < u.rows(); ++f) u.row(f) *= controls[f].bound;

  const auto fg = kernels::fidelity_gradient(gens, u, dt, target, backend);
  const double count = static_cast<double>(std::max<Eigen::Index>(1, a.size()));

  CostGradient out;
  out.fidelity = fg.fidelity;
  out.cost = (1.0 - fg.fidelity) + penalty_weight * a.squaredNorm() / count;
  const RMatrix sech2 = (1.0 - a.array().square()).matrix();
  out.d_cost.resize(x.rows(), x.cols());
  for (Eigen::Index f = 0; f < x.rows(); ++f) {
    out.d_cost.row(f) = (-fg.d_fidelity.row(f).array() * controls[f].bound +
                         2.0 * penalty_weight * a.row(f).array() / count) *
                        sech2.row(f).array();
  }
  return out;
}

GrapeResult grape_optimize(const CMatrix& target, const HamiltonianSpec& spec,
                           const GrapeConfig& config, double total_time) {
  return grape_optimize(target, build_controls(spec, config.max_dense_width), config, total_time);
}

GrapeResult grape_optimize(const CMatrix& target, const std::vector<ControlField>& controls,
                           const GrapeConfig& config, double total_time) {
  ++invocation_counter;
  config.validate();
  if (!(total_time > 0.0)) throw std::invalid_argument("grape: total_time must be positive");
  const auto gens = to_generators(controls);
  if (target.rows() != gens.dim() || target.cols() != gens.dim()) {
    throw std::invalid_argument("grape: target dimension does not match the controls");
  }
  const double dt = config.step();
  const int n_steps = static_cast<int>(std::lround(total_time / dt));
  if (n_steps <= 0) throw std::invalid_argument("grape: total_time rounds to zero steps");
  const int n_fields = gens.count();

  GrapeResult result;
  result.pulse = ControlPulse::zeros(n_fields, n_steps, dt);

  // The zero pulse realizes the identity; nothing to optimize if that suffices.
  const double idle = fidelity(CMatrix::Identity(gens.dim(), gens.dim()), target);
  if (idle >= config.target_fidelity) {
    result.fidelity = idle;
    result.converged = true;
    result.cost_history.push_back(1.0 - idle);
    return result;
  }

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  RMatrix x(n_fields, n_steps);
  for (int f = 0; f < n_fields; ++f) {
    for (int k = 0; k < n_steps; ++k) x(f, k) = init(rng);
  }

  RMatrix m = RMatrix::Zero(n_fields, n_steps);
  RMatrix v = RMatrix::Zero(n_fields, n_steps);
  RMatrix best_x = x;
  double best_fidelity = -1.0;
  double beta1_power = 1.0, beta2_power = 1.0;
  double lr = config.learning_rate;

  for (int it = 0;; ++it) {
    const auto cg =
        cost_gradient(x, controls, gens, target, dt, config.penalty_weight, config.backend);
    result.cost_history.push_back(cg.cost);
    if (cg.fidelity > best_fidelity) {
      best_fidelity = cg.fidelity;
      best_x = x;
    }
    result.iterations_used = it;
    if (cg.fidelity >= config.target_fidelity) {
      result.converged = true;
      break;
    }
    if (it >= config.max_iterations) break;

    beta1_power *= config.adam_beta1;
    beta2_power *= config.adam_beta2;
    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * cg.d_cost;
    v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * cg.d_cost.cwiseAbs2();
    const double step_size = lr * std::sqrt(1.0 - beta2_power) / (1.0 - beta1_power);
    x.array() -= step_size * m.array() / (v.array().sqrt() + config.adam_epsilon);
    lr *= config.decay_rate;
  }

  result.pulse.amplitudes = bounded_amplitudes(best_x, controls);
  result.fidelity = best_fidelity;
  return result;
}

nlohmann::json pulse_to_json(const ControlPulse& pulse, const std::vector<std::string>& labels,
                             double fidelity) {
  nlohmann::json amps = nlohmann::json::array();
  for (int f = 0; f < pulse.n_fields(); ++f) {
    std::vector<double> row(pulse.n_steps());
    for (int k = 0; k < pulse.n_steps(); ++k) row[k] = pulse.amplitudes(f, k);
    amps.push_back(std::move(row));
  }
  return {{"dt_ns", pulse.dt},
          {"labels", labels},
          {"amplitudes", std::move(amps)},
          {"total_time_ns", pulse.total_time()},
          {"fidelity", fidelity}};
}

ControlPulse pulse_from_json(const nlohmann::json& j) {
  ControlPulse p;
  p.dt = j.at("dt_ns").get<double>();
  const auto& amps = j.at("amplitudes");
  const auto fields = static_cast<Eigen::Index>(amps.size());
  const Eigen::Index steps = fields == 0 ? 0 : static_cast<Eigen::Index>(amps[0].size());
  p.amplitudes.resize(fields, steps);
  for (Eigen::Index f = 0; f < fields; ++f) {
    if (static_cast<Eigen::Index>(amps[f].size()) != steps) {
      throw std::invalid_argument("pulse json: ragged amplitude rows");
    }
    for (Eigen::Index k = 0; k < steps; ++k) p.amplitudes(f, k) = amps[f][k].get<double>();
  }
  return p;
}

}  // namespace vqc
