#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "vqc/circuit.hpp"
#include "vqc/mintime.hpp"

using namespace vqc;
using std::numbers::pi;

namespace {

GrapeConfig tuned_config() {
  GrapeConfig c;
  c.learning_rate = 0.03;
  return c;
}

}  // namespace

TEST(MinTime, IdentityNeedsNoTime) {
  const auto r = minimal_pulse_time(CMatrix::Identity(2, 2), grid_spec(1), tuned_config(),
                                    MinTimeConfig{}, 1.0);
  EXPECT_EQ(r.minimal_time, 0.0);
  EXPECT_EQ(r.pulse.n_steps(), 0);
  EXPECT_EQ(r.grape_runs, 0);
}

TEST(MinTime, RzPiNearFluxLimit) {
  const auto r = minimal_pulse_time(gate_matrix(GateKind::RZ, pi), grid_spec(1), tuned_config(),
                                    MinTimeConfig{}, 0.4);
  EXPECT_GE(r.minimal_time, 0.30);
  EXPECT_LE(r.minimal_time, 0.65);
  EXPECT_GE(r.fidelity, 0.999);
  EXPECT_NEAR(r.pulse.total_time(), r.minimal_time, 1e-9);
}

TEST(MinTime, RxPiMatchesReferenceDuration) {
  const auto r = minimal_pulse_time(gate_matrix(GateKind::RX, pi), grid_spec(1), tuned_config(),
                                    MinTimeConfig{}, 2.5);
  EXPECT_NEAR(r.minimal_time, 2.5, 0.3);
  EXPECT_GE(r.fidelity, 0.999);
}

TEST(MinTime, ProbesBracketTheResult) {
  const auto r = minimal_pulse_time(gate_matrix(GateKind::H), grid_spec(1), tuned_config(),
                                    MinTimeConfig{}, 1.4);
  EXPECT_EQ(r.grape_runs, static_cast<int>(r.probes.size()));
  bool found = false;
  for (const auto& p : r.probes) {
    if (p.converged) EXPECT_GE(p.time + 1e-12, r.minimal_time);
    if (p.converged && std::abs(p.time - r.minimal_time) < 1e-12) found = true;
  }
  EXPECT_TRUE(found);
  // The bisection window closes within the precision or at one grid step.
  double best_fail = 0.0;
  for (const auto& p : r.probes) {
    if (!p.converged) best_fail = std::max(best_fail, p.time);
  }
  EXPECT_LE(r.minimal_time - best_fail, 0.3 + 0.05 + 1e-9);
}

TEST(MinTime, DoublesInfeasibleUpperBound) {
  // 1 ns cannot hold Rx(pi); doubling reaches 2 and then 4 ns.
  const auto r = minimal_pulse_time(gate_matrix(GateKind::RX, pi), grid_spec(1), tuned_config(),
                                    MinTimeConfig{}, 1.0);
  ASSERT_GE(r.probes.size(), 3u);
  EXPECT_FALSE(r.probes[0].converged);
  EXPECT_DOUBLE_EQ(r.probes[0].time, 1.0);
  EXPECT_NEAR(r.minimal_time, 2.5, 0.3);
}

TEST(MinTime, NoConvergenceCarriesProbeLog) {
  MinTimeConfig cfg;
  cfg.doubling_cap = 2.0;
  try {
    minimal_pulse_time(gate_matrix(GateKind::RX, pi), grid_spec(1), tuned_config(), cfg, 0.5);
    FAIL() << "expected NoConvergenceError";
  } catch (const NoConvergenceError& e) {
    ASSERT_EQ(e.probes().size(), 2u);
    EXPECT_DOUBLE_EQ(e.probes()[0].time, 0.5);
    EXPECT_DOUBLE_EQ(e.probes()[1].time, 1.0);
    EXPECT_FALSE(e.probes()[1].converged);
  }
}

TEST(MinTime, ExplicitUpperBoundOverridesBaseline) {
  MinTimeConfig cfg;
  cfg.upper_bound = 0.6;
  const auto r = minimal_pulse_time(gate_matrix(GateKind::RZ, pi), grid_spec(1), tuned_config(),
                                    cfg, 100.0);
  EXPECT_DOUBLE_EQ(r.probes.front().time, 0.6);
  EXPECT_LE(r.minimal_time, 0.6 + 1e-9);
}

TEST(MinTime, ConfigValidation) {
  MinTimeConfig cfg;
  cfg.precision = 0.0;
  EXPECT_THROW(cfg.validate(0.05), std::invalid_argument);
  cfg = {};
  cfg.doubling_cap = 0.5;
  EXPECT_THROW(cfg.validate(0.05), std::invalid_argument);
  EXPECT_THROW(minimal_pulse_time(gate_matrix(GateKind::H), grid_spec(1), tuned_config(),
                                  MinTimeConfig{}, 0.0),
               std::invalid_argument);
}

TEST(MinTime, ProbeSeedsAreFreshAndDeterministic) {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 50; ++i) seen.insert(probe_seed(7, i));
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(probe_seed(7, 3), probe_seed(7, 3));
  EXPECT_NE(probe_seed(7, 3), probe_seed(8, 3));
}

TEST(MinTime, CeilToGrid) {
  EXPECT_DOUBLE_EQ(ceil_to_grid(0.333, 0.05), 0.35000000000000003);
  EXPECT_NEAR(ceil_to_grid(2.5, 0.05), 2.5, 1e-12);
  EXPECT_NEAR(ceil_to_grid(2.5000001, 0.05), 2.55, 1e-12);
}

TEST(MinTime, ProbeCountAndConsistency) {
  const MinTimeConfig cfg;
  const double baseline = 3.8;
  const auto r = minimal_pulse_time(gate_matrix(GateKind::CX), grid_spec(2), tuned_config(), cfg,
                                    baseline);
  EXPECT_LE(r.minimal_time, baseline + 1e-9);
  int doubling = 0;
  while (doubling < static_cast<int>(r.probes.size()) && !r.probes[doubling].converged) ++doubling;
  EXPECT_LE(static_cast<int>(r.probes.size()),
            static_cast<int>(std::ceil(std::log2(baseline / cfg.precision))) + doubling + 1);
  for (const auto& ok : r.probes) {
    for (const auto& bad : r.probes) {
      if (ok.converged && !bad.converged) EXPECT_GT(ok.time, bad.time - cfg.precision);
    }
  }
}
