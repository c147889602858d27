#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "vqc/hamiltonian.hpp"

using namespace vqc;
using std::numbers::pi;

TEST(Units, GhzToRadPerNs) {
  EXPECT_DOUBLE_EQ(ghz_to_rad_per_ns(0.1), 0.2 * pi);
  HamiltonianSpec spec;
  EXPECT_DOUBLE_EQ(spec.charge_bound, 0.2 * pi);
  EXPECT_DOUBLE_EQ(spec.flux_bound, 3.0 * pi);
  EXPECT_DOUBLE_EQ(spec.coupling_bound, 0.1 * pi);
}

TEST(BuildControls, OneQubit) {
  const auto controls = build_controls(grid_spec(1));
  ASSERT_EQ(controls.size(), 2u);
  CMatrix x(2, 2), n(2, 2);
  x << 0, 1, 1, 0;
  n << 0, 0, 0, 1;
  EXPECT_TRUE(controls[0].matrix.isApprox(x, 0.0));
  EXPECT_DOUBLE_EQ(controls[0].bound, 0.2 * pi);
  EXPECT_TRUE(controls[1].matrix.isApprox(n, 0.0));
  EXPECT_DOUBLE_EQ(controls[1].bound, 3.0 * pi);
}

TEST(BuildControls, TwoQubitsCoupling) {
  const auto controls = build_controls(grid_spec(2));
  ASSERT_EQ(controls.size(), 5u);
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  EXPECT_TRUE(controls[4].matrix.isApprox(kron(x, x), 0.0));
  EXPECT_EQ(controls[4].label, "coupling[0,1]");
  EXPECT_DOUBLE_EQ(controls[4].bound, 0.1 * pi);
}

TEST(BuildControls, TwoByTwoGridHasTwelveFields) {
  EXPECT_EQ(near_square_grid(4), std::make_pair(2, 2));
  EXPECT_EQ(grid_edges(2, 2).size(), 4u);
  EXPECT_EQ(build_controls(grid_spec(4)).size(), 12u);
}

TEST(BuildControls, HermitianAndExponentialsUnitary) {
  for (int n = 1; n <= 4; ++n) {
    for (const auto& c : build_controls(grid_spec(n))) {
      EXPECT_LT(hermiticity_error(c.matrix), 1e-12) << c.label;
      const CMatrix u = (CMatrix(std::complex<double>(0, -0.37) * c.matrix)).exp();
      EXPECT_LT(unitarity_error(u), 1e-10) << c.label;
      // Operator norm of each generator is 1.
      Eigen::SelfAdjointEigenSolver<CMatrix> es(c.matrix);
      EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0, 1e-12);
    }
  }
}

TEST(BuildControls, EmbeddingMatchesOracle) {
  HamiltonianSpec spec{3, {{0, 2}}};
  const auto controls = build_controls(spec);
  CMatrix x(2, 2), n(2, 2);
  x << 0, 1, 1, 0;
  n << 0, 0, 0, 1;
  EXPECT_TRUE(controls[2].matrix.isApprox(oracle::embed(x, {1}, 3), 0.0));   // charge[1]
  EXPECT_TRUE(controls[5].matrix.isApprox(oracle::embed(n, {2}, 3), 0.0));   // flux[2]
  EXPECT_TRUE(controls[6].matrix.isApprox(oracle::embed(kron(x, x), {0, 2}, 3), 0.0));
}

TEST(HamiltonianSpec, InvalidEdgesRejected) {
  EXPECT_THROW(build_controls(HamiltonianSpec{2, {{0, 2}}}), std::invalid_argument);
  EXPECT_THROW(build_controls(HamiltonianSpec{2, {{1, 1}}}), std::invalid_argument);
  EXPECT_THROW(build_controls(HamiltonianSpec{3, {{0, 1}, {1, 0}}}), std::invalid_argument);
  HamiltonianSpec negative = grid_spec(2);
  negative.coupling_bound = 0.0;
  EXPECT_THROW(negative.validate(), std::invalid_argument);
}

TEST(HamiltonianSpec, RestrictedRelabels) {
  HamiltonianSpec spec{4, grid_edges(2, 2)};
  const int qubits[] = {1, 3};
  const auto r = spec.restricted(qubits);
  EXPECT_EQ(r.n_qubits, 2);
  ASSERT_EQ(r.edges.size(), 1u);
  EXPECT_EQ(r.edges[0], Edge(0, 1));
}
