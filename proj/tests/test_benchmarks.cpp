#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "vqc/benchmarks.hpp"
#include "vqc/grape.hpp"
#include "vqc/partition.hpp"
#include "vqc/qasm_io.hpp"

using namespace vqc;

TEST(RandomGraph, FourNodeThreeRegularIsComplete) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_graph(4, GraphKind::ThreeRegular, seed);
    EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
  }
}

TEST(RandomGraph, OddThreeRegularRejected) {
  EXPECT_THROW(random_graph(5, GraphKind::ThreeRegular, 1), std::invalid_argument);
}

TEST(RandomGraph, Deterministic) {
  for (auto kind : {GraphKind::ErdosRenyi, GraphKind::ThreeRegular}) {
    EXPECT_EQ(random_graph(10, kind, 42).edges, random_graph(10, kind, 42).edges);
  }
  EXPECT_NE(random_graph(10, GraphKind::ErdosRenyi, 1).edges,
            random_graph(10, GraphKind::ErdosRenyi, 2).edges);
}

TEST(RandomGraph, ThreeRegularDegrees) {
  for (int n : {6, 8, 10, 12}) {
    const auto g = random_graph(n, GraphKind::ThreeRegular, n);
    std::vector<int> degree(n, 0);
    std::set<Edge> unique;
    for (auto [a, b] : g.edges) {
      EXPECT_LT(a, b);
      ++degree[a];
      ++degree[b];
      unique.insert({a, b});
    }
    EXPECT_EQ(unique.size(), g.edges.size());
    for (int d : degree) EXPECT_EQ(d, 3);
  }
}

TEST(RandomGraph, KindNames) {
  EXPECT_EQ(parse_graph_kind("3reg"), GraphKind::ThreeRegular);
  EXPECT_EQ(parse_graph_kind("er"), GraphKind::ErdosRenyi);
  EXPECT_EQ(to_string(GraphKind::ErdosRenyi), "er");
  EXPECT_THROW(parse_graph_kind("grid"), std::invalid_argument);
}

TEST(Qaoa, ShapeAndGateCount) {
  const Graph one_edge{2, {{0, 1}}};
  const auto c = qaoa_circuit({one_edge, 1});
  EXPECT_EQ(c.size(), 7u);
  EXPECT_EQ(c.width(), 2);
  for (int p = 1; p <= 4; ++p) {
    const auto g = random_graph(6, GraphKind::ThreeRegular, 3);
    const auto q = qaoa_circuit({g, p});
    EXPECT_EQ(q.param_count(), 2 * p);
    EXPECT_EQ(q.width(), 6);
    EXPECT_EQ(q.size(), 6 + p * (3 * g.edges.size() + 6));
  }
}

TEST(Qaoa, ConstructionOrder) {
  const Graph g{3, {{0, 2}}};
  const auto c = qaoa_circuit({g, 1});
  const std::vector<Gate> expected{
      Gate::h(0), Gate::h(1), Gate::h(2), Gate::cx(0, 2), Gate::rz(2, ParamAngle::affine(0, 1.0)),
      Gate::cx(0, 2), Gate::rx(0, ParamAngle::affine(1, 2.0)), Gate::rx(1, ParamAngle::affine(1, 2.0)),
      Gate::rx(2, ParamAngle::affine(1, 2.0))};
  EXPECT_EQ(c.gates(), expected);
}

TEST(Qaoa, MonotoneForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto kind = seed % 2 ? GraphKind::ErdosRenyi : GraphKind::ThreeRegular;
    const auto c = qaoa_circuit({random_graph(6, kind, seed), 1 + static_cast<int>(seed % 4)});
    EXPECT_TRUE(check_parameter_monotonicity(c)) << seed;
  }
}

TEST(Qaoa, ZeroAnglesGiveHadamardLayer) {
  const auto c = qaoa_circuit({random_graph(4, GraphKind::ThreeRegular, 1), 2});
  const CMatrix h = oracle::gate(GateKind::H, 0.0);
  const CMatrix hh = oracle::embed(h, {0}, 4) * oracle::embed(h, {1}, 4) *
                     oracle::embed(h, {2}, 4) * oracle::embed(h, {3}, 4);
  EXPECT_NEAR(fidelity(build_unitary(c, {std::vector<double>(4, 0.0)}), hh), 1.0, 1e-12);
}

TEST(Qaoa, Manifest) {
  const QaoaSpec spec{random_graph(4, GraphKind::ThreeRegular, 1), 2};
  const auto m = qaoa_manifest(spec, GraphKind::ThreeRegular, 1);
  EXPECT_EQ(m.at("nodes").get<int>(), 4);
  EXPECT_EQ(m.at("p").get<int>(), 2);
  EXPECT_EQ(m.at("edges").size(), 6u);
}

TEST(Parametrization, SampledInRangeAndDeterministic) {
  const auto a = sample_parametrization(6, 9);
  EXPECT_EQ(a.size(), 6u);
  for (double v : a.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 2 * std::numbers::pi);
  }
  EXPECT_EQ(a.values, sample_parametrization(6, 9).values);
}

TEST(H2Fixture, Shape) {
  const auto c = h2_fixture();
  EXPECT_EQ(c.width(), 2);
  EXPECT_EQ(c.param_count(), 3);
  EXPECT_EQ(c.size(), 18u);
  EXPECT_TRUE(check_parameter_monotonicity(c));
}

TEST(H2Fixture, DataFileMatches) {
  EXPECT_EQ(load_circuit(std::string(VQC_DATA_DIR) + "/h2_fixture.vqc"), h2_fixture());
}
