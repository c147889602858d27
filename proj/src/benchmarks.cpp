#include "vqc/benchmarks.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

namespace vqc {

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "3reg") return GraphKind::ThreeRegular;
  if (s == "er") return GraphKind::ErdosRenyi;
  throw std::invalid_argument("unknown graph kind '" + s + "' (expected 3reg or er)");
}

std::string to_string(GraphKind kind) {
  return kind == GraphKind::ThreeRegular ? "3reg" : "er";
}

namespace {

Graph pairing_model(int n, std::mt19937_64& rng) {
  std::vector<int> stubs;
  for (int v = 0; v < n; ++v) stubs.insert(stubs.end(), 3, v);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::set<Edge> edges;
    bool ok = true;
    for (std::size_t i = 0; ok && i < stubs.size(); i += 2) {
      const int a = std::min(stubs[i], stubs[i + 1]);
      const int b = std::max(stubs[i], stubs[i + 1]);
      ok = a != b && edges.insert({a, b}).second;
    }
    if (ok) return Graph{n, {edges.begin(), edges.end()}};
  }
  throw std::runtime_error("pairing model did not produce a simple graph");
}

}  // namespace

Graph random_graph(int n, GraphKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (kind == GraphKind::ThreeRegular) {
    if (n < 4 || n % 2 != 0) {
      throw std::invalid_argument("3-regular graphs need an even node count >= 4");
    }
    return pairing_model(n, rng);
  }
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  Graph g{n, {}};
  std::bernoulli_distribution keep(0.5);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (keep(rng)) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

Circuit qaoa_circuit(const QaoaSpec& spec) {
  if (spec.rounds < 1) throw std::invalid_argument("QAOA needs at least one round");
  const int n = spec.graph.n;
  Circuit c(n, 2 * spec.rounds);
  for (int q = 0; q < n; ++q) c.add(Gate::h(q));
  for (int r = 0; r < spec.rounds; ++r) {
    for (const auto& [i, j] : spec.graph.edges) {
      c.add(Gate::cx(i, j));
      c.add(Gate::rz(j, ParamAngle::affine(2 * r, spec.cost_coefficient)));
      c.add(Gate::cx(i, j));
    }
    for (int q = 0; q < n; ++q) {
      c.add(Gate::rx(q, ParamAngle::affine(2 * r + 1, spec.mixer_coefficient)));
    }
  }
  return c;
}

nlohmann::json qaoa_manifest(const QaoaSpec& spec, GraphKind kind, std::uint64_t seed) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : spec.graph.edges) edges.push_back({i, j});
  return {{"nodes", spec.graph.n},
          {"kind", to_string(kind)},
          {"seed", seed},
          {"p", spec.rounds},
          {"edges", std::move(edges)}};
}

Parametrization sample_parametrization(int param_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  Parametrization p;
  p.values.resize(param_count);
  for (auto& v : p.values) v = angle(rng);
  return p;
}

Circuit h2_fixture() {
  // Reference-state preparation, then one single and one double excitation
  // each exponentiated via a CX ladder around a parametrized RZ.
  constexpr double half_pi = std::numbers::pi / 2;
  Circuit c(2, 3);
  c.add(Gate::rx(0, std::numbers::pi));
  c.add(Gate::h(0));
  c.add(Gate::rx(1, half_pi));
  c.add(Gate::cx(0, 1));
  c.add(Gate::rz(1, ParamAngle::affine(0, 1.0)));
  c.add(Gate::cx(0, 1));
  c.add(Gate::h(0));
  c.add(Gate::rx(1, -half_pi));
  c.add(Gate::rx(0, half_pi));
  c.add(Gate::h(1));
  c.add(Gate::cx(0, 1));
  c.add(Gate::rz(1, ParamAngle::affine(1, -1.0)));
  c.add(Gate::cx(0, 1));
  c.add(Gate::rx(0, -half_pi));
  c.add(Gate::h(1));
  c.add(Gate::cx(1, 0));
  c.add(Gate::rz(0, ParamAngle::affine(2, 0.5)));
  c.add(Gate::cx(1, 0));
  return c;
}

}  // namespace vqc
