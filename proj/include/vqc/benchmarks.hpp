#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqc/circuit.hpp"
#include "vqc/hamiltonian.hpp"

namespace vqc {

struct Graph {
  int n = 0;
  std::vector<Edge> edges;  // i < j, sorted, no duplicates
};

enum class GraphKind { ThreeRegular, ErdosRenyi };

GraphKind parse_graph_kind(const std::string& s);  // "3reg" or "er"
std::string to_string(GraphKind kind);

/// Deterministic in `seed`. ThreeRegular uses the pairing model with rejection
/// of self-loops and multi-edges; ErdosRenyi keeps each pair with probability 1/2.
Graph random_graph(int n, GraphKind kind, std::uint64_t seed);

struct QaoaSpec {
  Graph graph;
  int rounds = 1;
  double cost_coefficient = 1.0;   // RZ angle = cost_coefficient * gamma_r
  double mixer_coefficient = 2.0;  // RX angle = mixer_coefficient * beta_r
};

/// H on every qubit, then per round: CX-RZ(gamma)-CX per edge and RX(beta) per
/// qubit. gamma_r is parameter 2r and beta_r parameter 2r+1.
Circuit qaoa_circuit(const QaoaSpec& spec);

/// Manifest entry written next to generated circuits.
nlohmann::json qaoa_manifest(const QaoaSpec& spec, GraphKind kind, std::uint64_t seed);

/// A fixed parametrization in [0, 2pi) for benchmark runs, drawn from `seed`.
Parametrization sample_parametrization(int param_count, std::uint64_t seed);

/// Hand-written 2-qubit, 3-parameter ansatz with the shape of the H2 UCCSD circuit.
Circuit h2_fixture();

}  // namespace vqc
