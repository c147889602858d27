#include "vqc/partition.hpp"

#include <algorithm>
#include <set>

namespace vqc {

std::string Block::tag() const {
  switch (kind) {
    case BlockKind::Fixed: return "fixed";
    case BlockKind::ParamGate: return "param_gate(" + std::to_string(param) + ")";
    case BlockKind::SingleParam: return "single_param(" + std::to_string(param) + ")";
    case BlockKind::Mixed: return "mixed";
  }
  return "?";
}

Block make_block(const Circuit& parent, const std::vector<Gate>& gates) {
  std::set<int> qs, params;
  for (const auto& g : gates) {
    qs.insert(g.qubits.begin(), g.qubits.end());
    if (g.is_parametrized()) params.insert(g.angle->param_index());
  }
  Block b;
  b.qubits.assign(qs.begin(), qs.end());
  if (params.empty()) {
    b.kind = BlockKind::Fixed;
  } else if (params.size() == 1) {
    b.param = *params.begin();
    const bool single_gate = gates.size() == 1;
    b.kind = single_gate ? BlockKind::ParamGate : BlockKind::SingleParam;
  } else {
    b.kind = BlockKind::Mixed;
  }

  std::vector<int> local(parent.width(), -1);
  for (int k = 0; k < b.width(); ++k) local[b.qubits[k]] = k;
  b.subcircuit = Circuit(b.width(), params.empty() ? 0 : parent.param_count());
  for (const auto& g : gates) {
    Gate lg = g;
    for (int& q : lg.qubits) q = local[q];
    b.subcircuit.add(std::move(lg));
  }
  return b;
}

namespace {

// Gates sorted by ASAP layer (unit durations); stable, so it is a topological order.
std::vector<Gate> layer_order(const std::vector<Gate>& gates, int width) {
  std::vector<int> ready(width, 0);
  std::vector<std::pair<int, std::size_t>> keyed;
  keyed.reserve(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i) {
    int layer = 0;
    for (int q : gates[i].qubits) layer = std::max(layer, ready[q]);
    for (int q : gates[i].qubits) ready[q] = layer + 1;
    keyed.emplace_back(layer, i);
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Gate> out;
  out.reserve(gates.size());
  for (const auto& [layer, i] : keyed) out.push_back(gates[i]);
  return out;
}

std::vector<Block> split_by_width(const Circuit& parent, const std::vector<Gate>& gates,
                                  int max_width) {
  std::vector<Block> blocks;
  std::vector<Gate> current;
  std::set<int> current_qubits;
  for (const auto& g : layer_order(gates, parent.width())) {
    std::set<int> merged = current_qubits;
    merged.insert(g.qubits.begin(), g.qubits.end());
    if (static_cast<int>(merged.size()) > max_width && !current.empty()) {
      blocks.push_back(make_block(parent, current));
      current.clear();
      merged.clear();
      merged.insert(g.qubits.begin(), g.qubits.end());
    }
    current.push_back(g);
    current_qubits = std::move(merged);
  }
  if (!current.empty()) blocks.push_back(make_block(parent, current));
  return blocks;
}

void append_fixed(PartitionPlan& plan, const Circuit& parent, const std::vector<Gate>& gates,
                  int max_width) {
  if (gates.empty()) return;
  for (auto& b : split_by_width(parent, gates, max_width)) plan.blocks.push_back(std::move(b));
}

}  // namespace

std::vector<Block> block_max_width(const Circuit& circuit, int max_width) {
  if (max_width < 2) throw PartitionError("max_width must be at least 2");
  return split_by_width(circuit, circuit.gates(), max_width);
}

PartitionPlan partition_strict(const Circuit& circuit, int max_width) {
  PartitionPlan plan{circuit.width(), circuit.param_count(), {}};
  std::vector<Gate> fixed;
  for (const auto& g : circuit.gates()) {
    if (!g.is_parametrized()) {
      fixed.push_back(g);
      continue;
    }
    if (!is_rotation(g.kind)) {
      throw PartitionError("strict partitioning supports parametrized RZ and RX only");
    }
    append_fixed(plan, circuit, fixed, max_width);
    fixed.clear();
    plan.blocks.push_back(make_block(circuit, {g}));
  }
  append_fixed(plan, circuit, fixed, max_width);
  return plan;
}

bool check_parameter_monotonicity(const Circuit& circuit) {
  int last = -1;
  for (const auto& g : circuit.gates()) {
    if (!g.is_parametrized()) continue;
    const int p = g.angle->param_index();
    if (p < last) return false;
    last = p;
  }
  return true;
}

PartitionPlan partition_flexible(const Circuit& circuit, int max_width) {
  if (!check_parameter_monotonicity(circuit)) {
    throw PartitionError("circuit is not parameter-monotone; use strict partitioning");
  }
  PartitionPlan plan{circuit.width(), circuit.param_count(), {}};
  const auto& gates = circuit.gates();

  // Runs: [first use of parameter p, first use of the next parameter), so the
  // free gates between two runs go to the earlier one.
  std::vector<std::size_t> run_starts;
  int last = -1;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (!gates[i].is_parametrized() || gates[i].angle->param_index() == last) continue;
    last = gates[i].angle->param_index();
    run_starts.push_back(i);
  }
  if (run_starts.empty()) {
    append_fixed(plan, circuit, gates, max_width);
    return plan;
  }

  std::size_t last_param_gate = 0;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (gates[i].is_parametrized()) last_param_gate = i;
  }

  append_fixed(plan, circuit, {gates.begin(), gates.begin() + run_starts.front()}, max_width);
  for (std::size_t r = 0; r < run_starts.size(); ++r) {
    const std::size_t begin = run_starts[r];
    const std::size_t end = r + 1 < run_starts.size() ? run_starts[r + 1] : last_param_gate + 1;
    const int param = gates[begin].angle->param_index();
    for (auto& b : split_by_width(circuit, {gates.begin() + begin, gates.begin() + end}, max_width)) {
      // Width splits can leave parameter-free pieces; those stay Fixed so they
      // are precompiled like any other Fixed block.
      if (b.kind != BlockKind::Fixed) {
        b.kind = BlockKind::SingleParam;
        b.param = param;
      }
      plan.blocks.push_back(std::move(b));
    }
  }
  append_fixed(plan, circuit, {gates.begin() + last_param_gate + 1, gates.end()}, max_width);
  return plan;
}

Parametrization block_parameters(const Block& block, const Parametrization& parent) {
  if (block.subcircuit.param_count() == 0) return {};
  return parent;
}

CMatrix block_unitary(const Block& block, const Parametrization& parent) {
  return build_unitary(block.subcircuit, block_parameters(block, parent));
}

CMatrix plan_unitary(const PartitionPlan& plan, const Parametrization& params, int max_dense_width) {
  if (plan.parent_width > max_dense_width) {
    throw CircuitError("width " + std::to_string(plan.parent_width) +
                       " exceeds dense unitary cap " + std::to_string(max_dense_width));
  }
  if (params.size() != static_cast<std::size_t>(plan.parent_params)) {
    throw CircuitError("parametrization has " + std::to_string(params.size()) +
                       " values, plan expects " + std::to_string(plan.parent_params));
  }
  const auto dim = static_cast<Eigen::Index>(dim_for(plan.parent_width));
  CMatrix u = CMatrix::Identity(dim, dim);
  for (const auto& b : plan.blocks) {
    apply_operator(u, block_unitary(b, params), b.qubits, plan.parent_width);
  }
  return u;
}

}  // namespace vqc
