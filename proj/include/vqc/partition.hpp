#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vqc/circuit.hpp"

namespace vqc {

class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BlockKind {
  Fixed,        // no symbolic angles
  ParamGate,    // a single RZ or RX with a symbolic angle
  SingleParam,  // symbolic angles all share one parameter
  Mixed,        // several parameters; only block_max_width on unbound input yields these
};

/// A subcircuit on a subset of the parent's qubits. Local qubit k is parent
/// qubit `qubits[k]`; `qubits` is ascending.
struct Block {
  BlockKind kind = BlockKind::Fixed;
  int param = -1;
  std::vector<int> qubits;
  Circuit subcircuit;

  int width() const { return static_cast<int>(qubits.size()); }
  /// "fixed", "param_gate(i)", "single_param(i)" or "mixed"
  std::string tag() const;
};

struct PartitionPlan {
  int parent_width = 0;
  int parent_params = 0;
  std::vector<Block> blocks;
};

/// Builds a block from parent gates. The subcircuit keeps the parent's
/// parameter count when it has symbolic angles and has none otherwise; the
/// kind is inferred from the parameters it references.
Block make_block(const Circuit& parent, const std::vector<Gate>& gates);

/// Greedy aggregation in ASAP-layer order: a gate joins the open block while
/// the union of qubits stays within `max_width`, otherwise a new block opens.
std::vector<Block> block_max_width(const Circuit& circuit, int max_width = 4);

/// Maximal Fixed blocks alternating with one-gate ParamGate blocks; Fixed
/// blocks wider than `max_width` are split further (still Fixed).
PartitionPlan partition_strict(const Circuit& circuit, int max_width = 4);

/// True iff every parameter's uses are consecutive and first uses ascend.
bool check_parameter_monotonicity(const Circuit& circuit);

/// Blocks that each depend on at most one parameter. Parameter-free gates
/// between two runs join the earlier run; leading and trailing ones form Fixed
/// blocks. Width splits that leave a piece without symbolic gates yield a Fixed
/// block. Throws PartitionError on a non-monotone circuit.
PartitionPlan partition_flexible(const Circuit& circuit, int max_width = 4);

/// The block's parameter values: the parent's for symbolic blocks, none for Fixed.
Parametrization block_parameters(const Block& block, const Parametrization& parent);

/// Unitary of the block subcircuit, in local qubit order.
CMatrix block_unitary(const Block& block, const Parametrization& parent);

/// Ordered product of the embedded block unitaries.
CMatrix plan_unitary(const PartitionPlan& plan, const Parametrization& params,
                     int max_dense_width = kMaxDenseWidth);

}  // namespace vqc
