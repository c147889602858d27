#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "vqc/circuit.hpp"

namespace vqc {

/// A located syntax or range error in a `.vqc` document. Lines and columns are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

/// Parses the `.vqc` circuit text format:
///
///     qubits 2; params 1;      # header, before any gate
///     h q[0];
///     cx q[0], q[1];
///     rz(0.5*t[0] + 0.25) q[1];
///     rx(pi) q[0];
///
/// Keywords are case-insensitive, `#` starts a comment and every statement ends
/// with `;`. Angles are a number, or an affine term `[c*]t[i] [+|- offset]`.
Circuit parse_circuit(std::string_view text);

/// Inverse of parse_circuit; angles carry 17 significant digits so the round trip is exact.
std::string serialize_circuit(const Circuit& circuit);

Circuit load_circuit(const std::string& path);
void save_circuit(const Circuit& circuit, const std::string& path);

}  // namespace vqc
