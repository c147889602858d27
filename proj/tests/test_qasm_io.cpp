#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vqc/qasm_io.hpp"

using namespace vqc;

TEST(Parse, AffineRotation) {
  const auto c = parse_circuit("qubits 1; params 1;\nrz(0.5*t[0]) q[0];");
  EXPECT_EQ(c.width(), 1);
  EXPECT_EQ(c.param_count(), 1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.gates()[0], Gate::rz(0, ParamAngle::affine(0, 0.5, 0.0)));
}

TEST(Parse, Cnot) {
  const auto c = parse_circuit("qubits 2; params 0;\ncx q[0], q[1];");
  EXPECT_EQ(c, Circuit(2, 0, {Gate::cx(0, 1)}));
}

TEST(Parse, ParamIndexOutOfRange) {
  try {
    parse_circuit("qubits 1; params 0;\nrz(t[0]) q[0];");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("param index 0"), std::string::npos) << e.what();
  }
}

TEST(Parse, ExpressionForms) {
  const auto c = parse_circuit(
      "# comment line\n"
      "QUBITS 2; Params 3;\n"
      "rx(pi) q[0];   # trailing comment\n"
      "rz(-1.5) q[1];\n"
      "rz(t[2] + 0.25) q[0];\n"
      "rx(-2*t[1] - 0.5) q[1];\n"
      "swap q[1], q[0];\n"
      "h q[1];\n");
  ASSERT_EQ(c.size(), 6u);
  EXPECT_DOUBLE_EQ(c.gates()[0].angle->value(), std::numbers::pi);
  EXPECT_DOUBLE_EQ(c.gates()[1].angle->value(), -1.5);
  EXPECT_EQ(*c.gates()[2].angle, ParamAngle::affine(2, 1.0, 0.25));
  EXPECT_EQ(*c.gates()[3].angle, ParamAngle::affine(1, -2.0, -0.5));
  EXPECT_EQ(c.gates()[4], Gate::swap(1, 0));
}

TEST(Parse, LocatedErrors) {
  const char* bad[] = {
      "qubits 1; params 0;\nh q[1];",               // qubit out of range
      "qubits 1; qubits 2;",                        // duplicate header
      "h q[0];",                                    // missing header
      "qubits 2; params 0;\ncx q[0], q[0];",        // repeated qubit
      "qubits 1; params 0;\nh q[0]",                // missing semicolon
      "qubits 1; params 0;\nfoo q[0];",             // unknown gate
      "qubits 1; params 0;\nrz() q[0];",            // empty angle
      "qubits 1; params 0;\nh q[0];\nqubits 1;",    // header after gates
  };
  for (const char* text : bad) {
    try {
      parse_circuit(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_GE(e.line(), 1);
      EXPECT_GE(e.column(), 1);
    }
  }
}

TEST(Serialize, Hadamard) {
  EXPECT_EQ(serialize_circuit(Circuit(1, 0, {Gate::h(0)})), "qubits 1; params 0;\nh q[0];");
}

TEST(Serialize, EmptyCircuitIsHeaderOnly) {
  EXPECT_EQ(serialize_circuit(Circuit(3, 0)), "qubits 3; params 0;");
}

TEST(Serialize, RoundTripRandomCircuits) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = oracle::random_circuit(rng, 1 + trial % 5, trial % 4, trial % 40, 0.5);
    EXPECT_EQ(parse_circuit(serialize_circuit(c)), c) << serialize_circuit(c);
  }
}

TEST(Parse, FuzzNeverCrashes) {
  std::mt19937_64 rng(1234);
  const std::string alphabet = "qubitsparmzxhcwp[];,()*+-.0123456789t# \n";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> length(0, 80);
  const std::string seed_doc = "qubits 2; params 1;\nrz(0.5*t[0]) q[1];\ncx q[0], q[1];\n";
  std::uniform_int_distribution<std::size_t> pos(0, seed_doc.size() - 1);
  for (int trial = 0; trial < 5000; ++trial) {
    std::string text;
    if (trial % 2 == 0) {
      for (int i = length(rng); i > 0; --i) text += alphabet[pick(rng)];
    } else {
      text = seed_doc;
      for (int edits = 0; edits < 3; ++edits) text[pos(rng)] = alphabet[pick(rng)];
    }
    try {
      parse_circuit(text);
    } catch (const ParseError&) {
    }
  }
}
