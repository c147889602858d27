#include "vqc/qasm_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace vqc {

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(char c) {
    if (peek() != c) return false;
    advance();
    return true;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'" + found());
  }

  std::string identifier() {
    skip_space();
    std::string out;
    while (pos_ < text_.size() &&
           (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_]))));
      advance();
    }
    return out;
  }

  long integer() {
    skip_space();
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    if (begin == pos_) fail("expected integer" + found());
    if (pos_ - begin > 9) fail("integer too large");
    long v = 0;
    std::from_chars(text_.data() + begin, text_.data() + pos_, v);
    return v;
  }

  /// Optionally signed decimal literal or `pi`. Returns nullopt without consuming
  /// anything when the next token is not a number.
  std::optional<double> number() {
    skip_space();
    const std::size_t save = pos_;
    const int save_line = line_, save_col = col_;
    double sign = 1.0;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      if (text_[pos_] == '-') sign = -1.0;
      advance();
      skip_space();
    }
    if (pos_ + 1 < text_.size() && std::tolower(static_cast<unsigned char>(text_[pos_])) == 'p' &&
        std::tolower(static_cast<unsigned char>(text_[pos_ + 1])) == 'i' &&
        (pos_ + 2 >= text_.size() || !std::isalnum(static_cast<unsigned char>(text_[pos_ + 2])))) {
      advance();
      advance();
      return sign * std::numbers::pi;
    }
    const std::size_t begin = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      const bool exponent_sign = (c == '+' || c == '-') && pos_ > begin &&
                                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' ||
          exponent_sign) {
        advance();
      } else {
        break;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + begin, text_.data() + pos_, v);
    if (begin == pos_ || res.ec != std::errc{} || res.ptr != text_.data() + pos_) {
      pos_ = save;
      line_ = save_line;
      col_ = save_col;
      return std::nullopt;
    }
    return sign * v;
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col_, msg); }

  std::string found() {
    skip_space();
    if (pos_ >= text_.size()) return ", found end of input";
    return std::string(", found '") + text_[pos_] + "'";
  }

  int line() const { return line_; }
  int column() const { return col_; }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct Located {
  int line;
  int column;
};

int parse_qubit(Lexer& lx, int width) {
  const Located at{lx.line(), lx.column()};
  if (lx.identifier() != "q") lx.fail("expected qubit reference q[<i>]");
  lx.expect('[');
  const long q = lx.integer();
  lx.expect(']');
  if (q >= width) {
    throw ParseError(at.line, at.column,
                     "qubit index " + std::to_string(q) + " >= qubits " + std::to_string(width));
  }
  return static_cast<int>(q);
}

ParamAngle parse_angle(Lexer& lx, int param_count) {
  double coefficient = 1.0;
  auto head = lx.number();
  if (head) {
    if (!lx.accept('*')) return ParamAngle::constant(*head);
    coefficient = *head;
  }
  const Located at{lx.line(), lx.column()};
  if (lx.identifier() != "t") lx.fail(head ? "expected t[<i>] after '*'" : "expected angle");
  lx.expect('[');
  const long index = lx.integer();
  lx.expect(']');
  if (index >= param_count) {
    throw ParseError(at.line, at.column,
                     "param index " + std::to_string(index) + " >= params " +
                         std::to_string(param_count));
  }
  double offset = 0.0;
  const char next = lx.peek();
  if (next == '+' || next == '-') {
    lx.accept(next);
    auto off = lx.number();
    if (!off) lx.fail("expected offset" + lx.found());
    offset = next == '-' ? -*off : *off;
  }
  return ParamAngle::affine(static_cast<int>(index), coefficient, offset);
}

}  // namespace

Circuit parse_circuit(std::string_view text) {
  Lexer lx(text);
  std::optional<int> width;
  std::optional<int> params;
  Circuit circuit;
  bool body_started = false;

  while (!lx.at_end()) {
    const Located at{lx.line(), lx.column()};
    const std::string keyword = lx.identifier();
    if (keyword.empty()) lx.fail("expected statement" + lx.found());

    if (keyword == "qubits" || keyword == "params") {
      if (body_started) throw ParseError(at.line, at.column, "header after first gate");
      auto& slot = keyword == "qubits" ? width : params;
      if (slot) throw ParseError(at.line, at.column, "duplicate header '" + keyword + "'");
      slot = static_cast<int>(lx.integer());
      lx.expect(';');
      continue;
    }

    if (!width) throw ParseError(at.line, at.column, "gate before 'qubits' header");
    if (!body_started) {
      circuit = Circuit(*width, params.value_or(0));
      body_started = true;
    }

    Gate gate;
    if (keyword == "rz" || keyword == "rx") {
      lx.expect('(');
      const ParamAngle angle = parse_angle(lx, circuit.param_count());
      lx.expect(')');
      const int q = parse_qubit(lx, circuit.width());
      gate = keyword == "rz" ? Gate::rz(q, angle) : Gate::rx(q, angle);
    } else if (keyword == "h") {
      gate = Gate::h(parse_qubit(lx, circuit.width()));
    } else if (keyword == "cx" || keyword == "swap") {
      const int a = parse_qubit(lx, circuit.width());
      lx.expect(',');
      const int b = parse_qubit(lx, circuit.width());
      gate = keyword == "cx" ? Gate::cx(a, b) : Gate::swap(a, b);
    } else {
      throw ParseError(at.line, at.column, "unknown gate '" + keyword + "'");
    }
    lx.expect(';');
    try {
      circuit.add(std::move(gate));
    } catch (const CircuitError& e) {
      throw ParseError(at.line, at.column, e.what());
    }
  }

  if (!body_started) {
    if (!width) throw ParseError(lx.line(), lx.column(), "missing 'qubits' header");
    circuit = Circuit(*width, params.value_or(0));
  }
  return circuit;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_angle(const ParamAngle& a) {
  if (a.is_constant()) return format_real(a.offset());
  std::string out = format_real(a.coefficient()) + "*t[" + std::to_string(a.param_index()) + "]";
  if (a.offset() != 0.0) out += " + " + format_real(a.offset());
  return out;
}

}  // namespace

std::string serialize_circuit(const Circuit& circuit) {
  std::ostringstream os;
  os << "qubits " << circuit.width() << "; params " << circuit.param_count() << ";";
  for (const auto& g : circuit.gates()) {
    os << '\n' << to_string(g.kind);
    if (g.angle) os << '(' << format_angle(*g.angle) << ')';
    os << " q[" << g.qubits[0] << ']';
    if (g.qubits.size() == 2) os << ", q[" << g.qubits[1] << ']';
    os << ';';
  }
  return os.str();
}

Circuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open circuit file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_circuit(buf.str());
}

void save_circuit(const Circuit& circuit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write circuit file " + path);
  out << serialize_circuit(circuit) << '\n';
}

}  // namespace vqc
