#include "vqc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace vqc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <class T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": bad number '" + value + "'");
  return out;
}

std::vector<double> parse_list(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_number<double>(item, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<Edge> parse_edges(const std::string& value, const std::string& where) {
  std::vector<Edge> out;
  for (const auto& item : split(value, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError(where + ": edge '" + item + "' needs a-b");
    out.emplace_back(parse_number<int>(trim(item.substr(0, dash)), where),
                     parse_number<int>(trim(item.substr(dash + 1)), where));
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto where = "config line " + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    auto num = [&] { return parse_number<double>(value, where); };
    auto integer = [&] { return parse_number<int>(value, where); };

    if (key == "charge_bound_ghz") {
      cfg.device.charge_bound = ghz_to_rad_per_ns(num());
    } else if (key == "flux_bound_ghz") {
      cfg.device.flux_bound = ghz_to_rad_per_ns(num());
    } else if (key == "coupling_bound_ghz") {
      cfg.device.coupling_bound = ghz_to_rad_per_ns(num());
    } else if (key == "topology") {
      if (value == "interaction") {
        cfg.device.topology = Topology::Interaction;
      } else if (value == "grid") {
        cfg.device.topology = Topology::Grid;
      } else {
        cfg.device.topology = Topology::Explicit;
        cfg.device.edges = parse_edges(value, where);
      }
    } else if (key == "dt_ns") {
      cfg.grape.dt = num();
    } else if (key == "sample_rate_divisor") {
      cfg.grape.sample_rate_divisor = integer();
    } else if (key == "target_fidelity") {
      cfg.grape.target_fidelity = num();
    } else if (key == "max_iterations") {
      cfg.grape.max_iterations = integer();
    } else if (key == "learning_rate") {
      cfg.grape.learning_rate = num();
    } else if (key == "decay_rate") {
      cfg.grape.decay_rate = num();
    } else if (key == "penalty_weight") {
      cfg.grape.penalty_weight = num();
    } else if (key == "seed") {
      cfg.grape.rng_seed = parse_number<std::uint64_t>(value, where);
    } else if (key == "max_dense_width") {
      cfg.grape.max_dense_width = integer();
    } else if (key == "precision_ns") {
      cfg.mintime.precision = num();
    } else if (key == "doubling_cap") {
      cfg.mintime.doubling_cap = num();
    } else if (key == "learning_rates") {
      cfg.grid.learning_rates = parse_list(value, where);
    } else if (key == "decay_rates") {
      cfg.grid.decay_rates = parse_list(value, where);
    } else if (key == "tune_iterations") {
      cfg.tune_iterations = integer();
    } else if (key == "max_block_width") {
      cfg.max_block_width = integer();
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  try {
    cfg.grape.validate();
    cfg.mintime.validate(cfg.grape.step());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.device.topology == Topology::Explicit) {
    HamiltonianSpec probe;
    int n = 0;
    for (const auto& [a, b] : cfg.device.edges) n = std::max({n, a + 1, b + 1});
    probe.n_qubits = n;
    probe.edges = cfg.device.edges;
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("topology: ") + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace vqc
