#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vqc/benchmarks.hpp"
#include "vqc/config.hpp"
#include "vqc/partition.hpp"
#include "vqc/pipeline.hpp"
#include "vqc/qasm_io.hpp"

namespace vqc::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Parametrization parse_params(const std::string& text, int expected) {
  Parametrization p;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad parameter value '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw UsageError("bad parameter value '" + item + "'");
    }
    p.values.push_back(v);
  }
  if (static_cast<int>(p.size()) != expected) {
    throw UsageError("circuit has " + std::to_string(expected) + " parameters, --params gave " +
                     std::to_string(p.size()));
  }
  return p;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << "\n";
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  RunConfig load() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    if (seed) cfg.grape.rng_seed = *seed;
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c, bool with_jobs) {
  cmd->add_option("--config", c.config, "Flat key = value configuration file");
  cmd->add_option("--seed", c.seed, "Overrides the configured RNG seed");
  if (with_jobs) cmd->add_option("--jobs", c.jobs, "Concurrent block or grid tasks")->check(CLI::PositiveNumber);
}

PartitionPlan plan_for(const Circuit& circuit, const std::string& mode, int max_width) {
  if (mode == "strict") return partition_strict(circuit, max_width);
  if (mode == "flexible") return partition_flexible(circuit, max_width);
  throw UsageError("unknown partition mode '" + mode + "'");
}

GatePulseLibrary library_or_default(const std::string& path, const RunConfig& cfg, std::ostream& err) {
  if (!path.empty()) return load_library(path);
  err << "note: no --library given; building fixed-duration reference pulses\n";
  return build_gate_library_fixed(cfg.device, cfg.grape);
}

std::string json_error(const std::string& command, const std::string& message) {
  return nlohmann::json{{"error", message}, {"command", command}}.dump();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational circuit pulse compiler", "vqc"};
  app.require_subcommand(1);

  // gen-qaoa
  auto* gen = app.add_subcommand("gen-qaoa", "Write a QAOA MAXCUT circuit for a random graph");
  int nodes = 0, rounds = 1;
  std::string kind = "3reg", gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--nodes", nodes, "Graph size")->required();
  gen->add_option("--kind", kind, "3reg or er")->check(CLI::IsMember({"3reg", "er"}));
  gen->add_option("--p", rounds, "QAOA rounds")->required();
  gen->add_option("--seed", gen_seed, "Graph seed")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // build-library
  auto* lib_cmd = app.add_subcommand("build-library", "Minimal-time pulses for the basis gates");
  Common lib_common;
  std::string lib_out;
  bool lib_fixed = false;
  add_common(lib_cmd, lib_common, false);
  lib_cmd->add_option("--out", lib_out, "Output directory")->required();
  lib_cmd->add_flag("--fixed-durations", lib_fixed, "Use the reference durations without a search");

  // precompute
  auto* pre = app.add_subcommand("precompute", "Precompile Fixed blocks into the pulse cache");
  Common pre_common;
  std::string pre_circuit, pre_mode = "strict", pre_cache, pre_library;
  add_common(pre, pre_common, true);
  pre->add_option("--circuit", pre_circuit, ".vqc circuit")->required();
  pre->add_option("--mode", pre_mode, "strict or flexible")->check(CLI::IsMember({"strict", "flexible"}));
  pre->add_option("--cache", pre_cache, "Pulse cache directory")->required();
  pre->add_option("--library", pre_library, "Gate library directory");

  // tune
  auto* tune = app.add_subcommand("tune", "Tune GRAPE hyperparameters per single-parameter block");
  Common tune_common;
  std::string tune_circuit, tune_grid, tune_out, tune_library;
  int tune_samples = 3;
  add_common(tune, tune_common, true);
  tune->add_option("--circuit", tune_circuit, ".vqc circuit")->required();
  tune->add_option("--grid", tune_grid, "Config file with learning_rates and decay_rates");
  tune->add_option("--samples", tune_samples, "Angle samples per block")->check(CLI::PositiveNumber);
  tune->add_option("--out", tune_out, "Tuned hyperparameter JSON")->required();
  tune->add_option("--library", tune_library, "Gate library directory");

  // compile
  auto* comp = app.add_subcommand("compile", "Compile a circuit at one parametrization");
  Common comp_common;
  std::string comp_circuit, comp_mode, comp_params, comp_cache, comp_out, comp_library, comp_tuned;
  add_common(comp, comp_common, false);
  comp->add_option("--circuit", comp_circuit, ".vqc circuit")->required();
  comp->add_option("--mode", comp_mode, "gate, grape, strict or flexible")
      ->required()
      ->check(CLI::IsMember({"gate", "grape", "strict", "flexible"}));
  comp->add_option("--params", comp_params, "Comma-separated parameter values");
  comp->add_option("--cache", comp_cache, "Pulse cache directory");
  comp->add_option("--out", comp_out, "Schedule JSON")->required();
  comp->add_option("--library", comp_library, "Gate library directory");
  comp->add_option("--tuned", comp_tuned, "Tuned hyperparameter JSON");

  // verify
  auto* ver = app.add_subcommand("verify", "Propagate a schedule and compare with the circuit");
  std::string ver_circuit, ver_schedule, ver_params;
  double ver_min = 0.0;
  ver->add_option("--circuit", ver_circuit, ".vqc circuit")->required();
  ver->add_option("--schedule", ver_schedule, "Schedule JSON")->required();
  ver->add_option("--params", ver_params, "Comma-separated parameter values");
  ver->add_option("--min-fidelity", ver_min, "Exit 1 below this fidelity");

  // report
  auto* rep = app.add_subcommand("report", "Collect schedules into a CSV table");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "Directory of schedule JSON files")->required();
  rep->add_option("--out", rep_out, "CSV output")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json_error("usage", e.what()) << "\n";
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*gen) {
      const auto graph_kind = parse_graph_kind(kind);
      QaoaSpec spec{random_graph(nodes, graph_kind, gen_seed), rounds};
      const auto circuit = qaoa_circuit(spec);
      const std::string stem = "qaoa_" + kind + "_n" + std::to_string(nodes) + "_p" +
                               std::to_string(rounds) + "_s" + std::to_string(gen_seed);
      fs::create_directories(gen_out);
      save_circuit(circuit, (fs::path(gen_out) / (stem + ".vqc")).string());
      const auto manifest_path = fs::path(gen_out) / "manifest.json";
      nlohmann::json manifest = fs::exists(manifest_path) ? read_json(manifest_path) : nlohmann::json::object();
      manifest[stem + ".vqc"] = qaoa_manifest(spec, graph_kind, gen_seed);
      write_json(manifest_path, manifest);
      out << stem << ".vqc\n";
      return 0;
    }

    if (*lib_cmd) {
      const auto cfg = lib_common.load();
      const auto lib = lib_fixed ? build_gate_library_fixed(cfg.device, cfg.grape)
                                 : build_gate_library(cfg.device, cfg.grape, cfg.mintime);
      save_library(lib, lib_out);
      for (const auto& [k, e] : lib.entries) {
        out << to_string(k) << " " << e.duration() << " ns fidelity " << e.fidelity << "\n";
      }
      return 0;
    }

    if (*pre) {
      const auto cfg = pre_common.load();
      const auto circuit = load_circuit(pre_circuit);
      const auto plan = plan_for(circuit, pre_mode, cfg.max_block_width);
      const auto lib = library_or_default(pre_library, cfg, err);
      PulseCache cache(pre_cache);
      const auto st = precompute_fixed_blocks(plan, cfg.device, cfg.grape, cfg.mintime, lib, cache,
                                              pre_common.jobs);
      out << nlohmann::json{{"fixed_blocks", st.fixed_blocks},
                            {"compiled", st.compiled},
                            {"cache_hits", st.cache_hits},
                            {"fallbacks", st.fallbacks},
                            {"grape_runs", st.grape_runs},
                            {"iterations", st.iterations}}
                 .dump()
          << "\n";
      return 0;
    }

    if (*tune) {
      RunConfig cfg = tune_common.load();
      if (!tune_grid.empty()) cfg = load_config(tune_grid, cfg);
      const auto circuit = load_circuit(tune_circuit);
      const auto plan = partition_flexible(circuit, cfg.max_block_width);
      const auto lib = library_or_default(tune_library, cfg, err);
      GrapeConfig gc = cfg.grape;
      gc.max_iterations = cfg.tune_iterations;
      const auto samples = evenly_spaced_angles(tune_samples);
      const auto tuned = tune_plan(plan, samples, cfg.grid, cfg.device, gc, lib, tune_common.jobs);
      write_json(tune_out, tuned_to_json(tuned));
      out << tuned.size() << " blocks tuned\n";
      return 0;
    }

    if (*comp) {
      const auto cfg = comp_common.load();
      const auto circuit = load_circuit(comp_circuit);
      const auto params = parse_params(comp_params, circuit.param_count());
      if (comp_mode == "flexible" && comp_tuned.empty()) {
        throw UsageError("missing tuned hyperparameters (--tuned)");
      }
      if ((comp_mode == "strict" || comp_mode == "flexible") && comp_cache.empty()) {
        throw UsageError("missing pulse cache (--cache)");
      }
      CompiledSchedule schedule;
      if (comp_mode == "gate") {
        schedule = compile_gate_based(circuit, params, library_or_default(comp_library, cfg, err));
      } else if (comp_mode == "grape") {
        schedule = compile_full_grape(circuit, params, library_or_default(comp_library, cfg, err),
                                      cfg.grape, cfg.mintime, cfg.max_block_width);
      } else if (comp_mode == "strict") {
        const PulseCache cache(comp_cache);
        schedule = compile_strict(partition_strict(circuit, cfg.max_block_width), cache, params,
                                  cfg.device, cfg.grape.step());
      } else {
        const auto tuned = tuned_from_json(read_json(comp_tuned));
        const PulseCache cache(comp_cache);
        schedule = compile_flexible(partition_flexible(circuit, cfg.max_block_width), tuned, params,
                                    library_or_default(comp_library, cfg, err), cfg.grape,
                                    cfg.mintime, cache);
      }
      schedule.circuit = fs::path(comp_circuit).stem().string();
      if (circuit.width() <= cfg.grape.max_dense_width) {
        schedule.stats.verified_fidelity =
            verify_schedule(schedule, circuit, params, cfg.grape.max_dense_width);
      }
      write_json(comp_out, schedule_to_json(schedule));
      out << schedule.mode << " " << schedule.total_duration << " ns";
      if (schedule.stats.verified_fidelity) out << " fidelity " << *schedule.stats.verified_fidelity;
      out << "\n";
      return 0;
    }

    if (*ver) {
      const auto circuit = load_circuit(ver_circuit);
      const auto params = parse_params(ver_params, circuit.param_count());
      const auto schedule = schedule_from_json(read_json(ver_schedule));
      const double f = verify_schedule(schedule, circuit, params);
      out << std::setprecision(12) << "fidelity " << f << "\n";
      if (f < ver_min) throw std::runtime_error("fidelity below --min-fidelity");
      return 0;
    }

    if (*rep) {
      struct Row {
        std::string circuit, mode;
        double duration;
        std::optional<double> fidelity;
        int grape_calls;
        long iterations;
        double wall_ms;
      };
      std::vector<Row> rows;
      for (const auto& file : fs::directory_iterator(rep_in)) {
        if (file.path().extension() != ".json") continue;
        const auto j = read_json(file.path());
        if (!j.is_object() || !j.contains("mode") || !j.contains("segments")) continue;
        const auto s = schedule_from_json(j);
        rows.push_back({s.circuit.empty() ? file.path().stem().string() : s.circuit, s.mode,
                        s.total_duration, s.stats.verified_fidelity, s.stats.grape_calls,
                        s.stats.iterations, s.stats.wall_ms});
      }
      std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.circuit, a.mode) < std::tie(b.circuit, b.mode);
      });
      std::ofstream csv(rep_out);
      if (!csv) throw std::runtime_error("cannot write " + rep_out);
      csv << "circuit,mode,duration_ns,fidelity,grape_calls,iterations,wall_ms\n";
      csv << std::setprecision(10);
      for (const auto& r : rows) {
        csv << r.circuit << "," << r.mode << "," << r.duration << ",";
        if (r.fidelity) {
          csv << *r.fidelity;
        } else {
          csv << "unverified";
        }
        csv << "," << r.grape_calls << "," << r.iterations << "," << r.wall_ms << "\n";
      }
      out << rows.size() << " rows\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << json_error(command, e.what()) << "\n";
    return 1;
  }
  return 1;
}

}  // namespace vqc::cli
