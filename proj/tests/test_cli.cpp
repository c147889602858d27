#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../tools/cli.hpp"
#include "vqc/benchmarks.hpp"
#include "vqc/pipeline.hpp"
#include "vqc/qasm_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result vqc_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "vqc");
  std::ostringstream out, err;
  const int status = vqc::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vqc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string config() const { return std::string(VQC_DATA_DIR) + "/gmon.cfg"; }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenQaoaWritesCircuitAndManifest) {
  const auto r = vqc_cli({"gen-qaoa", "--nodes", "4", "--kind", "3reg", "--p", "2", "--seed", "1",
                          "--out", path("circ")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto c = vqc::load_circuit(path("circ/qaoa_3reg_n4_p2_s1.vqc"));
  EXPECT_EQ(c.width(), 4);
  EXPECT_EQ(c.param_count(), 4);
  std::ifstream in(path("circ/manifest.json"));
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_TRUE(manifest.contains("qaoa_3reg_n4_p2_s1.vqc"));
}

TEST_F(CliTest, GateCompileWithoutParams) {
  vqc::save_circuit(vqc::Circuit(2, 0, {vqc::Gate::h(0), vqc::Gate::cx(0, 1)}), path("bell.vqc"));
  const auto r = vqc_cli({"compile", "--circuit", path("bell.vqc"), "--mode", "gate", "--out",
                          path("bell.json"), "--config", config()});
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream in(path("bell.json"));
  const auto s = vqc::schedule_from_json(nlohmann::json::parse(in));
  EXPECT_NEAR(s.total_duration, 5.2, 1e-9);
  ASSERT_TRUE(s.stats.verified_fidelity.has_value());
  EXPECT_GE(*s.stats.verified_fidelity, 0.99);
  EXPECT_EQ(s.circuit, "bell");

  const auto v = vqc_cli({"verify", "--circuit", path("bell.vqc"), "--schedule", path("bell.json"),
                          "--min-fidelity", "0.99"});
  EXPECT_EQ(v.status, 0) << v.err;
  const auto strict = vqc_cli({"verify", "--circuit", path("bell.vqc"), "--schedule",
                               path("bell.json"), "--min-fidelity", "0.9999999"});
  EXPECT_EQ(strict.status, 1);
}

TEST_F(CliTest, FlexibleWithoutTunedFails) {
  vqc::save_circuit(vqc::Circuit(1, 1, {vqc::Gate::rz(0, vqc::ParamAngle::affine(0, 1.0))}),
                    path("one.vqc"));
  const auto r = vqc_cli({"compile", "--circuit", path("one.vqc"), "--mode", "flexible",
                          "--params", "0.5", "--out", path("x.json"), "--config", config()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("missing tuned hyperparameters"), std::string::npos) << r.err;
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j.at("command"), "compile");
}

TEST_F(CliTest, ErrorsAreJson) {
  const auto r = vqc_cli({"compile", "--circuit", path("missing.vqc"), "--mode", "gate", "--out",
                          path("x.json")});
  EXPECT_EQ(r.status, 1);
  EXPECT_TRUE(nlohmann::json::parse(r.err).contains("error"));
  const auto usage = vqc_cli({"compile", "--mode", "nonsense"});
  EXPECT_EQ(usage.status, 1);
  EXPECT_TRUE(nlohmann::json::parse(usage.err).contains("error"));
}

TEST_F(CliTest, ReportHasOneRowPerSchedule) {
  fs::create_directories(path("schedules"));
  for (std::string mode : {"gate", "grape", "strict", "flexible"}) {
    vqc::CompiledSchedule s;
    s.mode = mode;
    s.circuit = "qaoa";
    s.width = 2;
    s.total_duration = mode == "gate" ? 10.0 : 5.0;
    s.stats.grape_calls = mode == "flexible" ? 2 : 0;
    if (mode != "grape") s.stats.verified_fidelity = 0.995;
    std::ofstream(path("schedules/qaoa_" + mode + ".json")) << vqc::schedule_to_json(s).dump();
  }
  const auto r = vqc_cli({"report", "--in", path("schedules"), "--out", path("report.csv")});
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream in(path("report.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "circuit,mode,duration_ns,fidelity,grape_calls,iterations,wall_ms");
  int unverified = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_EQ(lines[i].rfind("qaoa,", 0), 0u);
    if (lines[i].find("unverified") != std::string::npos) ++unverified;
  }
  EXPECT_EQ(unverified, 1);
}
