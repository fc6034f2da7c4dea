#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "dcpo/errors.hpp"
#include "dcpo/pipeline.hpp"
#include "dcpo/serialization.hpp"

using namespace dcpo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

Run run_lab(const std::string& args) {
  const std::string command = std::string(DCPO_LAB_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) r.output.append(buffer, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

// A fresh directory holding `config.json` with the given body.
fs::path setup(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / ("dcpo_pipeline_" + name);
  fs::remove_all(dir);
  write_text_file(dir / "config.json", body);
  return dir;
}

std::string config_arg(const fs::path& dir) { return "--config " + (dir / "config.json").string(); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = read_text_file(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("usage and configuration errors exit 1") {
  CHECK(run_lab("").status == 1);
  CHECK(run_lab("bogus --config x.json").status == 1);
  CHECK(run_lab("check").status == 1);
  const Run missing = run_lab("check --config /nonexistent/c.json");
  CHECK(missing.status == 1);
  CHECK(missing.output.find("error:") != std::string::npos);

  const fs::path dir = setup("bad_beta", R"({"output_dir": "out", "objective": {"beta": -1}})");
  const Run bad = run_lab("check " + config_arg(dir));
  CHECK(bad.status == 1);
  CHECK(bad.output.find("beta") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("infeasible overlap targets exit 3") {
  const fs::path dir = setup("infeasible", R"({"output_dir": "out",
    "world": {"n_pairs": 200, "caption_fidelity_rho": 0.9, "target_delta_mu": 4.3}})");
  const Run r = run_lab("gen-data " + config_arg(dir));
  CHECK(r.status == 3);
  CHECK(r.output.find("feasible range") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("check on defaults passes and reports its gates") {
  const fs::path dir = setup("check", R"({"output_dir": "out"})");
  const Run r = run_lab("check " + config_arg(dir));
  CHECK(r.status == 0);
  CHECK(r.output.find("max equal-caption deviation") != std::string::npos);
  CHECK(r.output.find("max gradient relative error") != std::string::npos);
  const fs::path run = dir / "out" / "default";
  CHECK(fs::exists(run / "check.csv"));
  CHECK(read_text_file(run / "VERSION") == std::string(kToolVersion) + "\n");
  CHECK(fs::exists(run / "config.json"));
  CHECK(read_text_file(run / "check.csv").find("fail") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("zero-step training writes the initial checkpoint") {
  const fs::path dir = setup("train0", R"({"output_dir": "out", "seed": 3, "world": {"n_pairs": 100},
    "train": {"method": "sft", "steps": 0}})");
  REQUIRE(run_lab("gen-data " + config_arg(dir)).status == 0);
  REQUIRE(run_lab("train " + config_arg(dir)).status == 0);
  const Checkpoint c = read_checkpoint_file(dir / "out" / "default" / "policy.json");
  CHECK(c.params == init_params(8, 4, 32, derive_seed(3, "policy-init")));
  CHECK(c.step == 0);
  fs::remove_all(dir);
}

TEST_CASE("gen-data then analyze-overlap reproduces the target gap") {
  const fs::path dir = setup("overlap", R"({"output_dir": "out"})");
  REQUIRE(run_lab("gen-data " + config_arg(dir)).status == 0);
  REQUIRE(run_lab("analyze-overlap " + config_arg(dir)).status == 0);
  const fs::path run = dir / "out" / "default";
  const OverlapReport r = read_overlap_csv(read_text_file(run / "overlap.csv"));
  CHECK(std::abs(r.delta_mu - 1.3) <= 0.5);
  const CsvTable plot = parse_csv(read_text_file(run / "plot_overlap.csv"));
  CHECK(plot.header == std::vector<std::string>{"series", "x", "y", "spread"});
  CHECK(plot.rows.size() == 40);
  CHECK(plot.rows.front()[0] == "preferred");
  CHECK(plot.rows.back()[0] == "less_preferred");
  fs::remove_all(dir);
}

TEST_CASE("perturb, train and eval chain through the run directory") {
  const fs::path dir = setup("chain", R"({"output_dir": "out", "world": {"n_pairs": 200},
    "dataset": {"mode": "caption_both"}, "perturb": {"level": "weak"},
    "train": {"steps": 20, "sft_steps": 20}, "eval": {"n_mc": 4}})");
  REQUIRE(run_lab("gen-data " + config_arg(dir)).status == 0);
  REQUIRE(run_lab("perturb " + config_arg(dir)).status == 0);
  const fs::path run = dir / "out" / "default";
  const auto original = read_dataset_file(run / "dataset.txt");
  const auto perturbed = read_dataset_file(run / "perturbed.txt");
  REQUIRE(perturbed.size() == original.size());
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    REQUIRE(perturbed[i].caption_w == original[i].caption_w);
    REQUIRE(PerturbationLevel::weak().band.contains(similarity(perturbed[i].caption_l, original[i].caption_l)));
  }
  REQUIRE(run_lab("train " + config_arg(dir)).status == 0);
  CHECK(fs::exists(run / "reference.json"));
  CHECK(fs::exists(run / "sft_report.csv"));
  CHECK(parse_csv(read_text_file(run / "train_report.csv")).rows.size() == 20);
  REQUIRE(run_lab("eval " + config_arg(dir)).status == 0);
  const CsvTable eval = parse_csv(read_text_file(run / "eval.csv"));
  REQUIRE(eval.rows.size() == 1);
  CHECK(eval.rows[0][4] == "40");
  CHECK(parse_csv(read_text_file(run / "margins.csv")).rows.size() == 40);
  fs::remove_all(dir);
}

TEST_CASE("plot data needs reports") {
  const fs::path dir = setup("plot", R"({"output_dir": "out"})");
  CHECK(run_lab("plot-data " + config_arg(dir)).status == 1);
  CHECK_THROWS_AS(overlap_plot_data(OverlapReport{}), ConfigError);
  CHECK_THROWS_AS(sweep_plot_data(SweepCurve{}), ConfigError);
  const CsvTable t = parse_csv(sweep_plot_data(SweepCurve{{{0.0, 0.5, 0.1}, {2.0, 0.6, 0.2}}}));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][3] == "0.20000000000000001");
  fs::remove_all(dir);
}

TEST_CASE("rerunning from the echoed config reproduces every artifact") {
  const fs::path dir = setup("rerun", R"({"output_dir": "out", "world": {"n_pairs": 150}})");
  REQUIRE(run_lab("gen-data " + config_arg(dir)).status == 0);
  REQUIRE(run_lab("analyze-overlap " + config_arg(dir)).status == 0);
  const fs::path run = dir / "out" / "default";
  const auto before = snapshot(run);
  REQUIRE(run_lab("gen-data --config " + (run / "config.json").string()).status == 0);
  REQUIRE(run_lab("analyze-overlap --config " + (run / "config.json").string()).status == 0);
  CHECK(snapshot(run) == before);
  fs::remove_all(dir);
}

TEST_CASE("exit codes by error category") {
  CHECK(exit_code_for(ConfigError("m", "x")) == 1);
  CHECK(exit_code_for(NumericError("m", "x")) == 2);
  CHECK(exit_code_for(InfeasibleError("m", "x")) == 3);
  CHECK(exit_code_for(std::invalid_argument("x")) == 1);
}
