#include "doctest.h"

#include <filesystem>

#include "dcpo/config.hpp"
#include "dcpo/errors.hpp"
#include "dcpo/serialization.hpp"

using namespace dcpo;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("an empty object yields the documented defaults") {
  const RunConfig c = parse_config_text("{}");
  CHECK(c.run_name == "default");
  CHECK(c.seed == 1);
  CHECK(c.output_dir == "runs");
  CHECK(c.world.k == 4);
  CHECK(c.world.d == 8);
  CHECK(c.world.n_pairs == 2000);
  CHECK(c.world.target_delta_mu == 1.3);
  CHECK(c.world.seed == 1);
  CHECK(c.schedule.steps == 50);
  CHECK(c.schedule.beta_start == 1e-4);
  CHECK(c.schedule.beta_end == 0.02);
  CHECK(c.objective.beta == 0.01);
  CHECK(c.perturbation.pool_size == 64);
  CHECK(c.perturbation.level(LevelName::Weak).band.lo == 80.0);
  CHECK(c.perturbation.level(LevelName::Strong).band.hi == 55.0);
  CHECK(c.train.config.method == Method::DCPO);
  CHECK(c.train.config.learning_rate == 1e-2);
  CHECK(c.train.config.steps == 2000);
  CHECK(c.train.config.batch_size == 16);
  CHECK(c.train.reference == ReferenceMode::Sft);
  CHECK(c.eval.n_mc == 256);
  CHECK(c.sweep.betas == std::vector<double>{0.5, 1.0, 2.0, 5.0, 10.0});
  CHECK(c.sweep.targets == std::vector<double>{0.0, 2.0, 4.0, 8.0, 16.0});
  CHECK(c.sweep.seeds.size() == 5);
  CHECK(c.check.lemma_trials == 1000);
}

TEST_CASE("values are read and folded into the train config") {
  const RunConfig c = parse_config_text(R"({
    "run_name": "r1", "seed": 9,
    "world": {"n_pairs": 300, "target_delta_mu": 2.0},
    "objective": {"beta": 0.25},
    "train": {"method": "dpo", "steps": 10, "learning_rate": 0.5, "sft_steps": 3},
    "dataset": {"mode": "hybrid", "rho": 0.5, "level": "strong", "source": "preferred"},
    "sweep": {"kind": "beta", "betas": [1, 2]}
  })");
  CHECK(c.run_name == "r1");
  CHECK(c.world.seed == 9);
  CHECK(c.world.n_pairs == 300);
  const TrainConfig t = c.train_config();
  CHECK(t.beta == 0.25);
  CHECK(t.seed == 9);
  CHECK(t.method == Method::DPO);
  CHECK(t.steps == 10);
  CHECK(c.suite_options().sft_steps == 3);
  CHECK(c.sweep.kind == SweepKind::Beta);
  CHECK(c.sweep.betas == std::vector<double>{1.0, 2.0});
  const DatasetMode m = c.dataset_mode();
  const auto* hybrid = std::get_if<mode::Hybrid>(&m);
  REQUIRE(hybrid != nullptr);
  CHECK(hybrid->rho == 0.5);
  CHECK(hybrid->level.name == LevelName::Strong);
  CHECK(hybrid->source == mode::Source::Preferred);
  CHECK(parse_config_text(R"({"seed": 9, "world": {"seed": 4}})").world.seed == 4);
}

TEST_CASE("a negative beta names the key") {
  const std::string e = error_of(R"({"objective": {"beta": -1}})");
  CHECK(contains(e, "beta"));
  CHECK(contains(e, "objective.beta"));
}

TEST_CASE("unknown keys are hard errors") {
  CHECK(contains(error_of(R"({"objective": {"betta": 1}})"), "betta"));
  CHECK(contains(error_of(R"({"objective": {"betta": 1}})"), "unknown key"));
  CHECK(contains(error_of(R"({"wrld": {}})"), "wrld"));
}

TEST_CASE("type mismatches and bad enum values name the key") {
  CHECK(contains(error_of(R"({"train": {"steps": "many"}})"), "train.steps"));
  CHECK(contains(error_of(R"({"train": {"steps": 1.5}})"), "train.steps"));
  CHECK(contains(error_of(R"({"train": {"method": "ppo"}})"), "train.method"));
  CHECK(contains(error_of(R"({"world": []})"), "world"));
  CHECK(contains(error_of(R"([1, 2])"), "object"));
  CHECK(contains(error_of(R"({"dataset": {"rho": 2}})"), "dataset.rho"));
  CHECK(contains(error_of(R"({"train": {"batch_size": 0}})"), "train.batch_size"));
  CHECK(contains(error_of(R"({"train": {"reference": "checkpoint"}})"), "train.reference_path"));
}

TEST_CASE("parse errors report line and column") {
  const std::string e = error_of("{\n  \"seed\": 1,\n  \"world\": {,}\n}");
  CHECK(contains(e, "line 3"));
  CHECK(contains(e, "column"));
}

TEST_CASE("files: missing, relative paths and the dump round trip") {
  CHECK_THROWS_AS(parse_config("/nonexistent/dcpo.json"), ConfigError);
  const fs::path dir = fs::temp_directory_path() / "dcpo_config_test";
  fs::remove_all(dir);
  write_text_file(dir / "cfg.json", R"({"output_dir": "out", "train": {"dataset": "data/d.txt"}})");
  const RunConfig c = parse_config(dir / "cfg.json");
  CHECK(c.output_dir == dir / "out");
  CHECK(c.train.dataset == dir / "data" / "d.txt");
  CHECK(c.run_dir() == dir / "out" / "default");

  const std::string dumped = dump_config(c);
  const RunConfig again = parse_config_text(dumped);
  CHECK(dump_config(again) == dumped);
  fs::remove_all(dir);
}
