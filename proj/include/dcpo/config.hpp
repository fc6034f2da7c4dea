#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcpo/eval.hpp"
#include "dcpo/objectives.hpp"
#include "dcpo/schedule.hpp"
#include "dcpo/trainer.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

enum class DatasetModeKind { Original, CaptionBoth, PerturbLess, Hybrid };

struct DatasetSection {
  DatasetModeKind mode = DatasetModeKind::Original;
  double rho = 0.9;
  LevelName level = LevelName::Medium;
  mode::Source source = mode::Source::LessPreferred;
  double caption_noise = kCaptionNoise;
  double test_fraction = 0.2;
  std::filesystem::path input;  // empty: the run directory's dataset.txt
};

enum class PerturbColumn { CaptionW, CaptionL };

struct PerturbSection {
  std::filesystem::path input;  // empty: the run directory's dataset.txt
  LevelName level = LevelName::Medium;
  PerturbColumn column = PerturbColumn::CaptionL;
};

/// How the `train` subcommand obtains a reference for dpo/dcpo.
enum class ReferenceMode { Sft, Fresh, Checkpoint };

struct TrainSection {
  TrainConfig config;
  ReferenceMode reference = ReferenceMode::Sft;
  std::optional<int> sft_steps;
  std::optional<double> sft_learning_rate;
  std::filesystem::path dataset;  // empty: the run directory's dataset.txt
};

struct EvalSection {
  int n_mc = 256;
  std::uint64_t seed = 7;
  std::filesystem::path policy;     // empty: run directory's policy.json
  std::filesystem::path reference;  // empty: run directory's reference.json
  std::filesystem::path test_set;   // empty: run directory's world_test.txt
};

enum class SweepKind { Hypothesis1, Beta, Hypothesis2, Alignment };

struct SweepSection {
  SweepKind kind = SweepKind::Hypothesis1;
  std::vector<double> targets{0.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> betas{0.5, 1.0, 2.0, 5.0, 10.0};
  LevelName level = LevelName::Medium;
  double rho = 0.9;
};

struct CheckSection {
  int lemma_trials = 1000;
  int reference_trials = 100;
  int gradient_instances = 10;
  std::uint64_t seed = 1;
};

struct RunConfig {
  std::string run_name = "default";
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "runs";
  WorldConfig world;
  ScheduleConfig schedule;
  ObjectiveConfig objective;
  PerturbationSettings perturbation;
  DatasetSection dataset;
  TrainSection train;
  PerturbSection perturb;
  EvalSection eval;
  SweepSection sweep;
  CheckSection check;

  std::filesystem::path run_dir() const { return output_dir / run_name; }
  /// Train config with the objective's beta, the schedule and the run seed folded in.
  TrainConfig train_config() const;
  SuiteOptions suite_options() const;
  DatasetOptions dataset_options() const;
  DatasetMode dataset_mode() const;
};

/// Parses JSON text. Relative paths resolve against `base_dir`. Unknown
/// keys, type mismatches and invalid values throw ConfigError naming the key.
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});

RunConfig parse_config(const std::filesystem::path& path);

/// Fully resolved config as JSON; parsing it back yields the same RunConfig.
std::string dump_config(const RunConfig& config);

inline constexpr const char* kToolVersion = "dcpo_lab 1.0.0";

}  // namespace dcpo
