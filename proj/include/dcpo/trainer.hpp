#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcpo/denoiser.hpp"
#include "dcpo/objectives.hpp"
#include "dcpo/schedule.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

enum class Method { SFT, DPO, DCPO };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct ReferenceSource {
  enum class Kind { FreshInit, FromCheckpoint };
  Kind kind = Kind::FreshInit;
  std::string path;
};

struct TrainConfig {
  Method method = Method::DCPO;
  double beta = 0.01;
  double learning_rate = 1e-2;
  int steps = 2000;
  int batch_size = 16;
  std::uint64_t seed = 1;
  ScheduleConfig schedule;
  ReferenceSource reference_source;
  int hidden = 32;
};

void validate(const TrainConfig& config);

struct TrainStepRecord {
  int step = 0;
  double loss = 0.0;
  double margin = 0.0;
  double delta_preferred = 0.0;
  double delta_less_preferred = 0.0;
};

struct TrainReport {
  std::vector<TrainStepRecord> records;
  std::string checkpoint_path;
};

struct TrainResult {
  DenoiserParams params;
  DenoiserParams reference;
  TrainReport report;
};

/// Checks that `dataset` suits `method`: DPO needs equal captions on every
/// record, all records must share one shape.
void check_compatible(Method method, const std::vector<DualCaptionPair>& dataset);

/// Resolves the starting point from the config: SFT starts from a seeded
/// fresh init; DPO/DCPO load the reference per reference_source and start
/// the policy from a copy of it.
TrainResult train(const TrainConfig& config, const std::vector<DualCaptionPair>& dataset);

/// Plain SGD from `initial`. `reference` is required for DPO/DCPO and never
/// modified. Bitwise reproducible given the arguments.
TrainResult train_from(const TrainConfig& config, const std::vector<DualCaptionPair>& dataset,
                       const DenoiserParams& initial, const std::optional<DenoiserParams>& reference);

struct AlignResult {
  DenoiserParams reference;
  DenoiserParams policy;
  TrainReport sft_report;
  TrainReport report;
};

/// SFT on (caption_w, preferred), freeze it as the reference, then run the
/// preference method from a copy of it.
AlignResult pretrain_then_align(const TrainConfig& sft_config, const TrainConfig& align_config,
                                const std::vector<DualCaptionPair>& dataset);

/// Scores a trained (policy, reference) pair, e.g. held-out preference accuracy.
using RunScorer = std::function<double(const DenoiserParams& policy, const DenoiserParams& reference)>;

struct BetaSweepRow {
  double beta = 0.0;
  std::uint64_t seed = 0;
  TrainStepRecord final_step;
  std::optional<double> score;
};

/// Seed used for the run at position `index` of a sweep.
std::uint64_t sweep_run_seed(std::uint64_t base_seed, std::size_t index);

/// One independent run per beta (seed derived from the base seed and the
/// row index); rows follow the input order. Runs execute concurrently.
std::vector<BetaSweepRow> beta_sweep(const TrainConfig& base_config, const std::vector<double>& betas,
                                     const std::vector<DualCaptionPair>& dataset,
                                     const std::optional<DenoiserParams>& reference = std::nullopt,
                                     const RunScorer& scorer = {});

/// Runs fn(0..n-1) on worker threads; results land by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dcpo
