#include "dcpo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "dcpo/errors.hpp"
#include "dcpo/serialization.hpp"

namespace dcpo {

std::string to_string(Method method) {
  switch (method) {
    case Method::SFT:
      return "sft";
    case Method::DPO:
      return "dpo";
    case Method::DCPO:
      return "dcpo";
  }
  return "dcpo";
}

Method method_from_string(const std::string& name) {
  if (name == "sft") return Method::SFT;
  if (name == "dpo") return Method::DPO;
  if (name == "dcpo") return Method::DCPO;
  throw ConfigError("trainer", "unknown method '" + name + "' (expected sft, dpo or dcpo)");
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("trainer", "learning_rate must be >= 0");
  }
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("trainer", "beta must be > 0");
  if (c.steps < 0) throw ConfigError("trainer", "steps must be >= 0");
  if (c.batch_size < 1) throw ConfigError("trainer", "batch_size must be >= 1");
  if (c.hidden < 1) throw ConfigError("trainer", "hidden must be >= 1");
  if (c.reference_source.kind == ReferenceSource::Kind::FromCheckpoint && c.reference_source.path.empty()) {
    throw ConfigError("trainer", "reference checkpoint path is empty");
  }
}

void check_compatible(Method method, const std::vector<DualCaptionPair>& dataset) {
  if (dataset.empty()) throw ConfigError("trainer", "dataset is empty");
  const auto& first = dataset.front();
  for (const auto& r : dataset) {
    if (r.preferred.latent.size() != first.preferred.latent.size() ||
        r.less_preferred.latent.size() != first.preferred.latent.size() ||
        r.caption_w.size() != first.caption_w.size() || r.caption_l.size() != first.caption_w.size()) {
      throw ConfigError("trainer", "dataset records have inconsistent shapes");
    }
    if (method == Method::DPO && !(r.caption_w == r.caption_l)) {
      throw ConfigError("trainer", "dpo requires equal captions; record " + std::to_string(r.id) + " has distinct ones");
    }
  }
}

namespace {

void apply_update(DenoiserParams& p, const GradientVector& g, double lr) {
  Eigen::Index at = 0;
  auto step = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) -= lr * g.segment(at, m.size());
    at += m.size();
  };
  step(p.w1);
  step(p.b1);
  step(p.w2);
  step(p.b2);
  step(p.w3);
  step(p.b3);
}

}  // namespace

TrainResult train_from(const TrainConfig& config, const std::vector<DualCaptionPair>& dataset,
                       const DenoiserParams& initial, const std::optional<DenoiserParams>& reference) {
  validate(config);
  check_compatible(config.method, dataset);
  const bool preference = config.method != Method::SFT;
  if (preference && !reference) throw ConfigError("trainer", "preference training needs a reference model");
  const int d = static_cast<int>(dataset.front().preferred.latent.size());
  const int k = static_cast<int>(dataset.front().caption_w.size());
  if (initial.d != d || initial.k != k) throw ConfigError("trainer", "initial parameters do not match dataset shape");
  if (reference && (reference->d != d || reference->k != k)) {
    throw ConfigError("trainer", "reference parameters do not match dataset shape");
  }

  const NoiseSchedule schedule = build_linear_schedule(config.schedule);
  const ObjectiveConfig objective{config.beta};

  TrainResult result{initial, reference ? *reference : initial, {}};
  DenoiserParams& params = result.params;

  Rng batch_rng = make_rng(config.seed, "train-batches");
  Rng noise_rng = make_rng(config.seed, "train-noise");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  const auto batch = static_cast<std::size_t>(std::min<std::size_t>(config.batch_size, dataset.size()));
  std::vector<const DualCaptionPair*> records(batch);
  std::vector<NoiseDraw> draws(batch);
  result.report.records.reserve(static_cast<std::size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    for (std::size_t j = 0; j < batch; ++j) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), batch_rng);
        cursor = 0;
      }
      records[j] = &dataset[order[cursor++]];
      draws[j] = draw_noise(noise_rng, schedule, d);
    }

    BatchStats stats;
    ValueAndGradient vg;
    try {
      vg = evaluate_with_gradient(params, [&](ad::Tape& tape, const ParamVars& vars) {
        return preference ? dcpo_batch_objective(tape, vars, *reference, records, draws, schedule, objective, &stats)
                          : sft_batch_objective(tape, vars, records, draws, schedule, &stats);
      });
    } catch (const NumericError& e) {
      throw NumericError("trainer", "step " + std::to_string(step) + ": " + e.what());
    }
    result.report.records.push_back(
        {step, stats.loss, stats.margin, stats.delta_preferred, stats.delta_less_preferred});
    apply_update(params, vg.gradient, config.learning_rate);
    if (!flatten(params).allFinite()) {
      throw NumericError("trainer", "step " + std::to_string(step) + ": parameters became non-finite");
    }
  }
  return result;
}

TrainResult train(const TrainConfig& config, const std::vector<DualCaptionPair>& dataset) {
  validate(config);
  check_compatible(config.method, dataset);
  const int d = static_cast<int>(dataset.front().preferred.latent.size());
  const int k = static_cast<int>(dataset.front().caption_w.size());
  if (config.method == Method::SFT) {
    return train_from(config, dataset, init_params(d, k, config.hidden, derive_seed(config.seed, "policy-init")),
                      std::nullopt);
  }
  DenoiserParams reference =
      config.reference_source.kind == ReferenceSource::Kind::FromCheckpoint
          ? read_checkpoint_file(config.reference_source.path).params
          : init_params(d, k, config.hidden, derive_seed(config.seed, "reference-init"));
  return train_from(config, dataset, reference, reference);
}

AlignResult pretrain_then_align(const TrainConfig& sft_config, const TrainConfig& align_config,
                                const std::vector<DualCaptionPair>& dataset) {
  if (sft_config.method != Method::SFT) throw ConfigError("trainer", "pretrain stage must use method sft");
  if (align_config.method == Method::SFT) throw ConfigError("trainer", "align stage must use dpo or dcpo");
  TrainResult sft = train(sft_config, dataset);
  TrainResult aligned = train_from(align_config, dataset, sft.params, sft.params);
  return {std::move(sft.params), std::move(aligned.params), std::move(sft.report), std::move(aligned.report)};
}

std::uint64_t sweep_run_seed(std::uint64_t base_seed, std::size_t index) {
  return derive_seed(base_seed, "sweep-run", index);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<BetaSweepRow> beta_sweep(const TrainConfig& base_config, const std::vector<double>& betas,
                                     const std::vector<DualCaptionPair>& dataset,
                                     const std::optional<DenoiserParams>& reference, const RunScorer& scorer) {
  if (betas.empty()) throw ConfigError("trainer", "beta sweep needs at least one beta");
  std::vector<BetaSweepRow> rows(betas.size());
  parallel_for(betas.size(), [&](std::size_t i) {
    TrainConfig config = base_config;
    config.beta = betas[i];
    config.seed = sweep_run_seed(base_config.seed, i);
    TrainResult run = reference ? train_from(config, dataset, *reference, reference) : train(config, dataset);
    BetaSweepRow& row = rows[i];
    row.beta = betas[i];
    row.seed = config.seed;
    if (!run.report.records.empty()) row.final_step = run.report.records.back();
    if (scorer) row.score = scorer(run.params, run.reference);
  });
  return rows;
}

}  // namespace dcpo
