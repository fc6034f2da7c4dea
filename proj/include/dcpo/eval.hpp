#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcpo/denoiser.hpp"
#include "dcpo/schedule.hpp"
#include "dcpo/trainer.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

/// Monte-Carlo averages for one record over its seeded (t, eps) draws.
struct PairScore {
  std::size_t id = 0;
  double delta_preferred = 0.0;
  double delta_less_preferred = 0.0;
  double margin = 0.0;
  double policy_error_w = 0.0;
  double reference_error_w = 0.0;
  double policy_error_l = 0.0;
  double reference_error_l = 0.0;
};

/// Draws for a record come from a stream keyed by (seed, record id), so a
/// score never depends on where the record sits in the dataset.
std::vector<PairScore> score_pairs(const DenoiserParams& policy, const DenoiserParams& reference,
                                   const std::vector<DualCaptionPair>& records, const NoiseSchedule& schedule,
                                   int n_mc, std::uint64_t seed);

struct EvalReport {
  double preference_accuracy = 0.0;
  double mean_margin = 0.0;
  double mean_delta_preferred = 0.0;
  double mean_delta_less_preferred = 0.0;
  std::size_t n_pairs = 0;
  int n_mc_draws = 0;
};

/// A pair counts as correct when its averaged margin is positive, 0.5 when
/// it is exactly zero.
EvalReport summarize(const std::vector<PairScore>& scores, int n_mc);

EvalReport preference_accuracy(const DenoiserParams& policy, const DenoiserParams& reference,
                               const std::vector<DualCaptionPair>& test_set, const NoiseSchedule& schedule,
                               int n_mc = 256, std::uint64_t seed = 7);

/// Throws ConfigError when the two sets share a record id.
void assert_disjoint(const std::vector<DualCaptionPair>& train, const std::vector<DualCaptionPair>& test);

std::string eval_csv(const EvalReport& report);

struct MarginReport {
  std::vector<PairScore> rows;
  PairScore mean;  // id unused
  /// Standard errors of the per-record means.
  PairScore standard_error;
};

MarginReport margin_report(const DenoiserParams& policy, const DenoiserParams& reference,
                           const std::vector<DualCaptionPair>& dataset, const NoiseSchedule& schedule,
                           int n_mc = 256, std::uint64_t seed = 7);

std::string margin_csv(const MarginReport& report);

// ---- self-test gates ----

struct GateResult {
  bool passed = false;
  double max_deviation = 0.0;
  int trials = 0;
};

/// Randomized equal-caption trials comparing dcpo_loss with dpo_loss. With
/// `inject_mismatch` one caption per trial is rotated away from the prompt,
/// so a working detector must report failure.
GateResult lemma1_check(int trials, std::uint64_t seed, bool inject_mismatch = false, double tolerance = 1e-12);

/// Both preference losses must equal ln 2 when the policy is the reference.
GateResult policy_reference_check(int trials, std::uint64_t seed, double tolerance = 1e-12);

enum class GradientTarget { SFT, DPO, DCPO };

std::string to_string(GradientTarget target);

/// Tape gradients of the batch objectives against central differences of an
/// independent scalar implementation, on seeded tiny instances.
/// max_deviation is the max relative error.
GateResult gradient_check(GradientTarget target, int instances, std::uint64_t seed, double tolerance = 1e-4,
                          double step = 1e-5);

/// alpha^2 + sigma^2 = 1 on every step, alpha_bar decreasing, snr decreasing.
GateResult schedule_check(const NoiseSchedule& schedule, double tolerance = 1e-12);

// ---- fixed-seed suites ----

struct SuiteOptions {
  double test_fraction = 0.2;
  int n_mc = 256;
  std::uint64_t eval_seed = 7;
  DatasetOptions dataset;
  /// Overrides for the SFT stage; unset fields inherit the align config.
  std::optional<int> sft_steps;
  std::optional<double> sft_learning_rate;
};

/// SFT stage config derived from the align config and the overrides.
TrainConfig sft_config_for(const TrainConfig& align, const SuiteOptions& options);

/// World for one suite seed: the base world with its seed replaced.
struct SeedWorld {
  std::vector<PreferencePair> train;
  std::vector<DualCaptionPair> test;  // original prompt records
};
SeedWorld seed_world(const WorldConfig& base_world, std::uint64_t seed, const SuiteOptions& options);

struct SweepPoint {
  double delta_mu = 0.0;
  double preference_accuracy = 0.0;
  double spread = 0.0;  // sample standard deviation over seeds
};

struct SweepCurve {
  std::vector<SweepPoint> points;  // sorted by delta_mu
};

struct SweepRun {
  std::uint64_t seed = 0;
  double target = 0.0;
  double measured_delta_mu = 0.0;
  double angle_degrees = 0.0;
  double preference_accuracy = 0.0;
};

struct Hypothesis1Result {
  SweepCurve curve;
  std::vector<SweepRun> runs;  // seed-major, targets in input order

  /// Accuracies of one seed's runs ordered by target.
  std::vector<SweepRun> seed_curve(std::uint64_t seed) const;
};

/// Dual-caption records with z^w = prompt and z^l the prompt rotated by
/// `degrees` toward a per-record direction fixed by (seed, id).
std::vector<DualCaptionPair> rotated_caption_dataset(const std::vector<PreferencePair>& pairs, double degrees,
                                                     std::uint64_t seed);

struct RotationFit {
  double degrees = 0.0;
  double measured_delta_mu = 0.0;
};

/// Smallest rotation whose measured delta_mu reaches `target`; targets at or
/// below the unrotated delta_mu give 0 degrees. Throws InfeasibleError above
/// the 180 degree value.
RotationFit fit_rotation(const std::vector<PreferencePair>& pairs, double target, std::uint64_t seed);

Hypothesis1Result hypothesis1_sweep(const std::vector<double>& delta_mu_targets, const WorldConfig& base_world,
                                    const TrainConfig& train_config, const std::vector<std::uint64_t>& seeds,
                                    const SuiteOptions& options = {});

std::string sweep_csv(const SweepCurve& curve);
std::string sweep_runs_csv(const std::vector<SweepRun>& runs);
SweepCurve read_sweep_csv(const std::string& text);

/// Number of seeds whose curve peaks strictly inside the target range.
int interior_maximum_count(const Hypothesis1Result& result);

struct Hypothesis2Row {
  std::uint64_t seed = 0;
  double prompt_track = 0.0;           // (c, c_p)
  double caption_track_preferred = 0.0;  // (z^w, z^w_p)
  double caption_track_less = 0.0;       // (z^w, z^l_p)
  double gap_preferred() const { return caption_track_preferred - prompt_track; }
  double gap_less() const { return caption_track_less - prompt_track; }
};

Hypothesis2Row mean_row(const std::vector<Hypothesis2Row>& rows);

std::vector<Hypothesis2Row> hypothesis2_compare(const WorldConfig& world, const TrainConfig& train_config,
                                                const PerturbationLevel& level,
                                                const std::vector<std::uint64_t>& seeds,
                                                const SuiteOptions& options = {}, double caption_rho = 0.9);

std::string hypothesis2_csv(const std::vector<Hypothesis2Row>& rows);

struct AlignmentRow {
  std::uint64_t seed = 0;
  EvalReport dpo;
  EvalReport dcpo;
};

/// DPO on prompt records against DCPO on CaptionBoth(rho) records, each
/// from its own SFT reference, scored on the seed's held-out prompt pairs.
std::vector<AlignmentRow> alignment_compare(const WorldConfig& world, const TrainConfig& train_config, double rho,
                                            const std::vector<std::uint64_t>& seeds,
                                            const SuiteOptions& options = {});

std::string alignment_csv(const std::vector<AlignmentRow>& rows);

}  // namespace dcpo
