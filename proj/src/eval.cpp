#include "dcpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "dcpo/errors.hpp"
#include "dcpo/objectives.hpp"
#include "dcpo/perturb.hpp"
#include "dcpo/serialization.hpp"

namespace dcpo {

// ---- scoring ----

namespace {

Eigen::RowVectorXd squared_errors(const DenoiserParams& params, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& eps) {
  return (eps - predict_eps_batch(params, inputs)).colwise().squaredNorm();
}

PairScore score_record(const DenoiserParams& policy, const DenoiserParams& reference, const DualCaptionPair& r,
                       const NoiseSchedule& schedule, int n_mc, std::uint64_t seed) {
  Rng rng = make_rng(seed, "eval-pair", r.id);
  const Eigen::Index d = r.preferred.latent.size();
  const Eigen::Index k = r.caption_w.size();
  Eigen::MatrixXd in_w(d + k + 3, n_mc), in_l(d + k + 3, n_mc), eps_w(d, n_mc), eps_l(d, n_mc);
  for (int j = 0; j < n_mc; ++j) {
    const NoiseDraw draw = draw_noise(rng, schedule, static_cast<int>(d));
    in_w.col(j) = denoiser_input(forward_sample(schedule, r.preferred.latent, draw.t, draw.eps_w), r.caption_w,
                                 draw.t, schedule.steps);
    in_l.col(j) = denoiser_input(forward_sample(schedule, r.less_preferred.latent, draw.t, draw.eps_l), r.caption_l,
                                 draw.t, schedule.steps);
    eps_w.col(j) = draw.eps_w;
    eps_l.col(j) = draw.eps_l;
  }
  const Eigen::RowVectorXd pw = squared_errors(policy, in_w, eps_w);
  const Eigen::RowVectorXd rw = squared_errors(reference, in_w, eps_w);
  const Eigen::RowVectorXd pl = squared_errors(policy, in_l, eps_l);
  const Eigen::RowVectorXd rl = squared_errors(reference, in_l, eps_l);
  PairScore s;
  s.id = r.id;
  s.delta_preferred = (pw - rw).mean();
  s.delta_less_preferred = (pl - rl).mean();
  s.margin = ((pl - rl) - (pw - rw)).mean();
  s.policy_error_w = pw.mean();
  s.reference_error_w = rw.mean();
  s.policy_error_l = pl.mean();
  s.reference_error_l = rl.mean();
  for (double v : {s.delta_preferred, s.delta_less_preferred, s.margin}) {
    if (!std::isfinite(v)) throw NumericError("eval", "non-finite margin for record " + std::to_string(r.id));
  }
  return s;
}

template <typename Field>
double mean_of(const std::vector<PairScore>& rows, Field field) {
  double sum = 0.0;
  for (const auto& r : rows) sum += r.*field;
  return sum / static_cast<double>(rows.size());
}

template <typename Field>
double standard_error_of(const std::vector<PairScore>& rows, Field field) {
  if (rows.size() < 2) return 0.0;
  const double m = mean_of(rows, field);
  double ss = 0.0;
  for (const auto& r : rows) ss += (r.*field - m) * (r.*field - m);
  return std::sqrt(ss / static_cast<double>(rows.size() - 1) / static_cast<double>(rows.size()));
}

}  // namespace

std::vector<PairScore> score_pairs(const DenoiserParams& policy, const DenoiserParams& reference,
                                   const std::vector<DualCaptionPair>& records, const NoiseSchedule& schedule,
                                   int n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw ConfigError("eval", "n_mc must be >= 1");
  if (records.empty()) throw ConfigError("eval", "empty evaluation set");
  std::vector<PairScore> scores(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    scores[i] = score_record(policy, reference, records[i], schedule, n_mc, seed);
  });
  return scores;
}

EvalReport summarize(const std::vector<PairScore>& scores, int n_mc) {
  if (scores.empty()) throw ConfigError("eval", "empty evaluation set");
  EvalReport report;
  double correct = 0.0;
  for (const auto& s : scores) correct += s.margin > 0.0 ? 1.0 : (s.margin == 0.0 ? 0.5 : 0.0);
  report.n_pairs = scores.size();
  report.n_mc_draws = n_mc;
  report.preference_accuracy = correct / static_cast<double>(scores.size());
  report.mean_margin = mean_of(scores, &PairScore::margin);
  report.mean_delta_preferred = mean_of(scores, &PairScore::delta_preferred);
  report.mean_delta_less_preferred = mean_of(scores, &PairScore::delta_less_preferred);
  return report;
}

EvalReport preference_accuracy(const DenoiserParams& policy, const DenoiserParams& reference,
                               const std::vector<DualCaptionPair>& test_set, const NoiseSchedule& schedule, int n_mc,
                               std::uint64_t seed) {
  return summarize(score_pairs(policy, reference, test_set, schedule, n_mc, seed), n_mc);
}

void assert_disjoint(const std::vector<DualCaptionPair>& train, const std::vector<DualCaptionPair>& test) {
  std::set<std::size_t> ids;
  for (const auto& r : train) ids.insert(r.id);
  for (const auto& r : test) {
    if (ids.contains(r.id)) {
      throw ConfigError("eval", "test record " + std::to_string(r.id) + " also appears in the training set");
    }
  }
}

std::string eval_csv(const EvalReport& r) {
  return csv_table({"accuracy", "mean_margin", "mean_dpref", "mean_dless", "n_pairs", "n_mc"},
                   {{format_real(r.preference_accuracy), format_real(r.mean_margin),
                     format_real(r.mean_delta_preferred), format_real(r.mean_delta_less_preferred),
                     std::to_string(r.n_pairs), std::to_string(r.n_mc_draws)}});
}

MarginReport margin_report(const DenoiserParams& policy, const DenoiserParams& reference,
                           const std::vector<DualCaptionPair>& dataset, const NoiseSchedule& schedule, int n_mc,
                           std::uint64_t seed) {
  MarginReport report;
  report.rows = score_pairs(policy, reference, dataset, schedule, n_mc, seed);
  auto fill = [&](PairScore& out, auto stat) {
    out.delta_preferred = stat(&PairScore::delta_preferred);
    out.delta_less_preferred = stat(&PairScore::delta_less_preferred);
    out.margin = stat(&PairScore::margin);
    out.policy_error_w = stat(&PairScore::policy_error_w);
    out.reference_error_w = stat(&PairScore::reference_error_w);
    out.policy_error_l = stat(&PairScore::policy_error_l);
    out.reference_error_l = stat(&PairScore::reference_error_l);
  };
  fill(report.mean, [&](auto field) { return mean_of(report.rows, field); });
  fill(report.standard_error, [&](auto field) { return standard_error_of(report.rows, field); });
  return report;
}

std::string margin_csv(const MarginReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.rows.size());
  for (const auto& r : report.rows) {
    rows.push_back({std::to_string(r.id), format_real(r.delta_preferred), format_real(r.delta_less_preferred),
                    format_real(r.margin)});
  }
  return csv_table({"record_id", "dpref", "dless", "margin"}, rows);
}

// ---- gates ----

namespace {

struct RandomInstance {
  NoiseSchedule schedule;
  DenoiserParams policy;
  DenoiserParams reference;
  ObjectiveConfig objective;
  std::vector<PreferencePair> pairs;
  std::vector<DualCaptionPair> records;  // distinct captions
  std::vector<NoiseDraw> draws;
};

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

ImageSample random_image(Rng& rng, int d, int k) {
  return {standard_normal(rng, d), SemanticVector::from_unit(random_unit(rng, k))};
}

RandomInstance random_instance(Rng& rng, int max_d, int max_k, int max_h, int n_records, double beta_hi) {
  RandomInstance in;
  const int d = uniform_int(rng, 1, max_d);
  const int k = uniform_int(rng, 2, max_k);
  const int h = uniform_int(rng, 1, max_h);
  const int steps = uniform_int(rng, 1, 60);
  const double bs = uniform(rng, 1e-4, 1e-2);
  in.schedule = build_linear_schedule(steps, bs, uniform(rng, bs, 0.3));
  const std::uint64_t policy_seed = rng();
  const std::uint64_t reference_seed = rng();
  in.policy = init_params(d, k, h, policy_seed);
  in.reference = init_params(d, k, h, reference_seed);
  in.objective.beta = uniform(rng, 0.01, beta_hi);
  for (int i = 0; i < n_records; ++i) {
    const auto id = static_cast<std::size_t>(i);
    PreferencePair p{id, SemanticVector::from_unit(random_unit(rng, k)), random_image(rng, d, k),
                     random_image(rng, d, k)};
    const SemanticVector other = SemanticVector::from_unit(random_unit(rng, k));
    in.records.push_back({id, p.prompt, other, p.preferred, p.less_preferred, {Provenance::Kind::Captioned, {}}});
    in.pairs.push_back(std::move(p));
    in.draws.push_back(draw_noise(rng, in.schedule, d));
  }
  return in;
}

double relative_deviation(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
  return a == b ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

GateResult lemma1_check(int trials, std::uint64_t seed, bool inject_mismatch, double tolerance) {
  if (trials < 1) throw ConfigError("eval", "equal-caption trials must be >= 1");
  GateResult result;
  result.trials = trials;
  for (int i = 0; i < trials; ++i) {
    Rng rng = make_rng(seed, "lemma1", static_cast<std::uint64_t>(i));
    RandomInstance in = random_instance(rng, 6, 6, 8, 1, 5.0);
    const PreferencePair& pair = in.pairs.front();
    DualCaptionPair record{pair.id, pair.prompt, pair.prompt, pair.preferred, pair.less_preferred, {}};
    if (inject_mismatch) {
      record.caption_l = rotate_toward(pair.prompt, random_orthogonal_unit(rng, pair.prompt.vec()), 30.0);
    }
    const NoiseDraw& draw = in.draws.front();
    const LossBreakdown a =
        dcpo_loss(in.policy, in.reference, record, in.schedule, draw.t, draw.eps_w, draw.eps_l, in.objective);
    const LossBreakdown b =
        dpo_loss(in.policy, in.reference, pair, in.schedule, draw.t, draw.eps_w, draw.eps_l, in.objective);
    result.max_deviation = std::max({result.max_deviation, relative_deviation(a.loss, b.loss),
                                     relative_deviation(a.margin, b.margin)});
  }
  result.passed = result.max_deviation <= tolerance;
  return result;
}

GateResult policy_reference_check(int trials, std::uint64_t seed, double tolerance) {
  if (trials < 1) throw ConfigError("eval", "trials must be >= 1");
  GateResult result;
  result.trials = trials;
  for (int i = 0; i < trials; ++i) {
    Rng rng = make_rng(seed, "policy-reference", static_cast<std::uint64_t>(i));
    RandomInstance in = random_instance(rng, 6, 6, 8, 1, 10.0);
    const NoiseDraw& draw = in.draws.front();
    const double a = dcpo_loss(in.policy, in.policy, in.records.front(), in.schedule, draw.t, draw.eps_w,
                               draw.eps_l, in.objective)
                         .loss;
    const double b =
        dpo_loss(in.policy, in.policy, in.pairs.front(), in.schedule, draw.t, draw.eps_w, draw.eps_l, in.objective)
            .loss;
    result.max_deviation = std::max(
        {result.max_deviation, relative_deviation(a, std::numbers::ln2), relative_deviation(b, std::numbers::ln2)});
  }
  result.passed = result.max_deviation <= tolerance;
  return result;
}

std::string to_string(GradientTarget target) {
  switch (target) {
    case GradientTarget::SFT:
      return "sft";
    case GradientTarget::DPO:
      return "dpo";
    case GradientTarget::DCPO:
      return "dcpo";
  }
  return "dcpo";
}

GateResult gradient_check(GradientTarget target, int instances, std::uint64_t seed, double tolerance, double step) {
  if (instances < 1) throw ConfigError("eval", "gradient instances must be >= 1");
  GateResult result;
  result.trials = instances;
  for (int i = 0; i < instances; ++i) {
    Rng rng = make_rng(seed, "gradient-check-" + to_string(target), static_cast<std::uint64_t>(i));
    RandomInstance in = random_instance(rng, 4, 4, 6, 3, 0.2);
    std::vector<DualCaptionPair> records = in.records;
    if (target == GradientTarget::DPO) {
      for (std::size_t j = 0; j < records.size(); ++j) records[j].caption_l = records[j].caption_w;
    }
    std::vector<const DualCaptionPair*> ptrs;
    for (const auto& r : records) ptrs.push_back(&r);

    const Objective objective = [&](ad::Tape& tape, const ParamVars& vars) {
      return target == GradientTarget::SFT
                 ? sft_batch_objective(tape, vars, ptrs, in.draws, in.schedule)
                 : dcpo_batch_objective(tape, vars, in.reference, ptrs, in.draws, in.schedule, in.objective);
    };
    const auto value = [&](const DenoiserParams& p) {
      double sum = 0.0;
      for (std::size_t j = 0; j < records.size(); ++j) {
        const NoiseDraw& dr = in.draws[j];
        switch (target) {
          case GradientTarget::SFT:
            sum += sft_loss(p, in.schedule, records[j].caption_w, records[j].preferred.latent, dr.t, dr.eps_w);
            break;
          case GradientTarget::DPO:
            sum += dpo_loss(p, in.reference, in.pairs[j], in.schedule, dr.t, dr.eps_w, dr.eps_l, in.objective).loss;
            break;
          case GradientTarget::DCPO:
            sum += dcpo_loss(p, in.reference, records[j], in.schedule, dr.t, dr.eps_w, dr.eps_l, in.objective).loss;
            break;
        }
      }
      return sum / static_cast<double>(records.size());
    };
    const GradientVector analytic = loss_gradient(in.policy, objective);
    const GradientVector numeric = finite_difference_gradient(in.policy, value, step);
    result.max_deviation = std::max(result.max_deviation, max_relative_error(analytic, numeric));
  }
  result.passed = result.max_deviation <= tolerance;
  return result;
}

GateResult schedule_check(const NoiseSchedule& s, double tolerance) {
  GateResult result;
  result.trials = s.steps;
  bool ordered = true;
  for (int t = 0; t < s.steps; ++t) {
    result.max_deviation = std::max(result.max_deviation, std::abs(s.alpha[t] * s.alpha[t] + s.sigma[t] * s.sigma[t] - 1.0));
    if (t > 0 && !(s.alpha_bar[t] < s.alpha_bar[t - 1] && s.snr[t] < s.snr[t - 1])) ordered = false;
  }
  result.passed = ordered && result.max_deviation <= tolerance;
  return result;
}

// ---- suites ----

TrainConfig sft_config_for(const TrainConfig& align, const SuiteOptions& options) {
  TrainConfig sft = align;
  sft.method = Method::SFT;
  sft.reference_source = {};
  if (options.sft_steps) sft.steps = *options.sft_steps;
  if (options.sft_learning_rate) sft.learning_rate = *options.sft_learning_rate;
  return sft;
}

SeedWorld seed_world(const WorldConfig& base_world, std::uint64_t seed, const SuiteOptions& options) {
  WorldConfig world = base_world;
  world.seed = seed;
  WorldSplit split = split_world(generate_world(world), options.test_fraction);
  return {std::move(split.train), as_original_records(split.test)};
}

namespace {

TrainConfig seeded(const TrainConfig& config, std::uint64_t seed) {
  TrainConfig out = config;
  out.seed = seed;
  return out;
}

double aligned_accuracy(const TrainConfig& align, const SuiteOptions& options, std::uint64_t seed,
                        const std::vector<DualCaptionPair>& train, const std::vector<DualCaptionPair>& test,
                        EvalReport* report = nullptr) {
  assert_disjoint(train, test);
  const TrainConfig a = seeded(align, seed);
  const AlignResult run = pretrain_then_align(sft_config_for(a, options), a, train);
  const EvalReport r = preference_accuracy(run.policy, run.reference, test, build_linear_schedule(a.schedule),
                                           options.n_mc, options.eval_seed);
  if (report) *report = r;
  return r.preference_accuracy;
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::vector<DualCaptionPair> rotated_caption_dataset(const std::vector<PreferencePair>& pairs, double degrees,
                                                     std::uint64_t seed) {
  std::vector<DualCaptionPair> out;
  out.reserve(pairs.size());
  const Provenance provenance = degrees == 0.0 ? Provenance{} : Provenance{Provenance::Kind::Perturbed, {}};
  for (const auto& p : pairs) {
    Rng rng = make_rng(seed, "rotation-direction", p.id);
    const Eigen::VectorXd dir = random_orthogonal_unit(rng, p.prompt.vec());
    SemanticVector z_l = degrees == 0.0 ? p.prompt : rotate_toward(p.prompt, dir, degrees);
    out.push_back({p.id, p.prompt, std::move(z_l), p.preferred, p.less_preferred, provenance});
  }
  return out;
}

RotationFit fit_rotation(const std::vector<PreferencePair>& pairs, double target, std::uint64_t seed) {
  auto measure = [&](double deg) { return overlap_stats(rotated_caption_dataset(pairs, deg, seed)).delta_mu; };
  const double at_zero = measure(0.0);
  if (target <= at_zero) return {0.0, at_zero};
  const double at_max = measure(180.0);
  if (target > at_max) {
    throw InfeasibleError("eval", "delta_mu target " + format_real(target) + " exceeds the reachable maximum " +
                                      format_real(at_max));
  }
  double lo = 0.0;
  double hi = 180.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (measure(mid) >= target ? hi : lo) = mid;
  }
  return {hi, measure(hi)};
}

std::vector<SweepRun> Hypothesis1Result::seed_curve(std::uint64_t seed) const {
  std::vector<SweepRun> out;
  for (const auto& r : runs)
    if (r.seed == seed) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const SweepRun& a, const SweepRun& b) { return a.target < b.target; });
  return out;
}

Hypothesis1Result hypothesis1_sweep(const std::vector<double>& targets, const WorldConfig& base_world,
                                    const TrainConfig& train_config, const std::vector<std::uint64_t>& seeds,
                                    const SuiteOptions& options) {
  if (targets.size() < 3) throw ConfigError("eval", "overlap sweep needs at least 3 targets");
  if (seeds.size() < 3) throw ConfigError("eval", "overlap sweep needs at least 3 seeds");
  if (train_config.method != Method::DCPO) throw ConfigError("eval", "overlap sweep trains dcpo");

  Hypothesis1Result result;
  result.runs.resize(seeds.size() * targets.size());
  parallel_for(seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const SeedWorld w = seed_world(base_world, seed, options);
    const TrainConfig align = seeded(train_config, seed);
    const TrainResult sft = train(sft_config_for(align, options), as_original_records(w.train));
    const NoiseSchedule schedule = build_linear_schedule(align.schedule);
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      const RotationFit fit = fit_rotation(w.train, targets[ti], seed);
      const auto dataset = rotated_caption_dataset(w.train, fit.degrees, seed);
      assert_disjoint(dataset, w.test);
      const TrainResult run = train_from(align, dataset, sft.params, sft.params);
      const EvalReport r =
          preference_accuracy(run.params, sft.params, w.test, schedule, options.n_mc, options.eval_seed);
      result.runs[si * targets.size() + ti] = {seed, targets[ti], fit.measured_delta_mu, fit.degrees,
                                               r.preference_accuracy};
    }
  });

  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::vector<double> accs;
    double dmu = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const SweepRun& r = result.runs[si * targets.size() + ti];
      accs.push_back(r.preference_accuracy);
      dmu += r.measured_delta_mu;
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    result.curve.points.push_back({dmu / static_cast<double>(seeds.size()), mean / static_cast<double>(accs.size()),
                                   sample_sd(accs)});
  }
  std::stable_sort(result.curve.points.begin(), result.curve.points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.delta_mu < b.delta_mu; });
  return result;
}

int interior_maximum_count(const Hypothesis1Result& result) {
  std::set<std::uint64_t> seeds;
  for (const auto& r : result.runs) seeds.insert(r.seed);
  int count = 0;
  for (std::uint64_t seed : seeds) {
    const auto curve = result.seed_curve(seed);
    const auto best = std::max_element(curve.begin(), curve.end(), [](const SweepRun& a, const SweepRun& b) {
      return a.preference_accuracy < b.preference_accuracy;
    });
    const double top = best->preference_accuracy;
    // A tie with an endpoint does not count as an interior maximum.
    const bool endpoint_top = curve.front().preference_accuracy == top || curve.back().preference_accuracy == top;
    if (!endpoint_top) ++count;
  }
  return count;
}

std::string sweep_csv(const SweepCurve& curve) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : curve.points) {
    rows.push_back({format_real(p.delta_mu), format_real(p.preference_accuracy), format_real(p.spread)});
  }
  return csv_table({"delta_mu", "accuracy", "spread"}, rows);
}

std::string sweep_runs_csv(const std::vector<SweepRun>& runs) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : runs) {
    rows.push_back({std::to_string(r.seed), format_real(r.target), format_real(r.measured_delta_mu),
                    format_real(r.angle_degrees), format_real(r.preference_accuracy)});
  }
  return csv_table({"seed", "target", "delta_mu", "angle_degrees", "accuracy"}, rows);
}

SweepCurve read_sweep_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  if (t.header != std::vector<std::string>{"delta_mu", "accuracy", "spread"}) {
    throw ConfigError("eval", "not a sweep curve CSV");
  }
  SweepCurve curve;
  for (const auto& row : t.rows) {
    curve.points.push_back({parse_real(row[0], "delta_mu"), parse_real(row[1], "accuracy"),
                            parse_real(row[2], "spread")});
  }
  return curve;
}

Hypothesis2Row mean_row(const std::vector<Hypothesis2Row>& rows) {
  Hypothesis2Row m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.prompt_track += r.prompt_track;
    m.caption_track_preferred += r.caption_track_preferred;
    m.caption_track_less += r.caption_track_less;
  }
  const auto n = static_cast<double>(rows.size());
  m.prompt_track /= n;
  m.caption_track_preferred /= n;
  m.caption_track_less /= n;
  return m;
}

std::vector<Hypothesis2Row> hypothesis2_compare(const WorldConfig& world, const TrainConfig& train_config,
                                                const PerturbationLevel& level,
                                                const std::vector<std::uint64_t>& seeds, const SuiteOptions& options,
                                                double caption_rho) {
  if (train_config.method != Method::DCPO) throw ConfigError("eval", "perturbed-track comparison trains dcpo");
  std::vector<Hypothesis2Row> rows(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const SeedWorld w = seed_world(world, seed, options);
    auto variant = [&](double rho, mode::Source source) {
      Rng rng = make_rng(seed, "hypothesis2-dataset");
      const auto dataset = build_dual_caption_dataset(w.train, mode::Hybrid{rho, level, source}, rng, options.dataset);
      return aligned_accuracy(train_config, options, seed, dataset, w.test);
    };
    rows[si].seed = seed;
    rows[si].prompt_track = variant(0.0, mode::Source::Preferred);
    rows[si].caption_track_preferred = variant(caption_rho, mode::Source::Preferred);
    rows[si].caption_track_less = variant(caption_rho, mode::Source::LessPreferred);
  });
  return rows;
}

std::string hypothesis2_csv(const std::vector<Hypothesis2Row>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) {
    out.push_back({std::to_string(r.seed), format_real(r.prompt_track), format_real(r.caption_track_preferred),
                   format_real(r.caption_track_less), format_real(r.gap_preferred()), format_real(r.gap_less())});
  }
  return csv_table({"seed", "prompt_track", "caption_track_zw", "caption_track_zl", "gap_zw", "gap_zl"}, out);
}

std::vector<AlignmentRow> alignment_compare(const WorldConfig& world, const TrainConfig& train_config, double rho,
                                            const std::vector<std::uint64_t>& seeds, const SuiteOptions& options) {
  std::vector<AlignmentRow> rows(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const SeedWorld w = seed_world(world, seed, options);
    TrainConfig dpo = train_config;
    dpo.method = Method::DPO;
    TrainConfig dcpo = train_config;
    dcpo.method = Method::DCPO;
    Rng rng = make_rng(seed, "alignment-dataset");
    const auto captioned = build_dual_caption_dataset(w.train, mode::CaptionBoth{rho}, rng, options.dataset);
    rows[si].seed = seed;
    aligned_accuracy(dpo, options, seed, as_original_records(w.train), w.test, &rows[si].dpo);
    aligned_accuracy(dcpo, options, seed, captioned, w.test, &rows[si].dcpo);
  });
  return rows;
}

std::string alignment_csv(const std::vector<AlignmentRow>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) {
    out.push_back({std::to_string(r.seed), format_real(r.dpo.preference_accuracy),
                   format_real(r.dcpo.preference_accuracy), format_real(r.dpo.mean_margin),
                   format_real(r.dcpo.mean_margin)});
  }
  return csv_table({"seed", "dpo_accuracy", "dcpo_accuracy", "dpo_margin", "dcpo_margin"}, out);
}

}  // namespace dcpo
