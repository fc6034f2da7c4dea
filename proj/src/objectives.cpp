#include "dcpo/objectives.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dcpo/errors.hpp"

namespace dcpo {
namespace {

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError("objectives", std::string("non-finite ") + term);
}

void check_draw_shapes(const Eigen::VectorXd& eps_w, const Eigen::VectorXd& eps_l, int d) {
  if (eps_w.size() != d || eps_l.size() != d) throw std::invalid_argument("objectives: noise dimension mismatch");
}

double squared_error(const DenoiserParams& params, const NoiseSchedule& schedule, const SemanticVector& z,
                     const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps) {
  const Eigen::VectorXd x_t = forward_sample(schedule, x0, t, eps);
  return (eps - predict_eps(params, x_t, z, t, schedule.steps)).squaredNorm();
}

}  // namespace

void validate(const ObjectiveConfig& config) {
  if (!(config.beta > 0.0) || !std::isfinite(config.beta)) throw ConfigError("objectives", "beta must be > 0");
}

double effective_coefficient(const ObjectiveConfig& config, const NoiseSchedule& schedule, int t) {
  return config.beta * schedule.steps * weight(schedule, t);
}

LossBreakdown breakdown_from_errors(double policy_error_w, double reference_error_w, double policy_error_l,
                                    double reference_error_l, double coefficient) {
  require_finite(policy_error_w, "policy error on the preferred side");
  require_finite(reference_error_w, "reference error on the preferred side");
  require_finite(policy_error_l, "policy error on the less-preferred side");
  require_finite(reference_error_l, "reference error on the less-preferred side");
  LossBreakdown b;
  b.policy_error_w = policy_error_w;
  b.reference_error_w = reference_error_w;
  b.policy_error_l = policy_error_l;
  b.reference_error_l = reference_error_l;
  b.delta_preferred = policy_error_w - reference_error_w;
  b.delta_less_preferred = policy_error_l - reference_error_l;
  b.margin = b.delta_less_preferred - b.delta_preferred;
  b.inner = -coefficient * (b.delta_preferred - b.delta_less_preferred);
  require_finite(b.inner, "inner term");
  b.loss = ad::softplus(-b.inner);
  return b;
}

double sft_loss(const DenoiserParams& params, const NoiseSchedule& schedule, const SemanticVector& caption,
                const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps) {
  const double loss = squared_error(params, schedule, caption, x0, t, eps);
  require_finite(loss, "SFT loss");
  return loss;
}

LossBreakdown dcpo_loss(const DenoiserParams& policy, const DenoiserParams& reference, const DualCaptionPair& record,
                        const NoiseSchedule& schedule, int t, const Eigen::VectorXd& eps_w,
                        const Eigen::VectorXd& eps_l, const ObjectiveConfig& config) {
  check_draw_shapes(eps_w, eps_l, policy.d);
  const double pw = squared_error(policy, schedule, record.caption_w, record.preferred.latent, t, eps_w);
  const double rw = squared_error(reference, schedule, record.caption_w, record.preferred.latent, t, eps_w);
  const double pl = squared_error(policy, schedule, record.caption_l, record.less_preferred.latent, t, eps_l);
  const double rl = squared_error(reference, schedule, record.caption_l, record.less_preferred.latent, t, eps_l);
  return breakdown_from_errors(pw, rw, pl, rl, effective_coefficient(config, schedule, t));
}

LossBreakdown dpo_loss(const DenoiserParams& policy, const DenoiserParams& reference, const PreferencePair& pair,
                       const NoiseSchedule& schedule, int t, const Eigen::VectorXd& eps_w,
                       const Eigen::VectorXd& eps_l, const ObjectiveConfig& config) {
  check_draw_shapes(eps_w, eps_l, policy.d);
  const SemanticVector& c = pair.prompt;
  const double pw = squared_error(policy, schedule, c, pair.preferred.latent, t, eps_w);
  const double rw = squared_error(reference, schedule, c, pair.preferred.latent, t, eps_w);
  const double pl = squared_error(policy, schedule, c, pair.less_preferred.latent, t, eps_l);
  const double rl = squared_error(reference, schedule, c, pair.less_preferred.latent, t, eps_l);
  return breakdown_from_errors(pw, rw, pl, rl, effective_coefficient(config, schedule, t));
}

MarginDecomposition margin_decomposition(const LossBreakdown& b) {
  return {b.delta_preferred, b.delta_less_preferred, b.margin};
}

double preference_probability(double reward_gap) {
  if (!std::isfinite(reward_gap)) throw std::invalid_argument("objectives: reward gap must be finite");
  return ad::sigmoid(reward_gap);
}

NoiseDraw draw_noise(Rng& rng, const NoiseSchedule& schedule, int d) {
  NoiseDraw draw;
  draw.t = sample_timestep(rng, schedule.steps);
  draw.eps_w = standard_normal(rng, d);
  draw.eps_l = standard_normal(rng, d);
  return draw;
}

namespace {

struct SideBatch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd eps;
};

// Columns of denoiser inputs and target noise for one side of the batch.
SideBatch assemble_side(std::span<const DualCaptionPair* const> records, std::span<const NoiseDraw> draws,
                        const NoiseSchedule& schedule, bool preferred_side) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const DualCaptionPair& first = *records.front();
  const Eigen::Index d = first.preferred.latent.size();
  const Eigen::Index k = first.caption_w.size();
  SideBatch b{Eigen::MatrixXd(d + k + 3, n), Eigen::MatrixXd(d, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const DualCaptionPair& r = *records[static_cast<std::size_t>(j)];
    const NoiseDraw& draw = draws[static_cast<std::size_t>(j)];
    const Eigen::VectorXd& eps = preferred_side ? draw.eps_w : draw.eps_l;
    const ImageSample& image = preferred_side ? r.preferred : r.less_preferred;
    const SemanticVector& z = preferred_side ? r.caption_w : r.caption_l;
    if (eps.size() != d || image.latent.size() != d || z.size() != k) {
      throw std::invalid_argument("objectives: inconsistent record shapes in batch");
    }
    b.inputs.col(j) = denoiser_input(forward_sample(schedule, image.latent, draw.t, eps), z, draw.t, schedule.steps);
    b.eps.col(j) = eps;
  }
  return b;
}

void check_batch(std::span<const DualCaptionPair* const> records, std::span<const NoiseDraw> draws) {
  if (records.empty()) throw std::invalid_argument("objectives: empty batch");
  if (records.size() != draws.size()) throw std::invalid_argument("objectives: one noise draw per record required");
}

void require_finite_row(const Eigen::MatrixXd& row, const char* term) {
  if (!row.allFinite()) throw NumericError("objectives", std::string("non-finite ") + term);
}

}  // namespace

ad::Var dcpo_batch_objective(ad::Tape& tape, const ParamVars& policy, const DenoiserParams& reference,
                             std::span<const DualCaptionPair* const> records, std::span<const NoiseDraw> draws,
                             const NoiseSchedule& schedule, const ObjectiveConfig& config, BatchStats* stats) {
  check_batch(records, draws);
  const SideBatch win = assemble_side(records, draws, schedule, true);
  const SideBatch lose = assemble_side(records, draws, schedule, false);
  const auto n = static_cast<Eigen::Index>(records.size());

  const Eigen::MatrixXd ref_err_w = (win.eps - predict_eps_batch(reference, win.inputs)).colwise().squaredNorm();
  const Eigen::MatrixXd ref_err_l = (lose.eps - predict_eps_batch(reference, lose.inputs)).colwise().squaredNorm();
  require_finite_row(ref_err_w, "reference error on the preferred side");
  require_finite_row(ref_err_l, "reference error on the less-preferred side");

  Eigen::MatrixXd neg_coefficient(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    neg_coefficient(0, j) = -effective_coefficient(config, schedule, draws[static_cast<std::size_t>(j)].t);
  }

  const ad::Var pol_err_w =
      tape.column_squared_norms(tape.sub(tape.constant(win.eps), predict_eps(tape, policy, win.inputs)));
  const ad::Var pol_err_l =
      tape.column_squared_norms(tape.sub(tape.constant(lose.eps), predict_eps(tape, policy, lose.inputs)));
  require_finite_row(tape.value(pol_err_w), "policy error on the preferred side");
  require_finite_row(tape.value(pol_err_l), "policy error on the less-preferred side");

  const ad::Var delta_w = tape.sub(pol_err_w, tape.constant(ref_err_w));
  const ad::Var delta_l = tape.sub(pol_err_l, tape.constant(ref_err_l));
  const ad::Var inner = tape.cwise_product(tape.constant(neg_coefficient), tape.sub(delta_w, delta_l));
  const ad::Var loss = tape.mean(tape.softplus(tape.scale(inner, -1.0)));

  if (stats != nullptr) {
    const double nd = static_cast<double>(n);
    stats->loss = tape.scalar(loss);
    stats->delta_preferred = tape.value(delta_w).sum() / nd;
    stats->delta_less_preferred = tape.value(delta_l).sum() / nd;
    stats->margin = (tape.value(delta_l) - tape.value(delta_w)).sum() / nd;
  }
  return loss;
}

ad::Var sft_batch_objective(ad::Tape& tape, const ParamVars& params, std::span<const DualCaptionPair* const> records,
                            std::span<const NoiseDraw> draws, const NoiseSchedule& schedule, BatchStats* stats) {
  check_batch(records, draws);
  const SideBatch win = assemble_side(records, draws, schedule, true);
  const ad::Var err =
      tape.column_squared_norms(tape.sub(tape.constant(win.eps), predict_eps(tape, params, win.inputs)));
  require_finite_row(tape.value(err), "SFT loss");
  const ad::Var loss = tape.mean(err);
  if (stats != nullptr) *stats = BatchStats{tape.scalar(loss), 0.0, 0.0, 0.0};
  return loss;
}

}  // namespace dcpo
