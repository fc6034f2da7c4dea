#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dcpo/denoiser.hpp"
#include "dcpo/schedule.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

struct ObjectiveConfig {
  double beta = 0.01;  // KL strength, > 0
};

void validate(const ObjectiveConfig& config);

/// beta * T * omega(lambda_t).
double effective_coefficient(const ObjectiveConfig& config, const NoiseSchedule& schedule, int t);

/// Per-record decomposition of the preference loss.
///   delta_preferred      = |eps^w - eps_theta|^2 - |eps^w - eps_ref|^2
///   delta_less_preferred = same on the less-preferred side
///   margin               = delta_less_preferred - delta_preferred
///   inner                = -coefficient * (delta_preferred - delta_less_preferred)
///   loss                 = softplus(-inner) = -log sigmoid(inner)
/// A larger margin means a smaller loss.
struct LossBreakdown {
  double delta_preferred = 0.0;
  double delta_less_preferred = 0.0;
  double margin = 0.0;
  double inner = 0.0;
  double loss = 0.0;
  // Raw squared errors behind the deltas.
  double policy_error_w = 0.0;
  double reference_error_w = 0.0;
  double policy_error_l = 0.0;
  double reference_error_l = 0.0;
};

LossBreakdown breakdown_from_errors(double policy_error_w, double reference_error_w, double policy_error_l,
                                    double reference_error_l, double coefficient);

/// |eps - eps_theta(x_t, caption, t)|^2 with x_t = forward_sample(x0, t, eps).
double sft_loss(const DenoiserParams& params, const NoiseSchedule& schedule, const SemanticVector& caption,
                const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps);

/// Dual-caption loss: the preferred side is conditioned on caption_w and the
/// less-preferred side on caption_l, for the policy and the reference alike.
LossBreakdown dcpo_loss(const DenoiserParams& policy, const DenoiserParams& reference, const DualCaptionPair& record,
                        const NoiseSchedule& schedule, int t, const Eigen::VectorXd& eps_w,
                        const Eigen::VectorXd& eps_l, const ObjectiveConfig& config);

/// Shared-prompt loss: both sides conditioned on the pair's prompt.
LossBreakdown dpo_loss(const DenoiserParams& policy, const DenoiserParams& reference, const PreferencePair& pair,
                       const NoiseSchedule& schedule, int t, const Eigen::VectorXd& eps_w,
                       const Eigen::VectorXd& eps_l, const ObjectiveConfig& config);

struct MarginDecomposition {
  double delta_preferred = 0.0;
  double delta_less_preferred = 0.0;
  double margin = 0.0;
};

MarginDecomposition margin_decomposition(const LossBreakdown& breakdown);

/// Bradley-Terry probability sigma(reward_gap).
double preference_probability(double reward_gap);

/// One (t, eps^w, eps^l) draw for a record.
struct NoiseDraw {
  int t = 0;
  Eigen::VectorXd eps_w;
  Eigen::VectorXd eps_l;
};

NoiseDraw draw_noise(Rng& rng, const NoiseSchedule& schedule, int d);

/// Batch means of the breakdown fields.
struct BatchStats {
  double loss = 0.0;
  double margin = 0.0;
  double delta_preferred = 0.0;
  double delta_less_preferred = 0.0;
};

/// Mean dual-caption loss over `records` on the tape; the reference enters as
/// constants so no gradient reaches it.
ad::Var dcpo_batch_objective(ad::Tape& tape, const ParamVars& policy, const DenoiserParams& reference,
                             std::span<const DualCaptionPair* const> records, std::span<const NoiseDraw> draws,
                             const NoiseSchedule& schedule, const ObjectiveConfig& config,
                             BatchStats* stats = nullptr);

/// Mean SFT loss over the preferred side of `records` (caption_w, preferred).
ad::Var sft_batch_objective(ad::Tape& tape, const ParamVars& params, std::span<const DualCaptionPair* const> records,
                            std::span<const NoiseDraw> draws, const NoiseSchedule& schedule,
                            BatchStats* stats = nullptr);

}  // namespace dcpo
