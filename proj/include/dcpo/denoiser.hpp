#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "dcpo/autodiff.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

/// Conditional epsilon-predictor: [x_t; z; time features] -> tanh -> tanh ->
/// linear. Canonical flat order is w1, b1, w2, b2, w3, b3 with each matrix in
/// column-major order.
struct DenoiserParams {
  int d = 0;
  int k = 0;
  int h = 0;
  Eigen::MatrixXd w1;  // h x (d + k + 3)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // h x h
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // d x h
  Eigen::VectorXd b3;

  int input_dim() const noexcept { return d + k + 3; }
  Eigen::Index parameter_count() const noexcept {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }

  friend bool operator==(const DenoiserParams& a, const DenoiserParams& b);
};

using GradientVector = Eigen::VectorXd;

/// Shape-only count, for checking against parameter_count().
Eigen::Index denoiser_parameter_count(int d, int k, int h);

/// Uniform in +-1/sqrt(fan_in) per layer, weights and biases alike.
DenoiserParams init_params(int d, int k, int h, std::uint64_t seed);

DenoiserParams zero_params(int d, int k, int h);

Eigen::VectorXd flatten(const DenoiserParams& params);
DenoiserParams unflatten(const Eigen::VectorXd& flat, int d, int k, int h);

/// (t/T, sin(2 pi t/T), cos(2 pi t/T)).
Eigen::Vector3d time_features(int t, int steps);

Eigen::VectorXd denoiser_input(const Eigen::VectorXd& x_t, const SemanticVector& z, int t, int steps);

Eigen::VectorXd predict_eps(const DenoiserParams& params, const Eigen::VectorXd& x_t, const SemanticVector& z, int t,
                            int steps);

/// Column-batched forward: each column of `inputs` is a denoiser_input.
Eigen::MatrixXd predict_eps_batch(const DenoiserParams& params, const Eigen::MatrixXd& inputs);

/// Tape handles for one parameter set, in canonical order.
struct ParamVars {
  ad::Var w1, b1, w2, b2, w3, b3;
};

ParamVars record_params(ad::Tape& tape, const DenoiserParams& params);

ad::Var predict_eps(ad::Tape& tape, const ParamVars& params, const Eigen::MatrixXd& inputs);

GradientVector collect_gradient(const ad::Tape& tape, const ParamVars& vars);

/// Differentiable objective: records its value on the tape from the given
/// parameter handles and returns the 1 x 1 root.
using Objective = std::function<ad::Var(ad::Tape&, const ParamVars&)>;

struct ValueAndGradient {
  double value = 0.0;
  GradientVector gradient;
};

/// Reverse-mode gradient of `objective` at `params`; throws NumericError when
/// the objective or any gradient entry is non-finite.
ValueAndGradient evaluate_with_gradient(const DenoiserParams& params, const Objective& objective);

GradientVector loss_gradient(const DenoiserParams& params, const Objective& objective);

/// Central differences of a plain scalar function of the parameters.
GradientVector finite_difference_gradient(const DenoiserParams& params,
                                          const std::function<double(const DenoiserParams&)>& value,
                                          double step = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const GradientVector& a, const GradientVector& b, double floor = 1e-6);

}  // namespace dcpo
