#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "dcpo/random.hpp"

namespace dcpo {

enum class WeightMode { Constant };

/// Discrete variance-preserving forward process. Index t runs over 0..steps-1;
/// alpha[t]^2 + sigma[t]^2 = 1 and snr[t] = alpha[t]^2 / sigma[t]^2.
/// Immutable after construction.
struct NoiseSchedule {
  int steps = 0;
  Eigen::VectorXd alpha_bar;
  Eigen::VectorXd alpha;
  Eigen::VectorXd sigma;
  Eigen::VectorXd snr;
  WeightMode weight_mode = WeightMode::Constant;
};

struct ScheduleConfig {
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end);

inline NoiseSchedule build_linear_schedule(const ScheduleConfig& config) {
  return build_linear_schedule(config.steps, config.beta_start, config.beta_end);
}

inline void check_timestep(const NoiseSchedule& schedule, int t) {
  if (t < 0 || t >= schedule.steps) {
    throw std::out_of_range("schedule: timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(schedule.steps) + ")");
  }
}

/// x_t = alpha[t] * x0 + sigma[t] * eps.
template <typename DerivedX, typename DerivedE>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> forward_sample(
    const NoiseSchedule& schedule, const Eigen::MatrixBase<DerivedX>& x0, int t,
    const Eigen::MatrixBase<DerivedE>& eps) {
  check_timestep(schedule, t);
  if (x0.size() != eps.size()) {
    throw std::invalid_argument("schedule: forward_sample dimension mismatch (" +
                                std::to_string(x0.size()) + " vs " + std::to_string(eps.size()) + ")");
  }
  return schedule.alpha[t] * x0 + schedule.sigma[t] * eps;
}

/// omega(lambda_t); identically 1 in Constant mode.
double weight(const NoiseSchedule& schedule, int t);

/// Uniform draw from {0, ..., steps-1}.
int sample_timestep(Rng& rng, int steps);

}  // namespace dcpo
