#include "dcpo/schedule.hpp"

#include <cmath>

namespace dcpo {

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule: steps must be >= 1");
  if (!std::isfinite(beta_start) || !std::isfinite(beta_end)) {
    throw std::invalid_argument("schedule: betas must be finite");
  }
  if (!(beta_start > 0.0) || beta_start > beta_end || !(beta_end < 1.0)) {
    throw std::invalid_argument("schedule: require 0 < beta_start <= beta_end < 1");
  }

  NoiseSchedule s;
  s.steps = steps;
  s.alpha_bar.resize(steps);
  s.alpha.resize(steps);
  s.sigma.resize(steps);
  s.snr.resize(steps);

  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    const double beta = beta_start + frac * (beta_end - beta_start);
    running *= 1.0 - beta;
    if (!(running > 0.0)) throw std::invalid_argument("schedule: alpha_bar underflowed to zero");
    s.alpha_bar[t] = running;
    s.alpha[t] = std::sqrt(running);
    s.sigma[t] = std::sqrt(1.0 - running);
    s.snr[t] = s.alpha[t] * s.alpha[t] / (s.sigma[t] * s.sigma[t]);
  }
  return s;
}

double weight(const NoiseSchedule& schedule, int t) {
  check_timestep(schedule, t);
  switch (schedule.weight_mode) {
    case WeightMode::Constant:
      return 1.0;
  }
  return 1.0;
}

int sample_timestep(Rng& rng, int steps) {
  if (steps < 1) throw std::invalid_argument("schedule: steps must be >= 1");
  return std::uniform_int_distribution<int>(0, steps - 1)(rng);
}

}  // namespace dcpo
