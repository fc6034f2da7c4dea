#include "dcpo/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dcpo/errors.hpp"
#include "dcpo/random.hpp"

namespace dcpo {

bool operator==(const DenoiserParams& a, const DenoiserParams& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.array() == y.array()).all();
  };
  return a.d == b.d && a.k == b.k && a.h == b.h && same(a.w1, b.w1) && same(a.b1, b.b1) && same(a.w2, b.w2) &&
         same(a.b2, b.b2) && same(a.w3, b.w3) && same(a.b3, b.b3);
}

Eigen::Index denoiser_parameter_count(int d, int k, int h) {
  const Eigen::Index in = d + k + 3;
  return (in + 1) * h + (static_cast<Eigen::Index>(h) + 1) * h + (static_cast<Eigen::Index>(h) + 1) * d;
}

namespace {

void check_dims(int d, int k, int h) {
  if (d < 1 || k < 1 || h < 1) throw std::invalid_argument("denoiser: dimensions must be positive");
}

}  // namespace

DenoiserParams zero_params(int d, int k, int h) {
  check_dims(d, k, h);
  DenoiserParams p;
  p.d = d;
  p.k = k;
  p.h = h;
  p.w1 = Eigen::MatrixXd::Zero(h, p.input_dim());
  p.b1 = Eigen::VectorXd::Zero(h);
  p.w2 = Eigen::MatrixXd::Zero(h, h);
  p.b2 = Eigen::VectorXd::Zero(h);
  p.w3 = Eigen::MatrixXd::Zero(d, h);
  p.b3 = Eigen::VectorXd::Zero(d);
  return p;
}

DenoiserParams init_params(int d, int k, int h, std::uint64_t seed) {
  DenoiserParams p = zero_params(d, k, h);
  Rng rng = make_rng(seed, "denoiser-init");
  auto fill = [&](auto& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  };
  fill(p.w1, p.input_dim());
  fill(p.b1, p.input_dim());
  fill(p.w2, h);
  fill(p.b2, h);
  fill(p.w3, h);
  fill(p.b3, h);
  return p;
}

Eigen::VectorXd flatten(const DenoiserParams& p) {
  Eigen::VectorXd flat(p.parameter_count());
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  };
  put(p.w1);
  put(p.b1);
  put(p.w2);
  put(p.b2);
  put(p.w3);
  put(p.b3);
  return flat;
}

DenoiserParams unflatten(const Eigen::VectorXd& flat, int d, int k, int h) {
  DenoiserParams p = zero_params(d, k, h);
  if (flat.size() != p.parameter_count()) {
    throw std::invalid_argument("denoiser: flat parameter vector has wrong length (" + std::to_string(flat.size()) +
                                " vs " + std::to_string(p.parameter_count()) + ")");
  }
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  take(p.w1);
  take(p.b1);
  take(p.w2);
  take(p.b2);
  take(p.w3);
  take(p.b3);
  return p;
}

Eigen::Vector3d time_features(int t, int steps) {
  if (steps < 1 || t < 0 || t >= steps) throw std::out_of_range("denoiser: timestep out of range");
  const double phase = static_cast<double>(t) / steps;
  return {phase, std::sin(2.0 * std::numbers::pi * phase), std::cos(2.0 * std::numbers::pi * phase)};
}

Eigen::VectorXd denoiser_input(const Eigen::VectorXd& x_t, const SemanticVector& z, int t, int steps) {
  Eigen::VectorXd in(x_t.size() + z.size() + 3);
  in << x_t, z.vec(), time_features(t, steps);
  return in;
}

Eigen::MatrixXd predict_eps_batch(const DenoiserParams& p, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != p.input_dim()) throw std::invalid_argument("denoiser: input dimension mismatch");
  Eigen::MatrixXd h1 = p.w1 * inputs;
  h1.colwise() += p.b1;
  h1 = h1.array().tanh();
  Eigen::MatrixXd h2 = p.w2 * h1;
  h2.colwise() += p.b2;
  h2 = h2.array().tanh();
  Eigen::MatrixXd out = p.w3 * h2;
  out.colwise() += p.b3;
  return out;
}

Eigen::VectorXd predict_eps(const DenoiserParams& p, const Eigen::VectorXd& x_t, const SemanticVector& z, int t,
                            int steps) {
  if (x_t.size() != p.d || z.size() != p.k) throw std::invalid_argument("denoiser: input shape mismatch");
  return predict_eps_batch(p, denoiser_input(x_t, z, t, steps)).col(0);
}

ParamVars record_params(ad::Tape& tape, const DenoiserParams& p) {
  return {tape.variable(p.w1), tape.variable(p.b1), tape.variable(p.w2),
          tape.variable(p.b2), tape.variable(p.w3), tape.variable(p.b3)};
}

ad::Var predict_eps(ad::Tape& tape, const ParamVars& v, const Eigen::MatrixXd& inputs) {
  const ad::Var x = tape.constant(inputs);
  const ad::Var h1 = tape.tanh(tape.add_columnwise(tape.matmul(v.w1, x), v.b1));
  const ad::Var h2 = tape.tanh(tape.add_columnwise(tape.matmul(v.w2, h1), v.b2));
  return tape.add_columnwise(tape.matmul(v.w3, h2), v.b3);
}

GradientVector collect_gradient(const ad::Tape& tape, const ParamVars& v) {
  Eigen::Index n = 0;
  for (ad::Var var : {v.w1, v.b1, v.w2, v.b2, v.w3, v.b3}) n += tape.gradient(var).size();
  GradientVector g(n);
  Eigen::Index at = 0;
  for (ad::Var var : {v.w1, v.b1, v.w2, v.b2, v.w3, v.b3}) {
    const auto& m = tape.gradient(var);
    g.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  return g;
}

ValueAndGradient evaluate_with_gradient(const DenoiserParams& params, const Objective& objective) {
  ad::Tape tape;
  const ParamVars vars = record_params(tape, params);
  const ad::Var root = objective(tape, vars);
  const double value = tape.scalar(root);
  if (!std::isfinite(value)) throw NumericError("denoiser", "objective is non-finite");
  tape.backward(root);
  GradientVector g = collect_gradient(tape, vars);
  if (!g.allFinite()) throw NumericError("denoiser", "gradient has non-finite entries");
  return {value, std::move(g)};
}

GradientVector loss_gradient(const DenoiserParams& params, const Objective& objective) {
  return evaluate_with_gradient(params, objective).gradient;
}

GradientVector finite_difference_gradient(const DenoiserParams& params,
                                          const std::function<double(const DenoiserParams&)>& value, double step) {
  Eigen::VectorXd flat = flatten(params);
  GradientVector g(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + step;
    const double up = value(unflatten(flat, params.d, params.k, params.h));
    flat[i] = saved - step;
    const double down = value(unflatten(flat, params.d, params.k, params.h));
    flat[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_relative_error(const GradientVector& a, const GradientVector& b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("denoiser: gradient length mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace dcpo
