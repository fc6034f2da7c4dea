#include "doctest.h"

#include <cmath>

#include <Eigen/SVD>

#include "dcpo/denoiser.hpp"
#include "dcpo/errors.hpp"
#include "dcpo/objectives.hpp"
#include "dcpo/schedule.hpp"

using namespace dcpo;

namespace {

SemanticVector unit_z(int k, std::uint64_t seed) {
  Rng rng(seed);
  return SemanticVector::normalized(standard_normal(rng, k));
}

double spectral_norm(const Eigen::MatrixXd& m) { return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0); }

ad::Var squared_norm(ad::Tape& tape, const ParamVars& v) {
  ad::Var total = tape.scalar_constant(0.0);
  for (ad::Var x : {v.w1, v.b1, v.w2, v.b2, v.w3, v.b3}) total = tape.add(total, tape.sum(tape.cwise_product(x, x)));
  return total;
}

}  // namespace

TEST_CASE("parameter counts follow the layer shapes") {
  CHECK(denoiser_parameter_count(1, 1, 1) == 10);
  CHECK(denoiser_parameter_count(8, 4, 32) == 1832);
  CHECK(init_params(1, 1, 1, 1).parameter_count() == 10);
  CHECK(init_params(8, 4, 32, 1).parameter_count() == 1832);
  CHECK_THROWS(init_params(0, 4, 32, 1));
  CHECK_THROWS(zero_params(8, 4, 0));
}

TEST_CASE("initialization is seeded and bounded by fan-in") {
  const DenoiserParams a = init_params(8, 4, 32, 5);
  CHECK(a == init_params(8, 4, 32, 5));
  CHECK(!(a == init_params(8, 4, 32, 6)));
  CHECK(a.w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(15.0));
  CHECK(a.b1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(15.0));
  CHECK(a.w2.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(32.0));
  CHECK(a.w3.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(32.0));
  CHECK(a.w1.allFinite());
}

TEST_CASE("flatten and unflatten are inverse in canonical order") {
  const DenoiserParams p = init_params(3, 2, 5, 9);
  const Eigen::VectorXd flat = flatten(p);
  CHECK(flat.size() == p.parameter_count());
  CHECK(flat[0] == p.w1(0, 0));
  CHECK(flat[1] == p.w1(1, 0));
  CHECK(flat[p.w1.size()] == p.b1[0]);
  CHECK(flat[flat.size() - 1] == p.b3[p.d - 1]);
  CHECK(unflatten(flat, 3, 2, 5) == p);
  CHECK_THROWS(unflatten(flat.head(flat.size() - 1), 3, 2, 5));
}

TEST_CASE("time features") {
  const Eigen::Vector3d f0 = time_features(0, 50);
  CHECK(f0[0] == 0.0);
  CHECK(f0[1] == 0.0);
  CHECK(f0[2] == 1.0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector3d f = time_features(t, 50);
    REQUIRE(f[0] >= 0.0);
    REQUIRE(f[0] < 1.0);
    REQUIRE(f.tail<2>().cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("zero parameters predict zero") {
  const DenoiserParams p = zero_params(8, 4, 32);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = standard_normal(rng, 8);
    CHECK(predict_eps(p, x, unit_z(4, static_cast<std::uint64_t>(i)), i, 50).isZero(0.0));
  }
}

TEST_CASE("hand forward pass in one dimension") {
  DenoiserParams p = zero_params(1, 1, 1);
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 1.0;
  p.w3(0, 0) = 1.0;
  const SemanticVector z = SemanticVector::from_unit(Eigen::VectorXd::Ones(1));
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
  CHECK(std::abs(predict_eps(p, x, z, 13, 50)[0] - 0.5401502869500899) < 1e-15);

  p.w1(0, 1) = -0.25;
  p.b3[0] = 0.1;
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK(std::abs(predict_eps(p, one, z, 40, 50)[0] - 0.6615874800637045) < 1e-15);
  CHECK(predict_eps(p, one, z, 40, 50) == predict_eps(p, one, z, 40, 50));
}

TEST_CASE("forward shape errors") {
  const DenoiserParams p = init_params(8, 4, 32, 1);
  CHECK_THROWS(predict_eps(p, Eigen::VectorXd::Zero(7), unit_z(4, 1), 0, 50));
  CHECK_THROWS(predict_eps(p, Eigen::VectorXd::Zero(8), unit_z(3, 1), 0, 50));
}

TEST_CASE("batched forward equals per-column forward") {
  const DenoiserParams p = init_params(8, 4, 32, 3);
  Rng rng(4);
  Eigen::MatrixXd inputs(p.input_dim(), 6);
  std::vector<Eigen::VectorXd> expected;
  for (int j = 0; j < 6; ++j) {
    const Eigen::VectorXd x = standard_normal(rng, 8);
    const SemanticVector z = unit_z(4, static_cast<std::uint64_t>(j));
    inputs.col(j) = denoiser_input(x, z, 5 * j, 50);
    expected.push_back(predict_eps(p, x, z, 5 * j, 50));
  }
  const Eigen::MatrixXd out = predict_eps_batch(p, inputs);
  for (int j = 0; j < 6; ++j) CHECK((out.col(j) - expected[static_cast<std::size_t>(j)]).norm() < 1e-14);

  ad::Tape tape;
  const ParamVars vars = record_params(tape, p);
  CHECK((tape.value(predict_eps(tape, vars, inputs)) - out).norm() < 1e-14);
}

TEST_CASE("gradient of a constant is zero") {
  const DenoiserParams p = init_params(2, 2, 3, 1);
  const auto res = evaluate_with_gradient(p, [](ad::Tape& tape, const ParamVars&) {
    return tape.scalar_constant(4.0);
  });
  CHECK(res.value == 4.0);
  CHECK(res.gradient.size() == p.parameter_count());
  CHECK(res.gradient.isZero(0.0));
}

TEST_CASE("gradient of the squared parameter norm is twice the parameters") {
  const DenoiserParams p = init_params(3, 2, 4, 8);
  const GradientVector g = loss_gradient(p, squared_norm);
  CHECK((g - 2.0 * flatten(p)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("non-finite objectives are rejected") {
  const DenoiserParams p = init_params(2, 2, 3, 1);
  CHECK_THROWS_AS(evaluate_with_gradient(p,
                                         [](ad::Tape& tape, const ParamVars&) {
                                           return tape.scalar_constant(std::nan(""));
                                         }),
                  NumericError);
}

TEST_CASE("dual-caption loss gradient matches finite differences on one pair") {
  const NoiseSchedule schedule = build_linear_schedule(ScheduleConfig{});
  const int d = 2;
  const int k = 2;
  const int h = 4;
  const DenoiserParams policy = init_params(d, k, h, 31);
  const DenoiserParams reference = init_params(d, k, h, 32);
  REQUIRE(policy.parameter_count() <= 500);
  Rng rng(33);
  DualCaptionPair rec;
  rec.caption_w = unit_z(k, 1);
  rec.caption_l = unit_z(k, 2);
  rec.preferred = {standard_normal(rng, d), rec.caption_w};
  rec.less_preferred = {standard_normal(rng, d), rec.caption_l};
  const NoiseDraw draw = draw_noise(rng, schedule, d);
  const ObjectiveConfig config{0.1};
  const DualCaptionPair* ptrs[] = {&rec};
  const NoiseDraw draws[] = {draw};

  const GradientVector analytic = loss_gradient(policy, [&](ad::Tape& tape, const ParamVars& vars) {
    return dcpo_batch_objective(tape, vars, reference, ptrs, draws, schedule, config);
  });
  const GradientVector numeric = finite_difference_gradient(policy, [&](const DenoiserParams& p) {
    return dcpo_loss(p, reference, rec, schedule, draw.t, draw.eps_w, draw.eps_l, config).loss;
  });
  CHECK(max_relative_error(analytic, numeric) <= 1e-4);
}

TEST_CASE("output stays bounded for inputs of norm up to 10") {
  const DenoiserParams p = init_params(8, 4, 32, 12);
  const double lipschitz = spectral_norm(p.w3) * spectral_norm(p.w2) * spectral_norm(p.w1.leftCols(8));
  const double ceiling = p.w3.cwiseAbs().rowwise().sum().maxCoeff() + p.b3.cwiseAbs().maxCoeff();
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const SemanticVector z = unit_z(4, static_cast<std::uint64_t>(100 + i));
    const int t = i % 50;
    Eigen::VectorXd x = standard_normal(rng, 8);
    x *= uniform(rng, 0.0, 10.0) / x.norm();
    Eigen::VectorXd y = standard_normal(rng, 8);
    y *= uniform(rng, 0.0, 10.0) / y.norm();
    const Eigen::VectorXd fx = predict_eps(p, x, z, t, 50);
    const Eigen::VectorXd fy = predict_eps(p, y, z, t, 50);
    REQUIRE(fx.cwiseAbs().maxCoeff() <= ceiling + 1e-12);
    REQUIRE((fx - fy).norm() <= lipschitz * (x - y).norm() + 1e-12);
  }
}
