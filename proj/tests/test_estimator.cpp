#include <doctest.h>

#include <cmath>

#include "ratelink/estimator.hpp"

using namespace ratelink;

namespace {
Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
}  // namespace

TEST_CASE("kf_init") {
  const KalmanState s = kf_init(Vector::Zero(4), 1e-4 * Matrix::Identity(4, 4));
  CHECK(s.sigma.diagonal().isApproxToConstant(1e-4));
  CHECK(kf_init(Vector::Zero(2), Matrix::Zero(2, 2)).sigma.isZero());
  CHECK_THROWS_AS(kf_init(Vector::Zero(2), -Matrix::Identity(2, 2)), ConfigurationError);
}

TEST_CASE("kf_predict") {
  const PlantModel p = make_double_integrator(0.1);
  KalmanState s{Vector::Zero(4), Matrix::Zero(4, 4)};
  s.x_hat << 0, 0, 1, 1;
  const KalmanState n = kf_predict(p, s, Vector::Zero(2));
  Vector want(4);
  want << 0.1, 0.1, 1, 1;
  CHECK((n.x_hat - want).norm() < 1e-15);
  CHECK(max_abs(n.sigma - Matrix::Identity(4, 4)) < 1e-15);
  CHECK(kf_predict(p, n, Vector::Zero(2)).sigma.trace() > n.sigma.trace());

  const PlantModel still = make_plant(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 2), 1);
  KalmanState t{Vector::Ones(2), Matrix::Identity(2, 2)};
  const KalmanState u = kf_predict(still, t, Vector::Ones(1));
  CHECK(u.x_hat == t.x_hat);
  CHECK(u.sigma == t.sigma);
}

TEST_CASE("kf_update") {
  const SensorModel s = make_sensor(1, scalar(1), scalar(1));
  FusedObservation obs = fuse({s}, {Vector::Constant(1, 2.0)});
  const KalmanState post = kf_update({Vector::Zero(1), scalar(1)}, obs);
  CHECK(post.x_hat(0) == doctest::Approx(1.0));
  CHECK(post.sigma(0, 0) == doctest::Approx(0.5));

  Vector y(3);
  y << 0.3, -1.0, 2.5;
  const SensorModel exact = make_sensor(1, Matrix::Identity(3, 3), 1e-12 * Matrix::Identity(3, 3));
  const KalmanState e = kf_update({Vector::Zero(3), Matrix::Identity(3, 3)}, fuse({exact}, {y}));
  CHECK((e.x_hat - y).norm() < 1e-6);

  const SensorModel blind = make_sensor(1, Matrix::Zero(2, 3), Matrix::Identity(2, 2));
  KalmanState prior{y, 2.0 * Matrix::Identity(3, 3)};
  const KalmanState b = kf_update(prior, fuse({blind}, {Vector::Ones(2)}));
  CHECK((b.x_hat - prior.x_hat).norm() < 1e-15);
  CHECK(max_abs(b.sigma - prior.sigma) < 1e-15);
}

TEST_CASE("fused update equals sequential updates") {
  RngStream rng(17);
  const SensorModel s1 = make_random_sensor(1, 5, 4, 0.02, rng);
  const SensorModel s2 = make_random_sensor(2, 3, 4, 0.02, rng, 10.0);
  Vector y1(5), y2(3);
  fill_normal(rng, y1);
  fill_normal(rng, y2);
  const KalmanState prior{Vector::Zero(4), Matrix::Identity(4, 4)};
  const KalmanState joint = kf_update(prior, fuse({s1, s2}, {y1, y2}));
  const KalmanState seq = kf_update(kf_update(prior, fuse({s1}, {y1})), fuse({s2}, {y2}));
  const KalmanState rev = kf_update(prior, fuse({s2, s1}, {y2, y1}));
  CHECK((joint.x_hat - seq.x_hat).norm() < 1e-10);
  CHECK(max_abs(joint.sigma - seq.sigma) < 1e-10);
  CHECK((joint.x_hat - rev.x_hat).norm() < 1e-10);
  check_covariance(joint.sigma);
}

TEST_CASE("steady state covariance") {
  const PlantModel p = make_plant(scalar(1), scalar(0), scalar(1), 1);
  const Matrix s = steady_state_covariance(p, scalar(1), scalar(1));
  CHECK(std::abs(s(0, 0) - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-10);

  const PlantModel quiet = make_plant(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Zero(2, 2), 1);
  CHECK(max_abs(steady_state_covariance(quiet, Matrix::Identity(2, 2), 1e-12 * Matrix::Identity(2, 2))) <
        1e-10);

  // agrees with iterating the filter's covariance recursion
  const PlantModel di = make_double_integrator(0.1);
  RngStream rng(3);
  const SensorModel sen = make_random_sensor(1, 20, 4, 0.02, rng);
  const Matrix ss = steady_state_covariance(di, sen.c, sen.r);
  KalmanState k = kf_init(Vector::Zero(4), 1e-4 * Matrix::Identity(4, 4));
  const FusedObservation obs = fuse({sen}, {Vector::Zero(20)});
  for (int t = 0; t < 2000; ++t) k = kf_update(kf_predict(di, k, Vector::Zero(2)), obs);
  CHECK(max_abs(k.sigma - ss) < 1e-9);
}
