#include <doctest.h>

#include "ratelink/plant.hpp"

using namespace ratelink;

TEST_CASE("double integrator matrices") {
  const PlantModel p = make_double_integrator(0.1);
  CHECK(p.nx() == 4);
  CHECK(p.nu() == 2);
  CHECK(p.a(0, 2) == doctest::Approx(0.1));
  CHECK(p.a(1, 3) == doctest::Approx(0.1));
  CHECK(p.b(0, 0) == doctest::Approx(0.005));
  CHECK(p.b(2, 0) == doctest::Approx(0.1));
  CHECK(p.q == Matrix::Identity(4, 4));

  const PlantModel z = make_double_integrator(0.0);
  CHECK(z.a == Matrix::Identity(4, 4));
  CHECK(z.b.topRows(2).isZero());

  Matrix b1(4, 2);
  b1 << 0.5, 0, 0, 0.5, 1, 0, 0, 1;
  CHECK(make_double_integrator(1.0).b == b1);

  CHECK_THROWS_AS(make_double_integrator(-0.1), ConfigurationError);
}

TEST_CASE("make_plant validation") {
  CHECK_THROWS_AS(make_plant(Matrix::Identity(2, 3), Matrix::Zero(2, 1), Matrix::Identity(2, 2), 1),
                  ConfigurationError);
  CHECK_THROWS_AS(make_plant(Matrix::Identity(2, 2), Matrix::Zero(3, 1), Matrix::Identity(2, 2), 1),
                  ConfigurationError);
  CHECK_THROWS(make_plant(Matrix::Identity(2, 2), Matrix::Zero(2, 1), -Matrix::Identity(2, 2), 1));
}

TEST_CASE("random sensor") {
  RngStream r0(9);
  CHECK(make_random_sensor(1, 20, 4, 0.0, r0).c.isZero());

  RngStream r1(9), r2(9);
  const SensorModel s = make_random_sensor(1, 20, 4, 1.0 / 50.0, r1);
  CHECK(s.c == make_random_sensor(1, 20, 4, 1.0 / 50.0, r2).c);
  CHECK(s.ny() == 20);
  CHECK(s.r == Matrix::Identity(20, 20));
  const double mean = s.c.mean();
  const double var = (s.c.array() - mean).square().sum() / 79.0;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 0.02) < 0.3 * 0.02);

  RngStream r3(9);
  CHECK(make_random_sensor(2, 3, 4, 0.02, r3, 10.0).r == 10.0 * Matrix::Identity(3, 3));
}

TEST_CASE("step") {
  const PlantModel p = make_double_integrator(0.1);
  RngStream rng(1);
  Vector x(4), want(4);
  x << 1, 2, 0.5, -0.5;
  want << 1.05, 1.95, 0.5, -0.5;
  CHECK((step(p, x, Vector::Zero(2), rng, false) - want).norm() < 1e-15);
  CHECK(rng.draws() == 0);

  Vector u(2), want_u(4);
  u << 1, 0;
  want_u << 0.005, 0, 0.1, 0;
  CHECK((step(p, Vector::Zero(4), u, rng, false) - want_u).norm() < 1e-15);

  const PlantModel quiet = make_plant(p.a, p.b, Matrix::Zero(4, 4), 0.1);
  CHECK(step(quiet, x, u, rng, true) == step(quiet, x, u, rng, false));

  CHECK_THROWS_AS(step(p, Vector::Zero(3), u, rng, false), ConfigurationError);
}

TEST_CASE("observe") {
  RngStream rng(4);
  const SensorModel eye = make_sensor(1, Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  Vector x(4);
  x << 1, -1, 2, 0.25;
  CHECK(observe(eye, x, rng, false) == x);
  CHECK(observe(eye, Vector::Zero(4), rng, false).isZero());
  CHECK(rng.draws() == 0);

  Matrix r(3, 3);
  r << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  RngStream crng(2);
  const SensorModel s = make_random_sensor(1, 3, 4, 0.02, crng);
  const SensorModel noisy = make_sensor(1, s.c, r);
  const int n = 100000;
  Matrix acc = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Vector e = observe(noisy, x, rng, true) - noisy.c * x;
    acc += e * e.transpose();
  }
  acc /= n;
  CHECK((acc - r).norm() < 0.05 * r.norm());

  CHECK_THROWS_AS(make_sensor(1, Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), std::exception);
}
