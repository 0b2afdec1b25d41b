#include "ratelink/plant.hpp"

#include <cmath>

namespace ratelink {

PlantModel make_plant(Matrix a, Matrix b, Matrix q, double dt) {
  require(a.rows() == a.cols(), "plant: A must be square, got " + shape_of(a));
  require(b.rows() == a.rows(), "plant: B has " + std::to_string(b.rows()) +
                                    " rows, expected " + std::to_string(a.rows()));
  require(q.rows() == a.rows() && q.cols() == a.rows(),
          "plant: Q is " + shape_of(q) + ", expected " + shape_of(a));
  require(a.allFinite() && b.allFinite() && q.allFinite(), "plant: non-finite entry");
  require(is_symmetric(q, 1e-12), "plant: Q must be symmetric");
  try {
    cholesky(q + 1e-12 * Matrix::Identity(q.rows(), q.cols()));
  } catch (const NotPositiveDefinite&) {
    throw ConfigurationError("plant: Q must be positive semidefinite");
  }
  PlantModel p;
  p.q_factor = cholesky_psd(q);
  p.a = std::move(a);
  p.b = std::move(b);
  p.q = std::move(q);
  p.dt = dt;
  return p;
}

PlantModel make_double_integrator(double dt) {
  require(dt >= 0.0 && std::isfinite(dt), "double integrator: dt must be >= 0");
  Matrix a = Matrix::Identity(4, 4);
  a(0, 2) = dt;
  a(1, 3) = dt;
  Matrix b = Matrix::Zero(4, 2);
  b(0, 0) = 0.5 * dt * dt;
  b(1, 1) = 0.5 * dt * dt;
  b(2, 0) = dt;
  b(3, 1) = dt;
  return make_plant(std::move(a), std::move(b), Matrix::Identity(4, 4), dt);
}

SensorModel make_sensor(int id, Matrix c, Matrix r) {
  require(r.rows() == c.rows() && r.cols() == c.rows(),
          "sensor: R is " + shape_of(r) + " but C has " + std::to_string(c.rows()) + " rows");
  require(c.allFinite() && r.allFinite(), "sensor: non-finite entry");
  SensorModel s;
  s.id = id;
  try {
    s.r_factor = cholesky(r);
  } catch (const NotPositiveDefinite&) {
    throw ConfigurationError("sensor " + std::to_string(id) + ": R must be positive definite");
  }
  s.c = std::move(c);
  s.r = std::move(r);
  return s;
}

SensorModel make_random_sensor(int id, Eigen::Index n_y, Eigen::Index n_x, double elem_variance,
                               RngStream& rng, double r_scale) {
  require(n_y >= 1 && n_x >= 1, "random sensor: dimensions must be >= 1");
  require(elem_variance >= 0.0, "random sensor: element variance must be >= 0");
  const double sd = std::sqrt(elem_variance);
  Matrix c(n_y, n_x);
  // Row-major draw order so C does not depend on storage layout.
  for (Eigen::Index i = 0; i < n_y; ++i)
    for (Eigen::Index j = 0; j < n_x; ++j) c(i, j) = sd * rng.normal();
  return make_sensor(id, std::move(c), r_scale * Matrix::Identity(n_y, n_y));
}

Vector step(const PlantModel& plant, const Vector& x, const Vector& u, RngStream& rng, bool noisy) {
  require(x.size() == plant.nx(), "step: state has size " + std::to_string(x.size()) +
                                      ", expected " + std::to_string(plant.nx()));
  require(u.size() == plant.nu(), "step: input has size " + std::to_string(u.size()) +
                                      ", expected " + std::to_string(plant.nu()));
  Vector next = plant.a * x + plant.b * u;
  if (noisy) next = gaussian(rng, next, plant.q_factor);
  return next;
}

Vector observe(const SensorModel& sensor, const Vector& x, RngStream& rng, bool noisy) {
  require(x.size() == sensor.c.cols(), "observe: state has size " + std::to_string(x.size()) +
                                           ", sensor expects " + std::to_string(sensor.c.cols()));
  Vector y = sensor.c * x;
  if (noisy) y = gaussian(rng, y, sensor.r_factor);
  return y;
}

}  // namespace ratelink
