#pragma once

// Linear-Gaussian plant x_{t+1} = A x_t + B u_t + v_t and linear sensors
// y = C x + w.

#include "ratelink/mathkernel.hpp"

namespace ratelink {

struct PlantModel {
  Matrix a;  // N_x x N_x
  Matrix b;  // N_x x N_u
  Matrix q;  // process-noise covariance
  double dt = 0.0;
  Matrix q_factor;  // square-root factor of q used for sampling

  Eigen::Index nx() const { return a.rows(); }
  Eigen::Index nu() const { return b.cols(); }
};

/// Validates shapes and that Q is symmetric PSD, then caches its factor.
PlantModel make_plant(Matrix a, Matrix b, Matrix q, double dt);

/// Planar double integrator: state (px, py, vx, vy), input (ax, ay), Q = I.
PlantModel make_double_integrator(double dt);

struct SensorModel {
  int id = 0;
  Matrix c;  // N_y x N_x
  Matrix r;  // N_y x N_y, positive definite
  Matrix r_factor;

  Eigen::Index ny() const { return c.rows(); }
};

SensorModel make_sensor(int id, Matrix c, Matrix r);

/// C drawn i.i.d. N(0, elem_variance) from `rng`; R = r_scale * I.
SensorModel make_random_sensor(int id, Eigen::Index n_y, Eigen::Index n_x, double elem_variance,
                               RngStream& rng, double r_scale = 1.0);

struct SystemState {
  int t = 0;
  Vector x;
};

Vector step(const PlantModel& plant, const Vector& x, const Vector& u, RngStream& rng, bool noisy);

/// Noiseless observations never touch `rng`.
Vector observe(const SensorModel& sensor, const Vector& x, RngStream& rng, bool noisy);

}  // namespace ratelink
