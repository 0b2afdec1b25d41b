#pragma once

// Fusion-center Kalman filter over vertically stacked sensor observations.

#include <vector>

#include "ratelink/mathkernel.hpp"
#include "ratelink/plant.hpp"

namespace ratelink {

struct KalmanState {
  Vector x_hat;
  Matrix sigma;
};

struct FusedObservation {
  Matrix c_stack;  // sensors stacked in list order
  Matrix r_stack;  // block diagonal
  Vector y_stack;
};

/// Stacks the sensor models; `y` holds one (reconstructed) observation per
/// sensor in the same order. Pass an empty `y` to build the model part only.
FusedObservation fuse(const std::vector<SensorModel>& sensors, const std::vector<Vector>& y);

KalmanState kf_init(const Vector& x0, const Matrix& sigma0);

KalmanState kf_predict(const PlantModel& plant, const KalmanState& s, const Vector& u);

/// Covariance half of the measurement update, shared by the single-state and
/// batched filters since it does not depend on the observed values.
struct CovarianceUpdate {
  Matrix gain;   // N_x x N_y
  Matrix sigma;  // posterior
};

CovarianceUpdate kf_covariance_update(const Matrix& sigma_prior, const Matrix& c,
                                      const Matrix& r);

KalmanState kf_update(const KalmanState& s, const FusedObservation& obs);

/// Fixed point of the posterior covariance recursion, iterated from Σ = 0
/// until successive iterates differ by less than `tol` in max-norm.
Matrix steady_state_covariance(const PlantModel& plant, const Matrix& c_stack,
                               const Matrix& r_stack, double tol = 1e-12,
                               int max_iterations = 1000000);

/// Throws NumericalError unless `sigma` is symmetric PSD (eigenvalues ≥ −tol).
void check_covariance(const Matrix& sigma, double tol = 1e-10);

}  // namespace ratelink
