#include "ratelink/estimator.hpp"

namespace ratelink {

FusedObservation fuse(const std::vector<SensorModel>& sensors, const std::vector<Vector>& y) {
  require(!sensors.empty(), "fuse: no sensors");
  require(y.empty() || y.size() == sensors.size(),
          "fuse: " + std::to_string(y.size()) + " observations for " +
              std::to_string(sensors.size()) + " sensors");
  const Eigen::Index nx = sensors.front().c.cols();
  Eigen::Index total = 0;
  for (const auto& s : sensors) {
    require(s.c.cols() == nx, "fuse: sensors disagree on state dimension");
    total += s.ny();
  }
  FusedObservation out;
  out.c_stack.resize(total, nx);
  out.r_stack = Matrix::Zero(total, total);
  if (!y.empty()) out.y_stack.resize(total);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto& s = sensors[i];
    const Eigen::Index n = s.ny();
    out.c_stack.middleRows(row, n) = s.c;
    out.r_stack.block(row, row, n, n) = s.r;
    if (!y.empty()) {
      require(y[i].size() == n, "fuse: observation " + std::to_string(i) + " has size " +
                                    std::to_string(y[i].size()) + ", expected " +
                                    std::to_string(n));
      out.y_stack.segment(row, n) = y[i];
    }
    row += n;
  }
  return out;
}

void check_covariance(const Matrix& sigma, double tol) {
  if (!is_symmetric(sigma, tol)) throw NumericalError("covariance is not symmetric");
  const SymEig eig = sym_eig(0.5 * (sigma + sigma.transpose()));
  if (eig.values.size() > 0 && eig.values(eig.values.size() - 1) < -tol)
    throw NumericalError("covariance is not positive semidefinite");
}

KalmanState kf_init(const Vector& x0, const Matrix& sigma0) {
  require(sigma0.rows() == x0.size() && sigma0.cols() == x0.size(),
          "kf_init: covariance " + shape_of(sigma0) + " does not match state of size " +
              std::to_string(x0.size()));
  try {
    check_covariance(sigma0);
  } catch (const NumericalError& e) {
    throw ConfigurationError(std::string("kf_init: ") + e.what());
  }
  return {x0, sigma0};
}

KalmanState kf_predict(const PlantModel& plant, const KalmanState& s, const Vector& u) {
  require(s.x_hat.size() == plant.nx() && u.size() == plant.nu(),
          "kf_predict: dimension mismatch");
  KalmanState out;
  out.x_hat = plant.a * s.x_hat + plant.b * u;
  const Matrix sigma = plant.a * s.sigma * plant.a.transpose() + plant.q;
  out.sigma = 0.5 * (sigma + sigma.transpose());
  return out;
}

CovarianceUpdate kf_covariance_update(const Matrix& sigma_prior, const Matrix& c,
                                      const Matrix& r) {
  require(c.cols() == sigma_prior.rows(), "kf_update: C " + shape_of(c) +
                                              " does not match covariance " +
                                              shape_of(sigma_prior));
  require(r.rows() == c.rows() && r.cols() == c.rows(), "kf_update: R has wrong shape");
  const Matrix sc_t = sigma_prior * c.transpose();
  Matrix innovation = c * sc_t + r;
  innovation = 0.5 * (innovation + innovation.transpose());
  CovarianceUpdate out;
  try {
    // G = Σ Cᵀ S⁻¹, computed as (S⁻¹ C Σ)ᵀ.
    out.gain = solve_spd(innovation, sc_t.transpose()).transpose();
  } catch (const NotPositiveDefinite&) {
    throw NumericalError("kf_update: innovation covariance not positive definite");
  }
  const auto n = sigma_prior.rows();
  const Matrix sigma = (Matrix::Identity(n, n) - out.gain * c) * sigma_prior;
  out.sigma = 0.5 * (sigma + sigma.transpose());
  return out;
}

KalmanState kf_update(const KalmanState& s, const FusedObservation& obs) {
  require(obs.y_stack.size() == obs.c_stack.rows(), "kf_update: observation size mismatch");
  const CovarianceUpdate cu = kf_covariance_update(s.sigma, obs.c_stack, obs.r_stack);
  KalmanState out;
  out.x_hat = s.x_hat + cu.gain * (obs.y_stack - obs.c_stack * s.x_hat);
  out.sigma = cu.sigma;
#ifndef NDEBUG
  check_covariance(out.sigma, 1e-8);
#endif
  return out;
}

Matrix steady_state_covariance(const PlantModel& plant, const Matrix& c_stack,
                               const Matrix& r_stack, double tol, int max_iterations) {
  Matrix sigma = Matrix::Zero(plant.nx(), plant.nx());
  for (int it = 0; it < max_iterations; ++it) {
    Matrix prior = plant.a * sigma * plant.a.transpose() + plant.q;
    prior = 0.5 * (prior + prior.transpose());
    Matrix next = kf_covariance_update(prior, c_stack, r_stack).sigma;
    const double change = max_abs(next - sigma);
    sigma = std::move(next);
    if (change < tol) return sigma;
  }
  throw NumericalError("steady_state_covariance: no convergence after " +
                       std::to_string(max_iterations) + " iterations");
}

}  // namespace ratelink
