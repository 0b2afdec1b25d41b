#include "ratelink/controller.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace ratelink {

LqrWeights make_weights(Matrix q_goal, Matrix r_goal, Vector x_desired) {
  require(q_goal.rows() == q_goal.cols() && q_goal.rows() == x_desired.size(),
          "lqr weights: Q_goal " + shape_of(q_goal) + " does not match x_desired of size " +
              std::to_string(x_desired.size()));
  require(r_goal.rows() == r_goal.cols(), "lqr weights: R_goal must be square");
  require(is_symmetric(q_goal, 1e-12) && is_symmetric(r_goal, 1e-12),
          "lqr weights: Q_goal and R_goal must be symmetric");
  try {
    cholesky_psd(q_goal);
    cholesky(r_goal);
  } catch (const NotPositiveDefinite&) {
    throw ConfigurationError("lqr weights: Q_goal must be PSD and R_goal PD");
  }
  return {std::move(q_goal), std::move(r_goal), std::move(x_desired)};
}

Matrix riccati_map(const Matrix& a, const Matrix& b, const Matrix& q_goal, const Matrix& r_goal,
                   const Matrix& p) {
  const Matrix bt_p = b.transpose() * p;
  const Matrix gain_rhs = bt_p * a;
  const Matrix next = q_goal + a.transpose() * p * a -
                      gain_rhs.transpose() * solve_spd(r_goal + bt_p * b, gain_rhs);
  return 0.5 * (next + next.transpose());
}

LqrSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q_goal,
                       const Matrix& r_goal, double tol, int max_iterations) {
  const auto n = a.rows();
  require(a.cols() == n, "solve_dare: A must be square, got " + shape_of(a));
  require(b.rows() == n, "solve_dare: B " + shape_of(b) + " does not match A " + shape_of(a));
  require(q_goal.rows() == n && q_goal.cols() == n, "solve_dare: Q_goal has wrong shape");
  require(r_goal.rows() == b.cols() && r_goal.cols() == b.cols(),
          "solve_dare: R_goal has wrong shape");

  Matrix p = q_goal;
  std::deque<double> tail;
  int it = 0;
  for (;;) {
    if (it == max_iterations) {
      std::ostringstream os;
      os << "solve_dare: unstabilizable or ill-conditioned system, no convergence after " << it
         << " iterations (last change " << (tail.empty() ? 0.0 : tail.back()) << ")";
      throw DareError(os.str(), {tail.begin(), tail.end()});
    }
    Matrix next = riccati_map(a, b, q_goal, r_goal, p);
    const double change = max_abs(next - p);
    ++it;
    p = std::move(next);
    if (!std::isfinite(change)) {
      throw DareError("solve_dare: iterate became non-finite after " + std::to_string(it) +
                          " iterations",
                      {tail.begin(), tail.end()});
    }
    tail.push_back(change);
    if (tail.size() > 16) tail.pop_front();
    if (change < tol) break;
  }

  LqrSolution sol;
  const Matrix bt_p = b.transpose() * p;
  sol.k = solve_spd(r_goal + bt_p * b, bt_p * a);
  sol.p = std::move(p);
  sol.iterations = it;
  sol.residual = max_abs(riccati_map(a, b, q_goal, r_goal, sol.p) - sol.p);
  return sol;
}

Vector control(const LqrSolution& sol, const LqrWeights& weights, const Vector& x_hat) {
  require(x_hat.size() == sol.k.cols() && weights.x_desired.size() == x_hat.size(),
          "control: estimate of size " + std::to_string(x_hat.size()) +
              " does not match gain " + shape_of(sol.k));
  return -(sol.k * (x_hat - weights.x_desired));
}

double step_cost(const LqrWeights& weights, const Vector& x, const Vector& u) {
  require(x.size() == weights.q_goal.rows() && u.size() == weights.r_goal.rows(),
          "step_cost: dimension mismatch");
  const Vector dev = x - weights.x_desired;
  return dev.dot(weights.q_goal * dev) + u.dot(weights.r_goal * u);
}

}  // namespace ratelink
