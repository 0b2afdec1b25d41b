#pragma once

// Infinite-horizon discrete LQR.

#include <vector>

#include "ratelink/mathkernel.hpp"

namespace ratelink {

struct LqrWeights {
  Matrix q_goal;
  Matrix r_goal;
  Vector x_desired;
};

LqrWeights make_weights(Matrix q_goal, Matrix r_goal, Vector x_desired);

struct LqrSolution {
  Matrix p;
  Matrix k;
  int iterations = 0;
  double residual = 0.0;  // max-norm of RHS(P) - P
};

/// Raised when value iteration does not settle; carries the tail of the
/// max-norm change history.
class DareError : public NumericalError {
 public:
  DareError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Value iteration P ← Q + Aᵀ P A − Aᵀ P B (R + Bᵀ P B)⁻¹ Bᵀ P A from P₀ = Q.
LqrSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q_goal,
                       const Matrix& r_goal, double tol = 1e-12, int max_iterations = 1000000);

/// One application of the Riccati map; used for residual checks.
Matrix riccati_map(const Matrix& a, const Matrix& b, const Matrix& q_goal, const Matrix& r_goal,
                   const Matrix& p);

/// u = −K (x̂ − x_desired).
Vector control(const LqrSolution& sol, const LqrWeights& weights, const Vector& x_hat);

/// x̃ᵀ Q_goal x̃ + uᵀ R_goal u on the true state deviation x̃ = x − x_desired.
double step_cost(const LqrWeights& weights, const Vector& x, const Vector& u);

}  // namespace ratelink
