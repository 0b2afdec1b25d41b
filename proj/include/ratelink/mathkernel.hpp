#pragma once

// Dense linear algebra and seeded Gaussian sampling shared by every module.
//
// Storage is Eigen's dynamic double matrix; the decompositions below are
// implemented here so that their numerical behaviour is fixed and testable
// independently of Eigen's solvers.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ratelink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Inconsistent matrix/vector shapes or an invalid configuration value.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative routine failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite() : NumericalError("matrix not positive definite") {}
  explicit NotPositiveDefinite(const std::string& what) : NumericalError(what) {}
};

/// Throws ConfigurationError with `what` when `cond` is false.
inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigurationError(what);
}

std::string shape_of(const Matrix& m);

Matrix mat_mul(const Matrix& a, const Matrix& b);

/// Lower-triangular L with L Lᵀ = spd. Throws NotPositiveDefinite on a
/// non-positive pivot.
Matrix cholesky(const Matrix& spd);

/// Square-root factor of a positive semidefinite matrix. Pivots that vanish
/// (relative to the diagonal scale) produce zero columns instead of an error,
/// so a zero covariance gives a zero factor.
Matrix cholesky_psd(const Matrix& psd, double rel_tol = 1e-12);

struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
SymEig sym_eig(const Matrix& s, int max_sweeps = 100);

/// Solves spd · X = rhs through the Cholesky factor.
Matrix solve_spd(const Matrix& spd, const Matrix& rhs);

bool is_symmetric(const Matrix& m, double tol);
double max_abs(const Matrix& m);
double rel_frobenius_error(const Matrix& approx, const Matrix& exact);

/// Seeded random stream: mt19937_64 for raw bits, uniform doubles from the
/// top 53 bits, standard normals from the Box-Muller transform. Every piece
/// is fully specified so sequences replay bit-exactly across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Independent stream for (root seed, stream id).
  static RngStream derive(std::uint64_t root_seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  /// Number of raw 64-bit words consumed so far.
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  /// Uniform in (0, 1].
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer, used for seed derivation and content hashing.
std::uint64_t mix64(std::uint64_t x);

/// mean + L ξ with ξ i.i.d. standard normals drawn from `rng`.
Vector gaussian(RngStream& rng, const Vector& mean, const Matrix& cov_cholesky);

/// Fills `out` with i.i.d. standard normals, column by column.
void fill_normal(RngStream& rng, Eigen::Ref<Matrix> out);

}  // namespace ratelink
