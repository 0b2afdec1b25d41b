#pragma once

// Per-sensor compression F_comp / reconstruction F_rec: identity, PCA and a
// dense ReLU autoencoder trained on mean squared reconstruction error.
//
// Batched entry points take one sample per column; the public dataset-style
// entry points (pca_fit, ae_gradient, ae_train) take one sample per row.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ratelink/mathkernel.hpp"

namespace ratelink {

enum class CodecKind { identity, pca, ae };

std::string to_string(CodecKind kind);
CodecKind parse_codec_kind(const std::string& name);

struct CodecDescriptor {
  CodecKind kind = CodecKind::identity;
  Eigen::Index input_dim = 0;
  Eigen::Index latent_dim = 0;

  void validate() const;
};

struct IdentityCodec {
  Eigen::Index dim = 0;
};

struct PcaCodec {
  Vector mean;
  Matrix basis;     // N_y x d, orthonormal columns
  Vector spectrum;  // all N_y covariance eigenvalues, descending
};

PcaCodec pca_fit(const Matrix& samples, Eigen::Index d);
Vector pca_encode(const PcaCodec& c, const Vector& y);
Vector pca_decode(const PcaCodec& c, const Vector& z);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

/// Encoder ends in a linear latent layer, decoder in a linear output layer;
/// every other layer is followed by ReLU.
struct AeCodec {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  Vector input_mean;
  Vector input_scale;

  Eigen::Index input_dim() const { return encoder.front().weights.cols(); }
  Eigen::Index latent_dim() const { return encoder.back().weights.rows(); }
  std::vector<Eigen::Index> hidden() const;
  std::size_t parameter_count() const;
};

inline const std::vector<Eigen::Index> kDefaultHidden{512, 1024, 512};

/// Fan-in (He) normal initialization scaled by `weight_scale`; biases zero.
/// Standardization starts at mean 0, scale 1.
AeCodec ae_init(const CodecDescriptor& descriptor, RngStream& rng,
                const std::vector<Eigen::Index>& hidden = kDefaultHidden,
                double weight_scale = 1.0);

struct AeOutput {
  Vector z;
  Vector y_hat;
};

AeOutput ae_forward(const AeCodec& c, const Vector& y);

struct AeBatchOutput {
  Matrix z;      // latent_dim x B
  Matrix y_hat;  // input_dim x B
};

AeBatchOutput ae_forward_columns(const AeCodec& c, const Matrix& y);

/// Same layout as the codec: one gradient entry per weight and bias.
struct AeGradients {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  double loss = 0.0;  // mean over the batch of |ŷ − y|²

  double squared_norm() const;
};

/// Exact gradient of the batch-mean squared reconstruction error.
AeGradients ae_gradient(const AeCodec& c, const Matrix& batch_rows);
AeGradients ae_gradient_columns(const AeCodec& c, const Matrix& batch);

/// Mean over columns of |ŷ − y|², evaluated in chunks.
double ae_mse_columns(const AeCodec& c, const Matrix& samples);

struct TrainConfig {
  Eigen::Index batch_size = 256;
  int epochs = 100;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  std::vector<Eigen::Index> hidden = kDefaultHidden;
  /// Validation MSE above this multiple of the initial value aborts training.
  double divergence_factor = 10.0;

  void validate() const;
};

struct TrainingCurve {
  std::vector<double> train_mse;
  std::vector<double> validation_mse;
  double initial_validation_mse = 0.0;
  int best_epoch = 0;  // 0 = initialization
};

struct TrainResult {
  AeCodec codec;
  TrainingCurve curve;
};

class TrainingDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

TrainResult ae_train(const CodecDescriptor& descriptor, const Matrix& dataset_rows,
                     const TrainConfig& cfg);

/// Runtime dispatch over the three codec kinds.
class Codec {
 public:
  Codec(IdentityCodec c) : impl_(c) {}  // NOLINT(google-explicit-constructor)
  Codec(PcaCodec c) : impl_(std::move(c)) {}  // NOLINT(google-explicit-constructor)
  Codec(AeCodec c) : impl_(std::move(c)) {}  // NOLINT(google-explicit-constructor)

  static Codec identity(Eigen::Index dim) { return Codec(IdentityCodec{dim}); }

  CodecKind kind() const;
  CodecDescriptor descriptor() const;
  Eigen::Index input_dim() const { return descriptor().input_dim; }
  Eigen::Index latent_dim() const { return descriptor().latent_dim; }

  Vector encode(const Vector& y) const;
  Vector decode(const Vector& z) const;
  /// Columnwise F_rec(F_comp(y)).
  Matrix roundtrip_columns(const Matrix& y) const;

  const IdentityCodec* as_identity() const { return std::get_if<IdentityCodec>(&impl_); }
  const PcaCodec* as_pca() const { return std::get_if<PcaCodec>(&impl_); }
  const AeCodec* as_ae() const { return std::get_if<AeCodec>(&impl_); }

 private:
  std::variant<IdentityCodec, PcaCodec, AeCodec> impl_;
};

Vector codec_roundtrip(const Codec& codec, const Vector& y);

/// Mean over rows of |F_rec(F_comp(y)) − y|².
double offline_mse(const Codec& codec, const Matrix& samples_rows);

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_codec(const Codec& codec, const std::filesystem::path& path);
Codec load_codec(const std::filesystem::path& path);

}  // namespace ratelink
