#include "ratelink/codecs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ratelink {

using Index = Eigen::Index;

std::string to_string(CodecKind kind) {
  switch (kind) {
    case CodecKind::identity: return "identity";
    case CodecKind::pca: return "pca";
    case CodecKind::ae: return "ae";
  }
  return "unknown";
}

CodecKind parse_codec_kind(const std::string& name) {
  if (name == "identity") return CodecKind::identity;
  if (name == "pca") return CodecKind::pca;
  if (name == "ae") return CodecKind::ae;
  throw ConfigurationError("unknown codec kind '" + name + "'");
}

void CodecDescriptor::validate() const {
  require(input_dim >= 1, "codec: input_dim must be >= 1");
  switch (kind) {
    case CodecKind::identity:
      require(latent_dim == input_dim, "codec: identity requires latent_dim == input_dim");
      break;
    case CodecKind::pca:
      require(latent_dim >= 1 && latent_dim <= input_dim,
              "codec: pca requires 1 <= latent_dim <= input_dim, got " +
                  std::to_string(latent_dim) + " for input_dim " + std::to_string(input_dim));
      break;
    case CodecKind::ae:
      require(latent_dim >= 1, "codec: ae requires latent_dim >= 1");
      break;
  }
}

// ---------------------------------------------------------------------------
// PCA

PcaCodec pca_fit(const Matrix& samples, Index d) {
  const Index n = samples.rows();
  const Index dim = samples.cols();
  require(dim >= 1, "pca_fit: samples have no columns");
  require(n > dim, "pca_fit: need more samples (" + std::to_string(n) + ") than dimensions (" +
                       std::to_string(dim) + ")");
  require(d >= 1 && d <= dim, "pca_fit: latent dimension must lie in [1, " +
                                  std::to_string(dim) + "], got " + std::to_string(d));
  PcaCodec c;
  c.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - c.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov = 0.5 * (cov + cov.transpose());
  SymEig eig = sym_eig(cov);
  c.spectrum = eig.values.cwiseMax(0.0);
  c.basis = eig.vectors.leftCols(d);
  return c;
}

Vector pca_encode(const PcaCodec& c, const Vector& y) {
  require(y.size() == c.mean.size(), "pca_encode: input has size " + std::to_string(y.size()) +
                                         ", codec expects " + std::to_string(c.mean.size()));
  return c.basis.transpose() * (y - c.mean);
}

Vector pca_decode(const PcaCodec& c, const Vector& z) {
  require(z.size() == c.basis.cols(), "pca_decode: latent has size " + std::to_string(z.size()) +
                                          ", codec expects " + std::to_string(c.basis.cols()));
  return c.basis * z + c.mean;
}

// ---------------------------------------------------------------------------
// Autoencoder

std::vector<Index> AeCodec::hidden() const {
  std::vector<Index> h;
  for (std::size_t i = 0; i + 1 < encoder.size(); ++i) h.push_back(encoder[i].weights.rows());
  return h;
}

std::size_t AeCodec::parameter_count() const {
  std::size_t n = 0;
  for (const auto* part : {&encoder, &decoder})
    for (const auto& l : *part) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

AeCodec ae_init(const CodecDescriptor& descriptor, RngStream& rng,
                const std::vector<Index>& hidden, double weight_scale) {
  require(descriptor.kind == CodecKind::ae, "ae_init: descriptor kind must be ae");
  descriptor.validate();
  for (Index h : hidden) require(h >= 1, "ae_init: hidden widths must be >= 1");

  auto make_layer = [&](Index in, Index out) {
    DenseLayer l;
    l.weights.resize(out, in);
    const double sd = weight_scale * std::sqrt(2.0 / static_cast<double>(in));
    for (Index i = 0; i < out; ++i)
      for (Index j = 0; j < in; ++j) l.weights(i, j) = sd * rng.normal();
    l.bias = Vector::Zero(out);
    return l;
  };

  std::vector<Index> widths;
  widths.push_back(descriptor.input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(descriptor.latent_dim);

  AeCodec c;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    c.encoder.push_back(make_layer(widths[i], widths[i + 1]));
  for (std::size_t i = widths.size() - 1; i > 0; --i)
    c.decoder.push_back(make_layer(widths[i], widths[i - 1]));
  c.input_mean = Vector::Zero(descriptor.input_dim);
  c.input_scale = Vector::Ones(descriptor.input_dim);
  return c;
}

namespace {

// Flattened view of encoder + decoder; `linear_after` marks layers with no
// ReLU (latent and output).
struct LayerRef {
  const DenseLayer* layer;
  bool relu;
};

std::vector<LayerRef> layer_chain(const AeCodec& c) {
  std::vector<LayerRef> chain;
  for (std::size_t i = 0; i < c.encoder.size(); ++i)
    chain.push_back({&c.encoder[i], i + 1 < c.encoder.size()});
  for (std::size_t i = 0; i < c.decoder.size(); ++i)
    chain.push_back({&c.decoder[i], i + 1 < c.decoder.size()});
  return chain;
}

Matrix standardize(const AeCodec& c, const Matrix& y) {
  return (y.colwise() - c.input_mean).array().colwise() / c.input_scale.array();
}

// Returns the output of every layer; outs[0] is the standardized input.
void forward_all(const AeCodec& c, const Matrix& y, std::vector<Matrix>& outs) {
  const auto chain = layer_chain(c);
  outs.resize(chain.size() + 1);
  outs[0] = standardize(c, y);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const DenseLayer& l = *chain[i].layer;
    outs[i + 1].resize(l.weights.rows(), outs[i].cols());
    outs[i + 1].noalias() = l.weights * outs[i];
    outs[i + 1].colwise() += l.bias;
    if (chain[i].relu) outs[i + 1] = outs[i + 1].cwiseMax(0.0);
  }
}

void check_input(const AeCodec& c, Index rows, const char* who) {
  require(rows == c.input_dim(), std::string(who) + ": input has size " + std::to_string(rows) +
                                     ", codec expects " + std::to_string(c.input_dim()));
}

}  // namespace

AeBatchOutput ae_forward_columns(const AeCodec& c, const Matrix& y) {
  check_input(c, y.rows(), "ae_forward");
  std::vector<Matrix> outs;
  forward_all(c, y, outs);
  AeBatchOutput out;
  out.z = outs[c.encoder.size()];
  out.y_hat = (outs.back().array().colwise() * c.input_scale.array()).matrix();
  out.y_hat.colwise() += c.input_mean;
  if (!out.y_hat.allFinite() || !out.z.allFinite())
    throw NumericalError("ae_forward: non-finite activation");
  return out;
}

AeOutput ae_forward(const AeCodec& c, const Vector& y) {
  AeBatchOutput b = ae_forward_columns(c, y);
  return {b.z.col(0), b.y_hat.col(0)};
}

double AeGradients::squared_norm() const {
  double acc = 0.0;
  for (const auto* part : {&encoder, &decoder})
    for (const auto& l : *part) acc += l.weights.squaredNorm() + l.bias.squaredNorm();
  return acc;
}

AeGradients ae_gradient_columns(const AeCodec& c, const Matrix& batch) {
  check_input(c, batch.rows(), "ae_gradient");
  require(batch.cols() >= 1, "ae_gradient: empty batch");
  const auto chain = layer_chain(c);
  std::vector<Matrix> outs;
  forward_all(c, batch, outs);

  const double inv_b = 1.0 / static_cast<double>(batch.cols());
  // ŷ − y = scale ⊙ (out − standardized input)
  const Matrix scaled_err =
      ((outs.back() - outs.front()).array().colwise() * c.input_scale.array()).matrix();

  AeGradients g;
  g.loss = scaled_err.squaredNorm() * inv_b;
  std::vector<DenseLayer> grads(chain.size());

  Matrix delta = (2.0 * inv_b) * (scaled_err.array().colwise() * c.input_scale.array()).matrix();
  for (std::size_t k = chain.size(); k-- > 0;) {
    grads[k].weights.noalias() = delta * outs[k].transpose();
    grads[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Matrix back = chain[k].layer->weights.transpose() * delta;
    if (chain[k - 1].relu) back = (outs[k].array() > 0.0).select(back, 0.0);
    delta = std::move(back);
  }
  g.encoder.assign(grads.begin(), grads.begin() + static_cast<long>(c.encoder.size()));
  g.decoder.assign(grads.begin() + static_cast<long>(c.encoder.size()), grads.end());
  return g;
}

AeGradients ae_gradient(const AeCodec& c, const Matrix& batch_rows) {
  return ae_gradient_columns(c, batch_rows.transpose());
}

double ae_mse_columns(const AeCodec& c, const Matrix& samples) {
  check_input(c, samples.rows(), "ae_mse");
  require(samples.cols() >= 1, "ae_mse: no samples");
  constexpr Index kChunk = 4096;
  std::vector<Matrix> outs;
  double acc = 0.0;
  for (Index start = 0; start < samples.cols(); start += kChunk) {
    const Index n = std::min(kChunk, samples.cols() - start);
    forward_all(c, samples.middleCols(start, n), outs);
    acc += ((outs.back() - outs.front()).array().colwise() * c.input_scale.array())
               .matrix()
               .squaredNorm();
  }
  return acc / static_cast<double>(samples.cols());
}

void TrainConfig::validate() const {
  require(batch_size >= 1, "train config: batch_size must be >= 1");
  require(epochs >= 0, "train config: epochs must be >= 0");
  require(learning_rate > 0.0, "train config: learning_rate must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "train config: betas must lie in [0, 1)");
  require(epsilon > 0.0, "train config: epsilon must be > 0");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "train config: validation_fraction must lie in (0, 1)");
  require(divergence_factor > 1.0, "train config: divergence_factor must be > 1");
}

namespace {

struct AdamSlot {
  Matrix m_w, v_w;
  Vector m_b, v_b;
};

void adam_step(DenseLayer& p, const DenseLayer& g, AdamSlot& s, const TrainConfig& cfg,
               double corr1, double corr2) {
  s.m_w = cfg.beta1 * s.m_w + (1.0 - cfg.beta1) * g.weights;
  s.v_w = cfg.beta2 * s.v_w + (1.0 - cfg.beta2) * g.weights.cwiseAbs2();
  s.m_b = cfg.beta1 * s.m_b + (1.0 - cfg.beta1) * g.bias;
  s.v_b = cfg.beta2 * s.v_b + (1.0 - cfg.beta2) * g.bias.cwiseAbs2();
  const double lr = cfg.learning_rate;
  p.weights.array() -= lr * (s.m_w.array() / corr1) /
                       ((s.v_w.array() / corr2).sqrt() + cfg.epsilon);
  p.bias.array() -= lr * (s.m_b.array() / corr1) / ((s.v_b.array() / corr2).sqrt() + cfg.epsilon);
}

bool all_finite(const AeCodec& c) {
  for (const auto* part : {&c.encoder, &c.decoder})
    for (const auto& l : *part)
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

}  // namespace

TrainResult ae_train(const CodecDescriptor& descriptor, const Matrix& dataset_rows,
                     const TrainConfig& cfg) {
  require(descriptor.kind == CodecKind::ae, "ae_train: descriptor kind must be ae");
  descriptor.validate();
  cfg.validate();
  require(dataset_rows.cols() == descriptor.input_dim,
          "ae_train: dataset has " + std::to_string(dataset_rows.cols()) +
              " columns, descriptor expects " + std::to_string(descriptor.input_dim));
  const Index n = dataset_rows.rows();
  require(n >= cfg.batch_size, "ae_train: dataset has fewer rows (" + std::to_string(n) +
                                   ") than batch_size (" + std::to_string(cfg.batch_size) + ")");

  RngStream split_rng = RngStream::derive(cfg.seed, 0);
  RngStream init_rng = RngStream::derive(cfg.seed, 1);
  RngStream shuffle_rng = RngStream::derive(cfg.seed, 2);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[split_rng.below(i + 1)]);

  const auto n_val = std::max<Index>(
      1, static_cast<Index>(std::llround(cfg.validation_fraction * static_cast<double>(n))));
  const Index n_train = n - n_val;
  require(n_train >= 1, "ae_train: no training rows left after validation split");

  Matrix train(descriptor.input_dim, n_train);
  Matrix val(descriptor.input_dim, n_val);
  for (Index i = 0; i < n_train; ++i)
    train.col(i) = dataset_rows.row(order[static_cast<std::size_t>(i)]).transpose();
  for (Index i = 0; i < n_val; ++i)
    val.col(i) = dataset_rows.row(order[static_cast<std::size_t>(n_train + i)]).transpose();

  TrainResult result;
  AeCodec codec = ae_init(descriptor, init_rng, cfg.hidden);
  codec.input_mean = train.rowwise().mean();
  Vector var = (train.colwise() - codec.input_mean).rowwise().squaredNorm() /
               static_cast<double>(n_train);
  codec.input_scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });

  TrainingCurve& curve = result.curve;
  curve.initial_validation_mse = ae_mse_columns(codec, val);
  double best = curve.initial_validation_mse;
  AeCodec best_codec = codec;

  std::vector<AdamSlot> enc_slots, dec_slots;
  auto zero_slots = [](const std::vector<DenseLayer>& layers, std::vector<AdamSlot>& slots) {
    for (const auto& l : layers) {
      slots.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()),
                       Matrix::Zero(l.weights.rows(), l.weights.cols()),
                       Vector::Zero(l.bias.size()), Vector::Zero(l.bias.size())});
    }
  };
  zero_slots(codec.encoder, enc_slots);
  zero_slots(codec.decoder, dec_slots);

  std::vector<Index> perm(static_cast<std::size_t>(n_train));
  std::iota(perm.begin(), perm.end(), Index{0});
  Matrix batch(descriptor.input_dim, cfg.batch_size);
  long long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[shuffle_rng.below(i + 1)]);

    double loss_sum = 0.0;
    Index seen = 0;
    for (Index start = 0; start < n_train; start += cfg.batch_size) {
      const Index b = std::min(cfg.batch_size, n_train - start);
      if (batch.cols() != b) batch.resize(Eigen::NoChange, b);
      for (Index j = 0; j < b; ++j) batch.col(j) = train.col(perm[static_cast<std::size_t>(start + j)]);
      const AeGradients g = ae_gradient_columns(codec, batch);
      ++step;
      const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < codec.encoder.size(); ++k)
        adam_step(codec.encoder[k], g.encoder[k], enc_slots[k], cfg, corr1, corr2);
      for (std::size_t k = 0; k < codec.decoder.size(); ++k)
        adam_step(codec.decoder[k], g.decoder[k], dec_slots[k], cfg, corr1, corr2);
      loss_sum += g.loss * static_cast<double>(b);
      seen += b;
    }
    if (batch.cols() != cfg.batch_size) batch.resize(Eigen::NoChange, cfg.batch_size);

    const double val_mse = all_finite(codec) ? ae_mse_columns(codec, val)
                                             : std::numeric_limits<double>::quiet_NaN();
    curve.train_mse.push_back(loss_sum / static_cast<double>(seen));
    curve.validation_mse.push_back(val_mse);
    if (!std::isfinite(val_mse) || val_mse > cfg.divergence_factor * curve.initial_validation_mse) {
      std::ostringstream os;
      os << "ae_train: diverged at epoch " << epoch << " (validation MSE " << val_mse
         << ", initial " << curve.initial_validation_mse << ", learning rate "
         << cfg.learning_rate << ")";
      throw TrainingDiverged(os.str());
    }
    if (val_mse < best) {
      best = val_mse;
      best_codec = codec;
      curve.best_epoch = epoch;
    }
  }
  result.codec = std::move(best_codec);
  return result;
}

// ---------------------------------------------------------------------------
// Dispatch

CodecKind Codec::kind() const {
  if (as_identity()) return CodecKind::identity;
  if (as_pca()) return CodecKind::pca;
  return CodecKind::ae;
}

CodecDescriptor Codec::descriptor() const {
  if (const auto* id = as_identity()) return {CodecKind::identity, id->dim, id->dim};
  if (const auto* p = as_pca()) return {CodecKind::pca, p->basis.rows(), p->basis.cols()};
  const auto* ae = as_ae();
  return {CodecKind::ae, ae->input_dim(), ae->latent_dim()};
}

Vector Codec::encode(const Vector& y) const {
  if (const auto* id = as_identity()) {
    require(y.size() == id->dim, "encode: input has size " + std::to_string(y.size()) +
                                     ", codec expects " + std::to_string(id->dim));
    return y;
  }
  if (const auto* p = as_pca()) return pca_encode(*p, y);
  return ae_forward(*as_ae(), y).z;
}

Vector Codec::decode(const Vector& z) const {
  if (const auto* id = as_identity()) {
    require(z.size() == id->dim, "decode: latent has size " + std::to_string(z.size()) +
                                     ", codec expects " + std::to_string(id->dim));
    return z;
  }
  if (const auto* p = as_pca()) return pca_decode(*p, z);
  const AeCodec& ae = *as_ae();
  require(z.size() == ae.latent_dim(), "decode: latent has size " + std::to_string(z.size()) +
                                           ", codec expects " + std::to_string(ae.latent_dim()));
  Matrix h = z;
  for (std::size_t i = 0; i < ae.decoder.size(); ++i) {
    Matrix next = ae.decoder[i].weights * h;
    next.colwise() += ae.decoder[i].bias;
    h = i + 1 < ae.decoder.size() ? Matrix(next.cwiseMax(0.0)) : next;
  }
  return (h.col(0).array() * ae.input_scale.array()).matrix() + ae.input_mean;
}

Matrix Codec::roundtrip_columns(const Matrix& y) const {
  if (const auto* id = as_identity()) {
    require(y.rows() == id->dim, "roundtrip: input has size " + std::to_string(y.rows()) +
                                     ", codec expects " + std::to_string(id->dim));
    return y;
  }
  if (const auto* p = as_pca()) {
    require(y.rows() == p->mean.size(), "roundtrip: input has size " + std::to_string(y.rows()) +
                                            ", codec expects " + std::to_string(p->mean.size()));
    const Matrix z = p->basis.transpose() * (y.colwise() - p->mean);
    Matrix out = p->basis * z;
    out.colwise() += p->mean;
    return out;
  }
  return ae_forward_columns(*as_ae(), y).y_hat;
}

Vector codec_roundtrip(const Codec& codec, const Vector& y) {
  return codec.roundtrip_columns(y).col(0);
}

double offline_mse(const Codec& codec, const Matrix& samples_rows) {
  require(samples_rows.rows() >= 1, "offline_mse: no samples");
  constexpr Index kChunk = 4096;
  double acc = 0.0;
  for (Index start = 0; start < samples_rows.rows(); start += kChunk) {
    const Index n = std::min(kChunk, samples_rows.rows() - start);
    const Matrix y = samples_rows.middleRows(start, n).transpose();
    acc += (codec.roundtrip_columns(y) - y).squaredNorm();
  }
  return acc / static_cast<double>(samples_rows.rows());
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using nlohmann::json;

json to_json_values(const Matrix& m) {
  json arr = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

json to_json_values(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

const json& field(const json& obj, const std::string& name, const std::string& path) {
  if (!obj.is_object()) throw CheckpointError("checkpoint: '" + path + "' is not an object");
  auto it = obj.find(name);
  if (it == obj.end())
    throw CheckpointError("checkpoint: missing field '" + (path.empty() ? name : path + "." + name) + "'");
  return *it;
}

std::string join(const std::string& path, const std::string& name) {
  return path.empty() ? name : path + "." + name;
}

Index read_count(const json& obj, const std::string& name, const std::string& path) {
  const json& v = field(obj, name, path);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw CheckpointError("checkpoint: field '" + join(path, name) +
                          "' must be a non-negative integer");
  return static_cast<Index>(v.get<long long>());
}

Vector read_values(const json& obj, const std::string& name, const std::string& path,
                   Index expected) {
  const json& v = field(obj, name, path);
  const std::string where = join(path, name);
  if (!v.is_array()) throw CheckpointError("checkpoint: field '" + where + "' must be an array");
  if (static_cast<Index>(v.size()) != expected)
    throw CheckpointError("checkpoint: field '" + where + "' has " + std::to_string(v.size()) +
                          " values, expected " + std::to_string(expected));
  Vector out(expected);
  for (Index i = 0; i < expected; ++i) {
    const json& e = v[static_cast<std::size_t>(i)];
    if (!e.is_number())
      throw CheckpointError("checkpoint: field '" + where + "' holds a non-numeric value");
    out(i) = e.get<double>();
  }
  return out;
}

Matrix read_matrix(const json& obj, const std::string& name, const std::string& path, Index rows,
                   Index cols) {
  const Vector flat = read_values(obj, name, path, rows * cols);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
  return m;
}

}  // namespace

void save_codec(const Codec& codec, const std::filesystem::path& path) {
  const CodecDescriptor d = codec.descriptor();
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["kind"] = to_string(d.kind);
  doc["input_dim"] = d.input_dim;
  doc["latent_dim"] = d.latent_dim;
  doc["input_mean"] = json::array();
  doc["input_scale"] = json::array();
  doc["encoder_layers"] = 0;
  doc["layers"] = json::array();
  if (const auto* ae = codec.as_ae()) {
    doc["input_mean"] = to_json_values(ae->input_mean);
    doc["input_scale"] = to_json_values(ae->input_scale);
    doc["encoder_layers"] = ae->encoder.size();
    for (const auto* part : {&ae->encoder, &ae->decoder}) {
      for (const auto& l : *part) {
        doc["layers"].push_back({{"rows", l.weights.rows()},
                                 {"cols", l.weights.cols()},
                                 {"weights", to_json_values(l.weights)},
                                 {"bias", to_json_values(l.bias)}});
      }
    }
  }
  if (const auto* p = codec.as_pca()) {
    doc["pca"] = {{"mean", to_json_values(p->mean)},
                  {"spectrum", to_json_values(p->spectrum)},
                  {"basis", to_json_values(p->basis)}};
  }
  std::ofstream out(path);
  if (!out) throw CheckpointError("checkpoint: cannot open '" + path.string() + "' for writing");
  out << doc.dump() << '\n';
  if (!out) throw CheckpointError("checkpoint: write failed for '" + path.string() + "'");
}

Codec load_codec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError("checkpoint: malformed document '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object()) throw CheckpointError("checkpoint: document is not an object");

  const json& version = field(doc, "format_version", "");
  if (!version.is_number_integer())
    throw CheckpointError("checkpoint: field 'format_version' must be an integer");
  if (version.get<int>() != kCheckpointFormatVersion)
    throw CheckpointError("checkpoint: incompatible format_version " +
                          std::to_string(version.get<int>()) + " (this build reads version " +
                          std::to_string(kCheckpointFormatVersion) + ")");

  const json& kind_field = field(doc, "kind", "");
  if (!kind_field.is_string()) throw CheckpointError("checkpoint: field 'kind' must be a string");
  CodecDescriptor d;
  try {
    d.kind = parse_codec_kind(kind_field.get<std::string>());
  } catch (const ConfigurationError& e) {
    throw CheckpointError(std::string("checkpoint: field 'kind': ") + e.what());
  }
  d.input_dim = read_count(doc, "input_dim", "");
  d.latent_dim = read_count(doc, "latent_dim", "");
  try {
    d.validate();
  } catch (const ConfigurationError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }

  switch (d.kind) {
    case CodecKind::identity:
      return Codec::identity(d.input_dim);
    case CodecKind::pca: {
      const json& p = field(doc, "pca", "");
      PcaCodec c;
      c.mean = read_values(p, "mean", "pca", d.input_dim);
      c.spectrum = read_values(p, "spectrum", "pca", d.input_dim);
      c.basis = read_matrix(p, "basis", "pca", d.input_dim, d.latent_dim);
      return c;
    }
    case CodecKind::ae: {
      AeCodec c;
      c.input_mean = read_values(doc, "input_mean", "", d.input_dim);
      c.input_scale = read_values(doc, "input_scale", "", d.input_dim);
      const Index n_enc = read_count(doc, "encoder_layers", "");
      const json& layers = field(doc, "layers", "");
      if (!layers.is_array() || static_cast<Index>(layers.size()) != 2 * n_enc || n_enc < 1)
        throw CheckpointError("checkpoint: field 'layers' must hold 2 * encoder_layers entries");
      Index expected_in = d.input_dim;
      for (Index k = 0; k < 2 * n_enc; ++k) {
        const std::string where = "layers[" + std::to_string(k) + "]";
        const json& lj = layers[static_cast<std::size_t>(k)];
        DenseLayer l;
        const Index rows = read_count(lj, "rows", where);
        const Index cols = read_count(lj, "cols", where);
        if (cols != expected_in)
          throw CheckpointError("checkpoint: field '" + where + ".cols' is " +
                                std::to_string(cols) + ", expected " +
                                std::to_string(expected_in));
        l.weights = read_matrix(lj, "weights", where, rows, cols);
        l.bias = read_values(lj, "bias", where, rows);
        expected_in = rows;
        (k < n_enc ? c.encoder : c.decoder).push_back(std::move(l));
      }
      if (c.latent_dim() != d.latent_dim || expected_in != d.input_dim)
        throw CheckpointError("checkpoint: layer chain does not match input_dim/latent_dim");
      return c;
    }
  }
  throw CheckpointError("checkpoint: unreachable kind");
}

}  // namespace ratelink
