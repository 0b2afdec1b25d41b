#include "ratelink/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "ratelink/config.hpp"

namespace ratelink {

using Index = Eigen::Index;
using nlohmann::json;

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::compression_dim: return "compression_dim";
    case SweepAxis::observation_dim: return "observation_dim";
    case SweepAxis::allocation_pair: return "allocation_pair";
    case SweepAxis::total_budget: return "total_budget";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "compression_dim") return SweepAxis::compression_dim;
  if (name == "observation_dim") return SweepAxis::observation_dim;
  if (name == "allocation_pair") return SweepAxis::allocation_pair;
  if (name == "total_budget") return SweepAxis::total_budget;
  throw ConfigurationError("unknown sweep axis '" + name + "'");
}

std::string Method::label() const {
  switch (kind) {
    case MethodKind::ae_online: return "ae_online";
    case MethodKind::ae_offline: return "ae_offline";
    case MethodKind::pca_online: return "pca_online";
    case MethodKind::pca_offline: return "pca_offline";
    case MethodKind::uc: return "uc";
    case MethodKind::uc_fixed: return "uc_fixed(" + std::to_string(fixed_obs) + ")";
  }
  return "unknown";
}

CodecKind Method::codec_kind() const {
  switch (kind) {
    case MethodKind::ae_online:
    case MethodKind::ae_offline: return CodecKind::ae;
    case MethodKind::pca_online:
    case MethodKind::pca_offline: return CodecKind::pca;
    default: return CodecKind::identity;
  }
}

Method parse_method(const std::string& label) {
  if (label == "ae_online") return {MethodKind::ae_online};
  if (label == "ae_offline") return {MethodKind::ae_offline};
  if (label == "pca_online") return {MethodKind::pca_online};
  if (label == "pca_offline") return {MethodKind::pca_offline};
  if (label == "uc") return {MethodKind::uc};
  const std::string prefix = "uc_fixed(";
  if (label.rfind(prefix, 0) == 0 && label.back() == ')') {
    const std::string inner = label.substr(prefix.size(), label.size() - prefix.size() - 1);
    try {
      std::size_t used = 0;
      const long v = std::stol(inner, &used);
      if (used == inner.size() && v >= 1) return {MethodKind::uc_fixed, static_cast<Index>(v)};
    } catch (const std::exception&) {
    }
  }
  throw ConfigurationError("unknown method '" + label + "'");
}

std::vector<std::vector<Index>> allocation_pairs(Index budget) {
  require(budget >= 2, "allocation: budget must be >= 2 for two sensors");
  std::vector<std::vector<Index>> pairs;
  for (Index d1 = 1; d1 < budget; ++d1) pairs.push_back({d1, budget - d1});
  return pairs;
}

std::string axis_value_label(const std::vector<Index>& value) {
  std::string out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(value[i]);
  }
  return out;
}

void SweepSpec::validate() const {
  // the budget applies to the allocations below, not to the uncompressed base
  ScenarioConfig plain = base;
  plain.codecs.clear();
  plain.budget.reset();
  plain.validate();
  require(!values.empty(), "sweep '" + id + "': values must be non-empty");
  require(!methods.empty(), "sweep '" + id + "': methods must be non-empty");
  const bool two_sensor = axis == SweepAxis::allocation_pair || axis == SweepAxis::total_budget;
  if (two_sensor) {
    require(base.sensors.size() == 2, "sweep '" + id + "': allocation sweeps need two sensors");
  } else {
    require(base.sensors.size() == 1, "sweep '" + id + "': this axis needs a single sensor");
  }
  for (const auto& v : values) {
    if (axis == SweepAxis::allocation_pair) {
      require(v.size() == 2 && v[0] >= 1 && v[1] >= 1,
              "sweep '" + id + "': allocation values must be pairs of positive dims");
      if (base.budget)
        require(v[0] + v[1] == *base.budget,
                "sweep '" + id + "': allocation " + axis_value_label(v) +
                    " does not use the budget " + std::to_string(*base.budget));
      for (std::size_t s = 0; s < 2; ++s)
        require(v[s] <= base.sensors[s].obs_dim,
                "sweep '" + id + "': allocation exceeds the observation dimension");
    } else {
      require(v.size() == 1 && v[0] >= 1, "sweep '" + id + "': values must be positive integers");
      if (axis == SweepAxis::total_budget) require(v[0] >= 2, "sweep: budgets must be >= 2");
      if (axis == SweepAxis::compression_dim)
        require(v[0] <= base.sensors[0].obs_dim,
                "sweep '" + id + "': compression dim exceeds the observation dimension");
    }
  }
  if (axis == SweepAxis::observation_dim) require(latent_dim >= 1, "sweep: latent_dim must be >= 1");
  if (two_sensor)
    for (const auto& m : methods)
      require(m.online() || m.offline(),
              "sweep '" + id + "': allocation sweeps take codec methods only");
}

const SweepCell* SweepResult::find(const std::string& axis_value, const std::string& method) const {
  for (const auto& c : cells)
    if (c.axis_value == axis_value && c.method == method) return &c;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Hashing and the codec cache

namespace {

std::string hex_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  h = mix64(h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json data_json(const ScenarioConfig& cfg) {
  json j = scenario_to_json(cfg);
  for (const char* k : {"name", "codecs", "rounds", "train_rounds", "mode", "budget", "training"})
    j.erase(k);
  return j;
}

}  // namespace

std::string scenario_data_key(const ScenarioConfig& cfg) { return hex_digest(data_json(cfg).dump()); }

CodecCache::CodecCache(std::filesystem::path directory, bool allow_training)
    : directory_(std::move(directory)), allow_training_(allow_training) {
  if (!directory_.empty()) std::filesystem::create_directories(directory_);
}

std::string CodecCache::codec_key(const ScenarioConfig& cfg, std::size_t sensor, CodecKind kind,
                                  Index latent_dim) const {
  json j;
  j["data"] = data_json(cfg);
  j["train_rounds"] = cfg.train_rounds;
  j["sensor"] = sensor;
  j["kind"] = to_string(kind);
  j["latent_dim"] = latent_dim;
  if (kind == CodecKind::ae) j["training"] = train_config_to_json(cfg.training);
  return hex_digest(j.dump());
}

std::shared_ptr<const Dataset> CodecCache::dataset(const ScenarioConfig& cfg, bool test) {
  const std::string key = scenario_data_key(cfg) + (test ? "-test-" : "-train-") +
                          std::to_string(test ? cfg.rounds : cfg.train_rounds);
  std::promise<std::shared_ptr<const Dataset>> promise;
  std::shared_future<std::shared_ptr<const Dataset>> fut;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = datasets_.find(key);
    if (it != datasets_.end()) {
      fut = it->second;
    } else {
      fut = promise.get_future().share();
      datasets_.emplace(key, fut);
      owner = true;
    }
  }
  if (owner) {
    try {
      const System sys = build_system(cfg);
      promise.set_value(std::make_shared<const Dataset>(
          collect_dataset(sys, cfg, test ? kTestStreamBase : kTrainStreamBase,
                          test ? cfg.rounds : cfg.train_rounds)));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return fut.get();
}

std::shared_ptr<const Dataset> CodecCache::training_data(const ScenarioConfig& cfg) {
  return dataset(cfg, false);
}

std::shared_ptr<const Dataset> CodecCache::test_data(const ScenarioConfig& cfg) {
  return dataset(cfg, true);
}

Codec CodecCache::get(const ScenarioConfig& cfg, std::size_t sensor, CodecKind kind,
                      Index latent_dim) {
  require(sensor < cfg.sensors.size(), "codec cache: sensor index out of range");
  const Index obs = cfg.sensors[sensor].obs_dim;
  if (kind == CodecKind::identity) return Codec::identity(obs);
  CodecDescriptor{kind, obs, latent_dim}.validate();

  const std::string key = codec_key(cfg, sensor, kind, latent_dim);
  std::promise<Codec> promise;
  std::shared_future<Codec> fut;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = codecs_.find(key);
    if (it != codecs_.end()) {
      fut = it->second;
    } else {
      fut = promise.get_future().share();
      codecs_.emplace(key, fut);
      owner = true;
    }
  }
  if (!owner) return fut.get();

  try {
    if (kind == CodecKind::pca) {
      promise.set_value(pca_fit(training_data(cfg)->per_sensor[sensor], latent_dim));
    } else {
      const std::filesystem::path file =
          directory_.empty() ? std::filesystem::path{} : directory_ / ("ae-" + key + ".json");
      if (!file.empty() && std::filesystem::exists(file)) {
        promise.set_value(load_codec(file));
        std::lock_guard<std::mutex> lock(mutex_);
        ++loaded_;
      } else {
        if (!allow_training_)
          throw ConfigurationError("codec cache miss for sensor " + std::to_string(sensor + 1) +
                                   " latent " + std::to_string(latent_dim) + " (key " + key +
                                   ") with training disabled");
        TrainResult tr = ae_train({CodecKind::ae, obs, latent_dim},
                                  training_data(cfg)->per_sensor[sensor], cfg.training);
        Codec codec(std::move(tr.codec));
        if (!file.empty()) {
          // write-then-rename so an interrupted run never leaves a torn file
          const auto tmp = std::filesystem::path(file.string() + ".tmp");
          save_codec(codec, tmp);
          std::filesystem::rename(tmp, file);
        }
        promise.set_value(std::move(codec));
        std::lock_guard<std::mutex> lock(mutex_);
        ++trained_;
      }
    }
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  return fut.get();
}

// ---------------------------------------------------------------------------
// Cells

namespace {

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ScenarioConfig with_obs_dims(ScenarioConfig cfg, const std::vector<Index>& obs) {
  for (std::size_t s = 0; s < cfg.sensors.size(); ++s)
    cfg.sensors[s].obs_dim = obs.size() == 1 ? obs[0] : obs[s];
  cfg.codecs.clear();
  cfg.budget.reset();
  return cfg;
}

ScenarioConfig uncompressed(ScenarioConfig cfg) {
  cfg.codecs.clear();
  cfg.budget.reset();
  return cfg;
}

SweepCell run_cell(const ScenarioConfig& cfg, const Method& method,
                   const std::vector<Index>& latent, CodecCache& cache) {
  SweepCell cell;
  cell.method = method.label();
  cell.allocation = latent;
  switch (method.kind) {
    case MethodKind::ae_online:
    case MethodKind::pca_online:
      cell.metrics = evaluate_with_codecs(cfg, cache, method.codec_kind(), latent);
      break;
    case MethodKind::ae_offline:
    case MethodKind::pca_offline:
      cell.metrics = evaluate_offline_codecs(cfg, cache, method.codec_kind(), latent);
      cell.offline = true;
      break;
    case MethodKind::uc:
      cell.metrics = evaluate_with_codecs(with_obs_dims(cfg, latent), cache, CodecKind::identity, {});
      cell.allocation.clear();
      break;
    case MethodKind::uc_fixed:
      cell.metrics =
          evaluate_with_codecs(with_obs_dims(cfg, {method.fixed_obs}), cache, CodecKind::identity, {});
      cell.allocation.clear();
      break;
  }
  return cell;
}

// Lower is better: fewer diverged rounds first, then mean per-round cost.
bool better(const MetricsSummary& a, const MetricsSummary& b) {
  if (a.diverged_rounds != b.diverged_rounds) return a.diverged_rounds < b.diverged_rounds;
  const double ma = std::isfinite(a.l3_total.mean) ? a.l3_total.mean : std::numeric_limits<double>::infinity();
  const double mb = std::isfinite(b.l3_total.mean) ? b.l3_total.mean : std::numeric_limits<double>::infinity();
  return ma < mb;
}

}  // namespace

MetricsSummary evaluate_with_codecs(const ScenarioConfig& cfg, CodecCache& cache, CodecKind kind,
                                    const std::vector<Index>& latent) {
  const System sys = build_system(uncompressed(cfg));
  std::vector<Codec> codecs;
  if (kind != CodecKind::identity) {
    require(latent.size() == cfg.sensors.size(),
            "evaluate: need one latent dimension per sensor");
    Index total = 0;
    for (Index d : latent) total += d;
    if (cfg.budget)
      require(total <= *cfg.budget, "evaluate: allocation " + axis_value_label(latent) +
                                        " exceeds the budget " + std::to_string(*cfg.budget));
    for (std::size_t s = 0; s < cfg.sensors.size(); ++s)
      codecs.push_back(cache.get(uncompressed(cfg), s, kind, latent[s]));
  }
  return evaluate_online(sys, cfg, codecs);
}

MetricsSummary evaluate_offline_codecs(const ScenarioConfig& cfg, CodecCache& cache,
                                       CodecKind kind, const std::vector<Index>& latent) {
  require(latent.size() == cfg.sensors.size(), "evaluate: need one latent dimension per sensor");
  const auto test = cache.test_data(uncompressed(cfg));
  MetricsSummary m;
  m.rounds = cfg.rounds;
  const Index horizon = cfg.horizon;
  for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
    const Codec codec = cache.get(uncompressed(cfg), s, kind, latent[s]);
    const Matrix& data = test->per_sensor[s];
    std::vector<RoundStats> rounds(static_cast<std::size_t>(cfg.rounds));
    // one round per chunk keeps per-round means for the standard error
    for (int r = 0; r < cfg.rounds; ++r) {
      const Matrix y = data.middleRows(r * horizon, horizon).transpose();
      rounds[static_cast<std::size_t>(r)].l1_sum = {(codec.roundtrip_columns(y) - y).squaredNorm()};
      rounds[static_cast<std::size_t>(r)].steps = static_cast<int>(horizon);
    }
    m.l1_per_sensor.push_back(summarize(rounds).l1_per_sensor.front());
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.l2 = m.l3_total = m.l3_per_step = {nan, nan};
  return m;
}

SweepResult sweep_compression_dims(const ScenarioConfig& base, const std::vector<Index>& dims,
                                   const std::vector<Method>& methods, CodecCache& cache,
                                   const RunOptions& opts) {
  SweepSpec spec;
  spec.id = base.name;
  spec.base = base;
  spec.axis = SweepAxis::compression_dim;
  for (Index d : dims) spec.values.push_back({d});
  spec.methods = methods;
  return run_sweep(spec, cache, opts);
}

SweepResult sweep_observation_dims(const ScenarioConfig& base, const std::vector<Index>& obs_dims,
                                   Index fixed_d, const std::vector<Method>& methods,
                                   CodecCache& cache, const RunOptions& opts) {
  SweepSpec spec;
  spec.id = base.name;
  spec.base = base;
  spec.axis = SweepAxis::observation_dim;
  for (Index o : obs_dims) spec.values.push_back({o});
  spec.methods = methods;
  spec.latent_dim = fixed_d;
  return run_sweep(spec, cache, opts);
}

SweepResult allocation_sweep(const ScenarioConfig& base, Index budget,
                             const std::vector<Method>& methods, CodecCache& cache,
                             const RunOptions& opts) {
  SweepSpec spec;
  spec.id = base.name;
  spec.base = base;
  spec.base.budget = budget;
  spec.axis = SweepAxis::allocation_pair;
  spec.values = allocation_pairs(budget);
  spec.methods = methods;
  return run_sweep(spec, cache, opts);
}

SweepResult total_budget_sweep(const ScenarioConfig& base, const std::vector<Index>& budgets,
                               const Method& method, CodecCache& cache, const RunOptions& opts) {
  SweepSpec spec;
  spec.id = base.name;
  spec.base = base;
  spec.axis = SweepAxis::total_budget;
  for (Index b : budgets) spec.values.push_back({b});
  spec.methods = {method};
  return run_sweep(spec, cache, opts);
}

SweepResult run_sweep(const SweepSpec& spec, CodecCache& cache, const RunOptions& opts) {
  spec.validate();
  SweepResult result;
  result.id = spec.id;
  result.axis = spec.axis;

  struct Task {
    ScenarioConfig cfg;
    Method method;
    std::vector<Index> latent;
    std::string axis_value;
    Index budget = 0;
  };
  std::vector<Task> tasks;

  for (const auto& value : spec.values) {
    switch (spec.axis) {
      case SweepAxis::compression_dim:
        for (const auto& m : spec.methods)
          tasks.push_back({spec.base, m, {value[0]}, axis_value_label(value)});
        break;
      case SweepAxis::observation_dim: {
        ScenarioConfig cfg = spec.base;
        cfg.sensors[0].obs_dim = value[0];
        cfg.codecs.clear();
        for (const auto& m : spec.methods) {
          if ((m.online() || m.offline()) && spec.latent_dim > value[0] &&
              m.codec_kind() == CodecKind::pca)
            continue;  // PCA cannot exceed the observation dimension
          tasks.push_back({cfg, m,
                           m.kind == MethodKind::uc ? std::vector<Index>{value[0]}
                                                    : std::vector<Index>{spec.latent_dim},
                           axis_value_label(value)});
        }
        break;
      }
      case SweepAxis::allocation_pair:
        for (const auto& m : spec.methods)
          tasks.push_back({spec.base, m, value, axis_value_label(value)});
        break;
      case SweepAxis::total_budget: {
        ScenarioConfig cfg = spec.base;
        cfg.budget = value[0];
        for (const auto& pair : allocation_pairs(value[0])) {
          if (pair[0] > cfg.sensors[0].obs_dim || pair[1] > cfg.sensors[1].obs_dim) continue;
          tasks.push_back({cfg, spec.methods.front(), pair, axis_value_label(value), value[0]});
        }
        break;
      }
    }
  }

  std::vector<SweepCell> cells(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t i) {
    cells[i] = run_cell(tasks[i].cfg, tasks[i].method, tasks[i].latent, cache);
    cells[i].axis_value = tasks[i].axis_value;
  });

  if (spec.axis == SweepAxis::total_budget) {
    for (const auto& value : spec.values) {
      const std::string label = axis_value_label(value);
      const SweepCell* best = nullptr;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].axis_value != label) continue;
        result.allocations.push_back({value[0], cells[i].allocation, cells[i].method, cells[i].metrics});
        if (!best || better(cells[i].metrics, best->metrics)) best = &cells[i];
      }
      if (best) result.cells.push_back(*best);
    }
    return result;
  }

  result.cells = std::move(cells);
  if (spec.axis == SweepAxis::allocation_pair) {
    Method primary = spec.methods.front();
    for (const auto& m : spec.methods)
      if (m.online()) {
        primary = m;
        break;
      }
    const SweepCell* best = nullptr;
    for (const auto& c : result.cells) {
      if (c.method != primary.label()) continue;
      result.allocations.push_back(
          {c.allocation[0] + c.allocation[1], c.allocation, c.method, c.metrics});
      if (primary.online() && (!best || better(c.metrics, best->metrics))) best = &c;
    }
    if (best) result.optimal_allocation = best->allocation;
  }
  return result;
}

std::vector<TableRow> allocation_table(const ScenarioConfig& base, Index budget, const Method& method,
                                       CodecCache& cache, Index small_obs_dim, const RunOptions& opts) {
  require(base.sensors.size() == 2, "allocation_table: needs a two-sensor scenario");
  require(method.online(), "allocation_table: method must be an online codec method");
  return table_rows(base, allocation_sweep(base, budget, {method}, cache, opts), cache,
                    small_obs_dim, opts);
}

std::vector<TableRow> table_rows(const ScenarioConfig& base, const SweepResult& alloc,
                                 CodecCache& cache, Index small_obs_dim, const RunOptions& opts) {
  require(base.sensors.size() == 2, "table_rows: needs a two-sensor scenario");
  std::vector<TableRow> rows;
  const SweepCell* best = nullptr;
  for (const auto& c : alloc.cells)
    if (alloc.optimal_allocation && c.allocation == *alloc.optimal_allocation) best = &c;
  require(best != nullptr, "table_rows: no optimal allocation found");
  rows.push_back({"optimal (" + std::to_string(best->allocation[0]) + "," +
                      std::to_string(best->allocation[1]) + ")",
                  best->allocation, best->metrics});

  std::vector<std::pair<std::string, ScenarioConfig>> baselines;
  ScenarioConfig s1 = uncompressed(base);
  s1.sensors = {base.sensors[0]};
  ScenarioConfig s2 = uncompressed(base);
  s2.sensors = {base.sensors[1]};
  baselines.emplace_back("UC(sensor 1)", s1);
  baselines.emplace_back("UC(sensor 2)", s2);
  baselines.emplace_back("UC(" + std::to_string(base.sensors[0].obs_dim) + ")", uncompressed(base));
  baselines.emplace_back("UC(" + std::to_string(small_obs_dim) + ")",
                         with_obs_dims(base, {small_obs_dim}));

  std::vector<MetricsSummary> results(baselines.size());
  parallel_for(baselines.size(), opts.jobs, [&](std::size_t i) {
    results[i] = evaluate_with_codecs(baselines[i].second, cache, CodecKind::identity, {});
  });
  for (std::size_t i = 0; i < baselines.size(); ++i)
    rows.push_back({baselines[i].first, {}, results[i]});
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<MetricsRow> metrics_rows(const SweepResult& result) {
  std::vector<MetricsRow> rows;
  for (const auto& c : result.cells) {
    const auto& m = c.metrics;
    auto push = [&](int sensor, const char* metric, const Stat& s) {
      rows.push_back({result.id, c.axis_value, c.method, sensor, metric, s.mean, s.se, m.rounds,
                      m.diverged_rounds});
    };
    for (std::size_t s = 0; s < m.l1_per_sensor.size(); ++s)
      push(static_cast<int>(s) + 1, "l1", m.l1_per_sensor[s]);
    if (c.offline) continue;
    push(0, "l2", m.l2);
    push(0, "l3_total", m.l3_total);
    push(0, "l3_per_step", m.l3_per_step);
  }
  return rows;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.sweep_id << ',' << r.axis_value << ',' << r.method << ',' << r.sensor_id << ','
        << r.metric << ',' << format_real(r.mean) << ',' << format_real(r.se) << ',' << r.rounds
        << ',' << r.diverged << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader)
    throw std::runtime_error("'" + path.string() + "': unexpected metrics CSV header");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9)
      throw std::runtime_error("'" + path.string() + "' line " + std::to_string(lineno) +
                               ": expected 9 fields");
    try {
      rows.push_back({f[0], f[1], f[2], std::stoi(f[3]), f[4], std::stod(f[5]), std::stod(f[6]),
                      std::stoi(f[7]), std::stoi(f[8])});
    } catch (const std::exception&) {
      throw std::runtime_error("'" + path.string() + "' line " + std::to_string(lineno) +
                               ": malformed number");
    }
  }
  return rows;
}

std::string render_summary(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-10s %-14s %-6s %-12s %14s %12s %s\n", "sweep", "axis",
                "method", "sensor", "metric", "mean", "stderr", "diverged");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %-10s %-14s %-6s %-12s %14.6g %12.4g %d/%d\n",
                  r.sweep_id.c_str(), r.axis_value.c_str(), r.method.c_str(),
                  r.sensor_id == 0 ? "-" : std::to_string(r.sensor_id).c_str(), r.metric.c_str(),
                  r.mean, r.se, r.diverged, r.rounds);
    os << buf;
  }
  return os.str();
}

std::string render_table(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %14s %10s %12s %10s %10s\n", "method", "L3 per round",
                "stderr", "L3 per step", "L2", "diverged");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %14.6g %10.4g %12.6g %10.5g %6d/%d\n", r.label.c_str(),
                  r.metrics.l3_total.mean, r.metrics.l3_total.se, r.metrics.l3_per_step.mean,
                  r.metrics.l2.mean, r.metrics.diverged_rounds, r.metrics.rounds);
    os << buf;
  }
  return os.str();
}

void emit_report(const SweepResult& result, const std::filesystem::path& directory) {
  require(!result.cells.empty(), "emit_report: empty sweep result");
  std::filesystem::create_directories(directory);
  const auto rows = metrics_rows(result);
  write_metrics_csv(rows, directory / "metrics.csv");

  if (!result.allocations.empty()) {
    std::ofstream out(directory / "allocations.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + (directory / "allocations.csv").string() + "'");
    out << "sweep_id,budget,d1,d2,method,l3_total_mean,l3_total_stderr,l2_mean,rounds,diverged,"
           "optimal\n";
    for (const auto& a : result.allocations) {
      bool optimal = false;
      for (const auto& c : result.cells)
        if (c.allocation == a.allocation && c.method == a.method &&
            (result.axis != SweepAxis::total_budget || c.axis_value == std::to_string(a.budget)))
          optimal = result.axis == SweepAxis::total_budget ||
                    (result.optimal_allocation && *result.optimal_allocation == a.allocation);
      out << result.id << ',' << a.budget << ',' << a.allocation[0] << ',' << a.allocation[1]
          << ',' << a.method << ',' << format_real(a.metrics.l3_total.mean) << ','
          << format_real(a.metrics.l3_total.se) << ',' << format_real(a.metrics.l2.mean) << ','
          << a.metrics.rounds << ',' << a.metrics.diverged_rounds << ',' << (optimal ? 1 : 0)
          << '\n';
    }
  }

  std::ofstream summary(directory / "summary.txt", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write '" + (directory / "summary.txt").string() + "'");
  summary << "sweep " << result.id << " (" << to_string(result.axis) << ")\n";
  if (result.optimal_allocation)
    summary << "optimal allocation: " << axis_value_label(*result.optimal_allocation) << "\n";
  summary << render_summary(rows);
}

}  // namespace ratelink
