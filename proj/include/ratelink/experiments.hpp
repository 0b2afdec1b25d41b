#pragma once

// Scenario sweeps over compression dimension, observation dimension and
// multi-sensor transmission budgets, with a content-addressed codec cache.

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ratelink/simulation.hpp"

namespace ratelink {

enum class SweepAxis { compression_dim, observation_dim, allocation_pair, total_budget };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

enum class MethodKind { ae_online, ae_offline, pca_online, pca_offline, uc, uc_fixed };

struct Method {
  MethodKind kind = MethodKind::uc;
  Eigen::Index fixed_obs = 0;  // uc_fixed only

  std::string label() const;  // e.g. "ae_online", "uc_fixed(20)"
  bool online() const { return kind == MethodKind::ae_online || kind == MethodKind::pca_online; }
  bool offline() const {
    return kind == MethodKind::ae_offline || kind == MethodKind::pca_offline;
  }
  CodecKind codec_kind() const;
  bool operator==(const Method&) const = default;
};
Method parse_method(const std::string& label);

struct SweepSpec {
  std::string id = "sweep";
  ScenarioConfig base;
  SweepAxis axis = SweepAxis::compression_dim;
  std::vector<std::vector<Eigen::Index>> values;  // one entry, or a pair for allocations
  std::vector<Method> methods;
  Eigen::Index latent_dim = 4;  // observation_dim axis only

  void validate() const;
};

/// Every feasible (d₁, r_t − d₁) with d₁ ∈ [1, r_t − 1].
std::vector<std::vector<Eigen::Index>> allocation_pairs(Eigen::Index budget);

std::string axis_value_label(const std::vector<Eigen::Index>& value);

struct SweepCell {
  std::string axis_value;
  std::string method;
  MetricsSummary metrics;
  bool offline = false;  // only L1 is meaningful
  std::vector<Eigen::Index> allocation;
};

struct AllocationRecord {
  Eigen::Index budget = 0;
  std::vector<Eigen::Index> allocation;
  std::string method;
  MetricsSummary metrics;
};

struct SweepResult {
  std::string id;
  SweepAxis axis = SweepAxis::compression_dim;
  std::vector<SweepCell> cells;
  std::optional<std::vector<Eigen::Index>> optimal_allocation;
  std::vector<AllocationRecord> allocations;

  const SweepCell* find(const std::string& axis_value, const std::string& method) const;
};

/// Trains or fits codecs on demand. AE checkpoints are written to
/// `directory` (when set) under a name derived from the content hash of
/// everything that determines the training data and the training run.
class CodecCache {
 public:
  explicit CodecCache(std::filesystem::path directory = {}, bool allow_training = true);

  /// Codec for sensor `sensor` of `cfg`, trained on that scenario's
  /// uncompressed training rounds. Identity ignores `latent_dim`.
  Codec get(const ScenarioConfig& cfg, std::size_t sensor, CodecKind kind,
            Eigen::Index latent_dim);

  /// Uncompressed-loop observations from the training or test stream range.
  std::shared_ptr<const Dataset> training_data(const ScenarioConfig& cfg);
  std::shared_ptr<const Dataset> test_data(const ScenarioConfig& cfg);

  std::string codec_key(const ScenarioConfig& cfg, std::size_t sensor, CodecKind kind,
                        Eigen::Index latent_dim) const;

  int trained_count() const { return trained_; }
  int loaded_count() const { return loaded_; }

 private:
  std::shared_ptr<const Dataset> dataset(const ScenarioConfig& cfg, bool test);

  std::filesystem::path directory_;
  bool allow_training_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<std::shared_ptr<const Dataset>>> datasets_;
  std::map<std::string, std::shared_future<Codec>> codecs_;
  int trained_ = 0;
  int loaded_ = 0;
};

/// Hex FNV-1a/splitmix digest of the data-generating part of a scenario.
std::string scenario_data_key(const ScenarioConfig& cfg);

struct RunOptions {
  int jobs = 1;
};

/// Closed-loop metrics for `cfg` with one codec per sensor built by `kind`
/// at the given latent dims (empty = uncompressed).
MetricsSummary evaluate_with_codecs(const ScenarioConfig& cfg, CodecCache& cache, CodecKind kind,
                                    const std::vector<Eigen::Index>& latent);

/// Offline L1 for each sensor on the recorded uncompressed test rounds.
MetricsSummary evaluate_offline_codecs(const ScenarioConfig& cfg, CodecCache& cache,
                                       CodecKind kind, const std::vector<Eigen::Index>& latent);

SweepResult run_sweep(const SweepSpec& spec, CodecCache& cache, const RunOptions& opts = {});

SweepResult sweep_compression_dims(const ScenarioConfig& base, const std::vector<Eigen::Index>& dims,
                                   const std::vector<Method>& methods, CodecCache& cache,
                                   const RunOptions& opts = {});
SweepResult sweep_observation_dims(const ScenarioConfig& base,
                                   const std::vector<Eigen::Index>& obs_dims,
                                   Eigen::Index fixed_d, const std::vector<Method>& methods,
                                   CodecCache& cache, const RunOptions& opts = {});
SweepResult allocation_sweep(const ScenarioConfig& base, Eigen::Index budget,
                             const std::vector<Method>& methods, CodecCache& cache,
                             const RunOptions& opts = {});
SweepResult total_budget_sweep(const ScenarioConfig& base, const std::vector<Eigen::Index>& budgets,
                               const Method& method, CodecCache& cache,
                               const RunOptions& opts = {});

struct TableRow {
  std::string label;
  std::vector<Eigen::Index> allocation;  // empty for uncompressed rows
  MetricsSummary metrics;
};

/// Optimal allocation at `budget` against the uncompressed baselines: sensor 1
/// only, sensor 2 only, both at full dimension, both at `small_obs_dim`.
std::vector<TableRow> allocation_table(const ScenarioConfig& base, Eigen::Index budget,
                                       const Method& method, CodecCache& cache,
                                       Eigen::Index small_obs_dim = 3, const RunOptions& opts = {});
/// Same rows, reusing a finished allocation sweep of `base`.
std::vector<TableRow> table_rows(const ScenarioConfig& base, const SweepResult& allocation,
                                 CodecCache& cache, Eigen::Index small_obs_dim = 3,
                                 const RunOptions& opts = {});

struct MetricsRow {
  std::string sweep_id;
  std::string axis_value;
  std::string method;
  int sensor_id = 0;  // 0 = system-level metric
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  int rounds = 0;
  int diverged = 0;
};

std::vector<MetricsRow> metrics_rows(const SweepResult& result);
inline constexpr const char* kMetricsCsvHeader =
    "sweep_id,axis_value,method,sensor_id,metric,mean,stderr,rounds,diverged";

/// Writes metrics.csv, allocations.csv (allocation/budget sweeps) and
/// summary.txt into `directory`.
void emit_report(const SweepResult& result, const std::filesystem::path& directory);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
std::string render_summary(const std::vector<MetricsRow>& rows);
std::string render_table(const std::vector<TableRow>& rows);

}  // namespace ratelink
