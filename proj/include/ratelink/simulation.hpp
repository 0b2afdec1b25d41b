#pragma once

// Closed-loop episode execution, dataset collection and the L1/L2/L3
// metric pipeline.
//
// Per step t = 1..T the loop runs observe → compress → reconstruct →
// predict(u_{t−1}) → update → control → advance. x̂_{0|0} = x₀ and u₀ is
// computed from it before the first step; cost is accumulated for t ≥ 1 on
// the true state.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ratelink/codecs.hpp"
#include "ratelink/controller.hpp"
#include "ratelink/estimator.hpp"
#include "ratelink/plant.hpp"

namespace ratelink {

struct PlantSpec {
  std::string kind = "double_integrator";  // or "explicit"
  double dt = 0.1;
  double process_noise_scale = 1.0;
  Matrix a, b, q;  // explicit kind only
};

struct SensorSpec {
  Eigen::Index obs_dim = 20;
  double r_scale = 1.0;
  std::uint64_t c_seed = 1;
  double c_variance = 1.0 / 50.0;
};

struct CodecSpec {
  CodecKind kind = CodecKind::identity;
  Eigen::Index latent_dim = 0;  // 0 = obs_dim (identity)
  std::string checkpoint;       // optional path
};

enum class EvalMode { online, offline };
std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);

struct InitialStateSpec {
  std::string kind = "gaussian";  // "gaussian": x_desired + scale·N(0, I); "fixed": value
  double scale = 1.0;
  Vector value;
};

struct ScenarioConfig {
  std::string name = "scenario";
  PlantSpec plant;
  std::vector<SensorSpec> sensors;
  std::vector<CodecSpec> codecs;  // empty = uncompressed
  int horizon = 200;
  int rounds = 1000;        // test rounds
  int train_rounds = 1000;  // data-collection rounds for codec fitting
  EvalMode mode = EvalMode::online;
  std::uint64_t root_seed = 1;
  InitialStateSpec x0;
  double sigma0_scale = 1e-4;
  double q_goal_scale = 0.1;
  double r_goal_scale = 1.0;
  Vector x_desired;  // empty = zero
  std::optional<Eigen::Index> budget;  // checked against codecs when they are listed
  bool noise = true;
  TrainConfig training;

  void validate() const;
};

/// Concrete models derived from a scenario. Observation matrices come from
/// the stream (c_seed, obs_dim), so they are fixed across phases.
struct System {
  PlantModel plant;
  std::vector<SensorModel> sensors;
  LqrWeights weights;
  LqrSolution lqr;
  Matrix sigma0;
  FusedObservation fused;  // c_stack / r_stack only
};

System build_system(const ScenarioConfig& cfg);

/// Stream-id ranges; training and test rounds never share a stream.
inline constexpr std::uint64_t kTrainStreamBase = 0x100000000ULL;
inline constexpr std::uint64_t kTestStreamBase = 0x200000000ULL;

inline constexpr double kDivergenceNorm = 1e6;

struct StepRecord {
  int t = 0;
  Vector x;
  Vector u;
  std::vector<Vector> y;
  std::vector<Vector> y_hat;
  Vector x_hat;
  double cost = 0.0;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  bool diverged = false;
};

/// Per-round sums used to build MetricsSummary.
struct RoundStats {
  std::vector<double> l1_sum;  // per sensor, Σ_t |ŷ − y|²
  double l2_sum = 0.0;         // Σ_t |x̂ − x|²
  double cost = 0.0;           // Σ_t step cost
  int steps = 0;
  bool diverged = false;
};

/// Batch view of one loop step handed to observers. Column r belongs to
/// round r of the batch.
struct StepBatch {
  int t = 0;
  const Matrix* x = nullptr;
  const Matrix* u = nullptr;
  const std::vector<Matrix>* y = nullptr;
  const std::vector<Matrix>* y_hat = nullptr;
  const Matrix* x_hat = nullptr;
  const Vector* cost = nullptr;
  const std::vector<bool>* active = nullptr;
  Eigen::Index first_round = 0;  // index of column 0 within the whole run
};

using StepObserver = std::function<void(const StepBatch&)>;

/// Runs `rounds` rounds in lockstep chunks. Round r uses stream
/// (root_seed, stream_base + r). `codecs` empty = no compression.
std::vector<RoundStats> simulate_rounds(const System& sys, const ScenarioConfig& cfg,
                                        const std::vector<Codec>& codecs,
                                        std::uint64_t stream_base, int rounds,
                                        const StepObserver& observer = {});

EpisodeLog run_episode(const System& sys, const ScenarioConfig& cfg,
                       const std::vector<Codec>& codecs, std::uint64_t round_stream);

struct Dataset {
  std::vector<Matrix> per_sensor;  // rows = samples, ordered round-major

  Eigen::Index rows() const { return per_sensor.empty() ? 0 : per_sensor.front().rows(); }
};

/// Observations of the uncompressed loop. Throws ConfigurationError if any
/// round diverges.
Dataset collect_dataset(const System& sys, const ScenarioConfig& cfg, std::uint64_t stream_base,
                        int rounds);

struct Stat {
  double mean = 0.0;
  double se = 0.0;  // standard error across rounds
};

struct MetricsSummary {
  std::vector<Stat> l1_per_sensor;
  Stat l2;
  Stat l3_total;
  Stat l3_per_step;
  int rounds = 0;
  int diverged_rounds = 0;

  bool all_diverged() const { return rounds > 0 && diverged_rounds == rounds; }
};

MetricsSummary summarize(const std::vector<RoundStats>& stats);

MetricsSummary compute_metrics(const std::vector<EpisodeLog>& logs, const LqrWeights& weights);

/// Fresh test rounds with `codecs` in the loop.
MetricsSummary evaluate_online(const System& sys, const ScenarioConfig& cfg,
                               const std::vector<Codec>& codecs);

/// Mean |ŷ − y|² of a codec over recorded samples (rows).
double evaluate_offline(const Matrix& recorded, const Codec& codec);

/// One row per step: t, x, u, per-sensor y and ŷ, x̂, step_cost.
void write_episode_csv(const EpisodeLog& log, const std::filesystem::path& path);

}  // namespace ratelink
