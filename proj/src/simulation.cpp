#include "ratelink/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace ratelink {

using Index = Eigen::Index;

namespace {
// Rounds advanced together; fixed so results do not depend on run size.
constexpr int kLockstepChunk = 250;
}  // namespace

std::string to_string(EvalMode mode) { return mode == EvalMode::online ? "online" : "offline"; }

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "online") return EvalMode::online;
  if (name == "offline") return EvalMode::offline;
  throw ConfigurationError("unknown mode '" + name + "' (expected online|offline)");
}

void ScenarioConfig::validate() const {
  require(!sensors.empty(), "scenario '" + name + "': at least one sensor is required");
  require(horizon >= 1, "scenario '" + name + "': horizon must be >= 1");
  require(rounds >= 1, "scenario '" + name + "': rounds must be >= 1");
  require(train_rounds >= 1, "scenario '" + name + "': train_rounds must be >= 1");
  require(codecs.empty() || codecs.size() == sensors.size(),
          "scenario '" + name + "': need one codec per sensor (got " +
              std::to_string(codecs.size()) + " for " + std::to_string(sensors.size()) + ")");
  require(sigma0_scale >= 0.0, "scenario '" + name + "': sigma0_scale must be >= 0");
  require(x0.kind == "gaussian" || x0.kind == "fixed",
          "scenario '" + name + "': x0.kind must be gaussian or fixed");
  for (const auto& s : sensors) {
    require(s.obs_dim >= 1, "scenario '" + name + "': obs_dim must be >= 1");
    require(s.r_scale > 0.0, "scenario '" + name + "': r_scale must be > 0");
    require(s.c_variance >= 0.0, "scenario '" + name + "': c_variance must be >= 0");
  }
  Index total = 0;
  for (std::size_t i = 0; i < codecs.size(); ++i) {
    const auto& c = codecs[i];
    const Index latent = c.latent_dim == 0 ? sensors[i].obs_dim : c.latent_dim;
    CodecDescriptor{c.kind, sensors[i].obs_dim, latent}.validate();
    total += latent;
  }
  // without codecs the budget only constrains allocations chosen later
  if (budget && !codecs.empty()) {
    require(total <= *budget, "scenario '" + name + "': total transmission dimension " +
                                  std::to_string(total) + " exceeds budget " +
                                  std::to_string(*budget));
  }
  training.validate();
}

System build_system(const ScenarioConfig& cfg) {
  cfg.validate();
  System sys;
  if (cfg.plant.kind == "double_integrator") {
    PlantModel p = make_double_integrator(cfg.plant.dt);
    sys.plant = make_plant(p.a, p.b, cfg.plant.process_noise_scale * p.q, p.dt);
  } else if (cfg.plant.kind == "explicit") {
    sys.plant = make_plant(cfg.plant.a, cfg.plant.b, cfg.plant.q, cfg.plant.dt);
  } else {
    throw ConfigurationError("unknown plant kind '" + cfg.plant.kind + "'");
  }
  const Index nx = sys.plant.nx();
  for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
    const auto& s = cfg.sensors[i];
    RngStream rng = RngStream::derive(s.c_seed, static_cast<std::uint64_t>(s.obs_dim));
    sys.sensors.push_back(
        make_random_sensor(static_cast<int>(i) + 1, s.obs_dim, nx, s.c_variance, rng, s.r_scale));
  }
  Vector xd = cfg.x_desired.size() == 0 ? Vector::Zero(nx) : cfg.x_desired;
  require(xd.size() == nx, "scenario: x_desired has wrong size");
  sys.weights = make_weights(cfg.q_goal_scale * Matrix::Identity(nx, nx),
                             cfg.r_goal_scale * Matrix::Identity(sys.plant.nu(), sys.plant.nu()),
                             std::move(xd));
  sys.lqr = solve_dare(sys.plant.a, sys.plant.b, sys.weights.q_goal, sys.weights.r_goal);
  sys.sigma0 = cfg.sigma0_scale * Matrix::Identity(nx, nx);
  sys.fused = fuse(sys.sensors, {});
  if (cfg.x0.kind == "fixed")
    require(cfg.x0.value.size() == nx, "scenario: x0.value must have size " + std::to_string(nx));
  return sys;
}

namespace {

void check_codecs(const System& sys, const std::vector<Codec>& codecs) {
  if (codecs.empty()) return;
  require(codecs.size() == sys.sensors.size(),
          "simulate: " + std::to_string(codecs.size()) + " codecs for " +
              std::to_string(sys.sensors.size()) + " sensors");
  for (std::size_t s = 0; s < codecs.size(); ++s)
    require(codecs[s].input_dim() == sys.sensors[s].ny(),
            "simulate: codec " + std::to_string(s + 1) + " expects input of size " +
                std::to_string(codecs[s].input_dim()) + ", sensor produces " +
                std::to_string(sys.sensors[s].ny()));
}

void add_noise(std::vector<RngStream>& rngs, const Matrix& factor, Matrix& target) {
  Vector xi(factor.cols());
  for (Index r = 0; r < target.cols(); ++r) {
    auto& rng = rngs[static_cast<std::size_t>(r)];
    for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    target.col(r).noalias() += factor * xi;
  }
}

void simulate_chunk(const System& sys, const ScenarioConfig& cfg, const std::vector<Codec>& codecs,
                    std::uint64_t stream_base, Index first, Index n,
                    std::vector<RoundStats>& stats, const StepObserver& observer) {
  const PlantModel& plant = sys.plant;
  const Vector& xd = sys.weights.x_desired;
  const std::size_t n_sensors = sys.sensors.size();
  const Matrix& c_stack = sys.fused.c_stack;

  std::vector<RngStream> rngs;
  rngs.reserve(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r)
    rngs.push_back(RngStream::derive(cfg.root_seed, stream_base + static_cast<std::uint64_t>(first + r)));

  Matrix x(plant.nx(), n);
  for (Index r = 0; r < n; ++r) {
    if (cfg.x0.kind == "fixed") {
      x.col(r) = cfg.x0.value;
    } else {
      auto& rng = rngs[static_cast<std::size_t>(r)];
      for (Index i = 0; i < plant.nx(); ++i) x(i, r) = xd(i) + cfg.x0.scale * rng.normal();
    }
  }
  Matrix x_hat = x;
  Matrix sigma = sys.sigma0;
  Matrix u = -(sys.lqr.k * (x_hat.colwise() - xd));

  std::vector<bool> active(static_cast<std::size_t>(n), true);
  auto advance = [&]() {
    Matrix next = plant.a * x + plant.b * u;
    if (cfg.noise) add_noise(rngs, plant.q_factor, next);
    x = std::move(next);
    for (Index r = 0; r < n; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      if (!active[ri]) continue;
      const double norm = x.col(r).norm();
      if (!std::isfinite(norm) || norm > kDivergenceNorm) {
        active[ri] = false;
        stats[static_cast<std::size_t>(first + r)].diverged = true;
      }
    }
    for (Index r = 0; r < n; ++r) {
      if (active[static_cast<std::size_t>(r)]) continue;
      x.col(r).setZero();
      x_hat.col(r).setZero();
      u.col(r).setZero();
    }
  };
  advance();

  std::vector<Matrix> y(n_sensors), y_hat(n_sensors);
  Matrix y_stack(c_stack.rows(), n);
  Vector cost(n);
  for (int t = 1; t <= cfg.horizon; ++t) {
    for (std::size_t s = 0; s < n_sensors; ++s) {
      y[s].noalias() = sys.sensors[s].c * x;
      if (cfg.noise) add_noise(rngs, sys.sensors[s].r_factor, y[s]);
    }
    Index row = 0;
    for (std::size_t s = 0; s < n_sensors; ++s) {
      if (codecs.empty()) {
        y_hat[s] = y[s];
      } else {
        y_hat[s] = codecs[s].roundtrip_columns(y[s]);
      }
      y_stack.middleRows(row, y_hat[s].rows()) = y_hat[s];
      row += y_hat[s].rows();
    }

    // predict with u_{t−1}, then update with the reconstructed observations
    x_hat = plant.a * x_hat + plant.b * u;
    Matrix prior = plant.a * sigma * plant.a.transpose() + plant.q;
    prior = 0.5 * (prior + prior.transpose());
    const CovarianceUpdate cu = kf_covariance_update(prior, c_stack, sys.fused.r_stack);
    sigma = cu.sigma;
    x_hat.noalias() += cu.gain * (y_stack - c_stack * x_hat);

    u = -(sys.lqr.k * (x_hat.colwise() - xd));

    const Matrix dev = x.colwise() - xd;
    cost = (dev.array() * (sys.weights.q_goal * dev).array()).colwise().sum().transpose() +
           (u.array() * (sys.weights.r_goal * u).array()).colwise().sum().transpose();

    for (Index r = 0; r < n; ++r) {
      if (!active[static_cast<std::size_t>(r)]) continue;
      RoundStats& st = stats[static_cast<std::size_t>(first + r)];
      for (std::size_t s = 0; s < n_sensors; ++s)
        st.l1_sum[s] += (y_hat[s].col(r) - y[s].col(r)).squaredNorm();
      st.l2_sum += (x_hat.col(r) - x.col(r)).squaredNorm();
      st.cost += cost(r);
      st.steps += 1;
    }

    if (observer) {
      StepBatch batch;
      batch.t = t;
      batch.x = &x;
      batch.u = &u;
      batch.y = &y;
      batch.y_hat = &y_hat;
      batch.x_hat = &x_hat;
      batch.cost = &cost;
      batch.active = &active;
      batch.first_round = first;
      observer(batch);
    }
    advance();
  }
}

}  // namespace

std::vector<RoundStats> simulate_rounds(const System& sys, const ScenarioConfig& cfg,
                                        const std::vector<Codec>& codecs,
                                        std::uint64_t stream_base, int rounds,
                                        const StepObserver& observer) {
  require(rounds >= 1, "simulate: rounds must be >= 1");
  check_codecs(sys, codecs);
  std::vector<RoundStats> stats(static_cast<std::size_t>(rounds));
  for (auto& s : stats) s.l1_sum.assign(sys.sensors.size(), 0.0);
  for (int start = 0; start < rounds; start += kLockstepChunk) {
    const int n = std::min(kLockstepChunk, rounds - start);
    simulate_chunk(sys, cfg, codecs, stream_base, start, n, stats, observer);
  }
  return stats;
}

EpisodeLog run_episode(const System& sys, const ScenarioConfig& cfg,
                       const std::vector<Codec>& codecs, std::uint64_t round_stream) {
  EpisodeLog log;
  auto stats = simulate_rounds(sys, cfg, codecs, round_stream, 1, [&](const StepBatch& b) {
    if (!(*b.active)[0]) return;
    StepRecord rec;
    rec.t = b.t;
    rec.x = b.x->col(0);
    rec.u = b.u->col(0);
    for (const auto& m : *b.y) rec.y.push_back(m.col(0));
    for (const auto& m : *b.y_hat) rec.y_hat.push_back(m.col(0));
    rec.x_hat = b.x_hat->col(0);
    rec.cost = (*b.cost)(0);
    log.steps.push_back(std::move(rec));
  });
  log.diverged = stats.front().diverged;
  return log;
}

Dataset collect_dataset(const System& sys, const ScenarioConfig& cfg, std::uint64_t stream_base,
                        int rounds) {
  Dataset ds;
  const Index total = static_cast<Index>(rounds) * cfg.horizon;
  for (const auto& s : sys.sensors) ds.per_sensor.emplace_back(total, s.ny());
  auto stats = simulate_rounds(sys, cfg, {}, stream_base, rounds, [&](const StepBatch& b) {
    for (std::size_t s = 0; s < ds.per_sensor.size(); ++s) {
      const Matrix& y = (*b.y)[s];
      for (Index r = 0; r < y.cols(); ++r) {
        const Index row = (b.first_round + r) * cfg.horizon + (b.t - 1);
        ds.per_sensor[s].row(row) = y.col(r).transpose();
      }
    }
  });
  for (const auto& st : stats)
    if (st.diverged)
      throw ConfigurationError("collect_dataset: uncompressed loop diverged; the scenario must be "
                               "stable without compression");
  return ds;
}

namespace {

Stat mean_and_se(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) {
    s.mean = s.se = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

}  // namespace

MetricsSummary summarize(const std::vector<RoundStats>& stats) {
  require(!stats.empty(), "summarize: no rounds");
  const std::size_t n_sensors = stats.front().l1_sum.size();
  MetricsSummary m;
  m.rounds = static_cast<int>(stats.size());
  std::vector<std::vector<double>> l1(n_sensors);
  std::vector<double> l2, l3, l3_step;
  for (const auto& st : stats) {
    if (st.diverged || st.steps == 0) {
      m.diverged_rounds += st.diverged ? 1 : 0;
      continue;
    }
    const double steps = st.steps;
    for (std::size_t s = 0; s < n_sensors; ++s) l1[s].push_back(st.l1_sum[s] / steps);
    l2.push_back(st.l2_sum / steps);
    l3.push_back(st.cost);
    l3_step.push_back(st.cost / steps);
  }
  for (auto& v : l1) m.l1_per_sensor.push_back(mean_and_se(v));
  m.l2 = mean_and_se(l2);
  m.l3_total = mean_and_se(l3);
  m.l3_per_step = mean_and_se(l3_step);
  return m;
}

MetricsSummary compute_metrics(const std::vector<EpisodeLog>& logs, const LqrWeights& weights) {
  require(!logs.empty(), "compute_metrics: no logs");
  std::vector<RoundStats> stats;
  for (const auto& log : logs) {
    RoundStats st;
    st.diverged = log.diverged;
    for (const auto& rec : log.steps) {
      if (st.l1_sum.empty()) st.l1_sum.assign(rec.y.size(), 0.0);
      for (std::size_t s = 0; s < rec.y.size(); ++s)
        st.l1_sum[s] += (rec.y_hat[s] - rec.y[s]).squaredNorm();
      st.l2_sum += (rec.x_hat - rec.x).squaredNorm();
      st.cost += step_cost(weights, rec.x, rec.u);
      st.steps += 1;
    }
    stats.push_back(std::move(st));
  }
  std::size_t n_sensors = 0;
  for (const auto& st : stats) n_sensors = std::max(n_sensors, st.l1_sum.size());
  for (auto& st : stats) st.l1_sum.resize(n_sensors, 0.0);
  return summarize(stats);
}

MetricsSummary evaluate_online(const System& sys, const ScenarioConfig& cfg,
                               const std::vector<Codec>& codecs) {
  return summarize(simulate_rounds(sys, cfg, codecs, kTestStreamBase, cfg.rounds));
}

double evaluate_offline(const Matrix& recorded, const Codec& codec) {
  require(recorded.cols() == codec.input_dim(),
          "evaluate_offline: samples have " + std::to_string(recorded.cols()) +
              " columns, codec expects " + std::to_string(codec.input_dim()));
  return offline_mse(codec, recorded);
}

void write_episode_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  if (log.steps.empty()) {
    out << "t,step_cost\n";
    return;
  }
  const StepRecord& first = log.steps.front();
  out << "t";
  for (Index i = 0; i < first.x.size(); ++i) out << ",x" << i;
  for (Index i = 0; i < first.u.size(); ++i) out << ",u" << i;
  for (std::size_t s = 0; s < first.y.size(); ++s) {
    for (Index i = 0; i < first.y[s].size(); ++i) out << ",y" << s + 1 << "_" << i;
    for (Index i = 0; i < first.y_hat[s].size(); ++i) out << ",yhat" << s + 1 << "_" << i;
  }
  for (Index i = 0; i < first.x_hat.size(); ++i) out << ",xhat" << i;
  out << ",step_cost\n";
  for (const auto& rec : log.steps) {
    out << rec.t;
    for (Index i = 0; i < rec.x.size(); ++i) out << ',' << rec.x(i);
    for (Index i = 0; i < rec.u.size(); ++i) out << ',' << rec.u(i);
    for (std::size_t s = 0; s < rec.y.size(); ++s) {
      for (Index i = 0; i < rec.y[s].size(); ++i) out << ',' << rec.y[s](i);
      for (Index i = 0; i < rec.y_hat[s].size(); ++i) out << ',' << rec.y_hat[s](i);
    }
    for (Index i = 0; i < rec.x_hat.size(); ++i) out << ',' << rec.x_hat(i);
    out << ',' << rec.cost << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace ratelink
