// ratelink command line: collect, train, eval, sweep, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ratelink/config.hpp"
#include "ratelink/experiments.hpp"

namespace fs = std::filesystem;
using namespace ratelink;
using Index = Eigen::Index;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string mode;
  int jobs = 1;
  bool deterministic = false;
  std::string cache;
  bool no_train = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "override the scenario root seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--mode", c.mode, "online|offline")->check(CLI::IsMember({"online", "offline"}));
  cmd->add_option("--jobs", c.jobs, "parallel sweep cells")->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", c.deterministic, "single-threaded, bit-exact");
  cmd->add_option("--cache", c.cache, "codec cache directory (default <out>/codecs)");
  cmd->add_flag("--no-train", c.no_train, "fail instead of training missing AE codecs");
}

fs::path cache_dir(const Common& c) { return c.cache.empty() ? fs::path(c.out) / "codecs" : fs::path(c.cache); }

ScenarioConfig scenario(const Common& c) {
  ScenarioConfig cfg = load_scenario(c.config);
  if (c.seed) cfg.root_seed = *c.seed;
  if (!c.mode.empty()) cfg.mode = parse_eval_mode(c.mode);
  cfg.validate();
  return cfg;
}

void write_rows_csv(const Matrix& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << "y" << j + 1;
  out << '\n';
  char buf[32];
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index j = 0; j < rows.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", rows(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

int cmd_collect(const Common& c) {
  const ScenarioConfig cfg = scenario(c);
  const System sys = build_system(cfg);
  fs::create_directories(c.out);
  const Dataset ds = collect_dataset(sys, cfg, kTrainStreamBase, cfg.train_rounds);
  for (std::size_t s = 0; s < ds.per_sensor.size(); ++s)
    write_rows_csv(ds.per_sensor[s], fs::path(c.out) / ("sensor" + std::to_string(s + 1) + ".csv"));
  write_episode_csv(run_episode(sys, cfg, {}, kTrainStreamBase), fs::path(c.out) / "episode.csv");
  std::cout << "collected " << ds.rows() << " samples x " << ds.per_sensor.size() << " sensors -> "
            << c.out << "\n";
  return 0;
}

// Codecs named by the scenario: explicit checkpoints win, otherwise the cache.
std::vector<Codec> scenario_codecs(const ScenarioConfig& cfg, CodecCache& cache) {
  std::vector<Codec> codecs;
  if (cfg.codecs.empty()) return codecs;
  ScenarioConfig plain = cfg;
  plain.codecs.clear();
  plain.budget.reset();
  for (std::size_t s = 0; s < cfg.codecs.size(); ++s) {
    const CodecSpec& spec = cfg.codecs[s];
    if (!spec.checkpoint.empty()) {
      Codec codec = load_codec(spec.checkpoint);
      require(codec.input_dim() == cfg.sensors[s].obs_dim,
              "checkpoint '" + spec.checkpoint + "' does not match sensor " + std::to_string(s + 1));
      codecs.push_back(std::move(codec));
    } else {
      codecs.push_back(cache.get(plain, s, spec.kind,
                                 spec.latent_dim ? spec.latent_dim : cfg.sensors[s].obs_dim));
    }
  }
  return codecs;
}

int cmd_train(const Common& c) {
  const ScenarioConfig cfg = scenario(c);
  require(!cfg.codecs.empty(), "train: the scenario lists no codecs");
  fs::create_directories(c.out);
  const System sys = build_system(cfg);
  const Dataset ds = collect_dataset(sys, cfg, kTrainStreamBase, cfg.train_rounds);
  for (std::size_t s = 0; s < cfg.codecs.size(); ++s) {
    const CodecSpec& spec = cfg.codecs[s];
    const Index obs = cfg.sensors[s].obs_dim;
    const Index d = spec.latent_dim ? spec.latent_dim : obs;
    const fs::path file = fs::path(c.out) / ("codec_sensor" + std::to_string(s + 1) + ".json");
    if (spec.kind == CodecKind::ae) {
      const TrainResult tr = ae_train({CodecKind::ae, obs, d}, ds.per_sensor[s], cfg.training);
      save_codec(Codec(tr.codec), file);
      std::ofstream curve(fs::path(c.out) / ("training_sensor" + std::to_string(s + 1) + ".csv"));
      curve << "epoch,train_mse,validation_mse\n";
      curve << 0 << ",," << tr.curve.initial_validation_mse << '\n';
      for (std::size_t e = 0; e < tr.curve.train_mse.size(); ++e)
        curve << e + 1 << ',' << tr.curve.train_mse[e] << ',' << tr.curve.validation_mse[e] << '\n';
      std::cout << "sensor " << s + 1 << ": ae d=" << d << " best epoch " << tr.curve.best_epoch
                << " validation mse "
                << (tr.curve.best_epoch ? tr.curve.validation_mse[tr.curve.best_epoch - 1]
                                        : tr.curve.initial_validation_mse)
                << "\n";
    } else if (spec.kind == CodecKind::pca) {
      const Codec codec = pca_fit(ds.per_sensor[s], d);
      save_codec(codec, file);
      std::cout << "sensor " << s + 1 << ": pca d=" << d << " training mse "
                << offline_mse(codec, ds.per_sensor[s]) << "\n";
    } else {
      save_codec(Codec::identity(obs), file);
      std::cout << "sensor " << s + 1 << ": identity\n";
    }
  }
  return 0;
}

int cmd_eval(const Common& c) {
  const ScenarioConfig cfg = scenario(c);
  CodecCache cache(cache_dir(c), !c.no_train);
  const std::vector<Codec> codecs = scenario_codecs(cfg, cache);
  fs::create_directories(c.out);

  std::string method = "uc";
  if (!codecs.empty()) {
    method = to_string(codecs.front().kind());
    method += cfg.mode == EvalMode::online ? "_online" : "_offline";
  }
  std::vector<Index> latent;
  for (const auto& codec : codecs) latent.push_back(codec.latent_dim());

  SweepResult result;
  result.id = cfg.name;
  SweepCell cell;
  cell.axis_value = latent.empty() ? "uc" : axis_value_label(latent);
  cell.method = method;
  cell.allocation = latent;
  ScenarioConfig plain = cfg;
  plain.codecs.clear();
  plain.budget.reset();
  if (cfg.mode == EvalMode::online || codecs.empty()) {
    const System sys = build_system(plain);
    cell.metrics = evaluate_online(sys, cfg, codecs);
    write_episode_csv(run_episode(sys, cfg, codecs, kTestStreamBase), fs::path(c.out) / "episode.csv");
  } else {
    const auto test = cache.test_data(plain);
    cell.offline = true;
    cell.metrics.rounds = cfg.rounds;
    for (std::size_t s = 0; s < codecs.size(); ++s)
      cell.metrics.l1_per_sensor.push_back({evaluate_offline(test->per_sensor[s], codecs[s]), 0.0});
  }
  result.cells.push_back(cell);
  emit_report(result, c.out);
  std::cout << render_summary(metrics_rows(result));
  return 0;
}

int cmd_sweep(const Common& c) {
  SweepSpec spec = load_sweep(c.config);
  if (c.seed) spec.base.root_seed = *c.seed;
  RunOptions opts;
  opts.jobs = c.deterministic ? 1 : c.jobs;
  CodecCache cache(cache_dir(c), !c.no_train);
  const SweepResult result = run_sweep(spec, cache, opts);
  emit_report(result, c.out);
  std::cout << render_summary(metrics_rows(result));
  if (result.optimal_allocation)
    std::cout << "optimal allocation: " << axis_value_label(*result.optimal_allocation) << "\n";
  if (spec.axis == SweepAxis::allocation_pair && result.optimal_allocation) {
    const auto rows = table_rows(spec.base, result, cache, 3, opts);
    const std::string table = render_table(rows);
    std::ofstream(fs::path(c.out) / "table.txt", std::ios::binary) << table;
    std::cout << table;
  }
  return 0;
}

int cmd_report(const Common& c) {
  fs::path in = c.config;
  if (fs::is_directory(in)) in /= "metrics.csv";
  const std::string text = render_summary(read_metrics_csv(in));
  std::cout << text;
  if (!c.out.empty() && c.out != "out") {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "summary.txt", std::ios::binary) << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-limited closed-loop sensing and control simulator"};
  app.require_subcommand(1);
  Common common;
  auto* collect = app.add_subcommand("collect", "record uncompressed training observations");
  auto* train = app.add_subcommand("train", "fit the codecs listed in a scenario");
  auto* eval = app.add_subcommand("eval", "evaluate one scenario");
  auto* sweep = app.add_subcommand("sweep", "run a sweep file");
  auto* report = app.add_subcommand("report", "render a metrics CSV (--config <csv or dir>)");
  for (auto* cmd : {collect, train, eval, sweep, report}) add_common(cmd, common);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*collect) return cmd_collect(common);
    if (*train) return cmd_train(common);
    if (*eval) return cmd_eval(common);
    if (*sweep) return cmd_sweep(common);
    if (*report) return cmd_report(common);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
