#include "ratelink/config.hpp"

#include <fstream>
#include <set>

namespace ratelink {

using nlohmann::json;
using Index = Eigen::Index;

namespace {

// Reads fields off one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigurationError("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigurationError("config: missing field '" + where(key) + "'");
    return *it;
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigurationError("config: field '" + where(key) + "': " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigurationError("config: unknown key '" + where(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vector vector_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigurationError("config: field '" + where + "' must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigurationError("config: field '" + where + "' must hold numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ConfigurationError("config: field '" + where + "' must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ConfigurationError("config: field '" + where + "' rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number())
        throw ConfigurationError("config: field '" + where + "' must hold numbers");
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("config: cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config: malformed JSON in '" + path.string() + "': " + e.what());
  }
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  TrainConfig c;
  r.get("batch_size", c.batch_size);
  r.get("epochs", c.epochs);
  r.get("learning_rate", c.learning_rate);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("epsilon", c.epsilon);
  r.get("seed", c.seed);
  r.get("validation_fraction", c.validation_fraction);
  r.get("hidden", c.hidden);
  r.get("divergence_factor", c.divergence_factor);
  r.finish();
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},   {"epochs", c.epochs},
          {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},             {"epsilon", c.epsilon},
          {"seed", c.seed},               {"validation_fraction", c.validation_fraction},
          {"hidden", c.hidden},           {"divergence_factor", c.divergence_factor}};
}

ScenarioConfig scenario_from_json(const json& j) {
  ObjectReader r(j, "");
  ScenarioConfig c;
  r.get("name", c.name);

  if (r.has("plant")) {
    ObjectReader p(r.at("plant"), "plant");
    p.get("kind", c.plant.kind);
    p.get("dt", c.plant.dt);
    p.get("process_noise_scale", c.plant.process_noise_scale);
    if (p.has("a")) c.plant.a = matrix_from(p.at("a"), "plant.a");
    if (p.has("b")) c.plant.b = matrix_from(p.at("b"), "plant.b");
    if (p.has("q")) c.plant.q = matrix_from(p.at("q"), "plant.q");
    p.finish();
  }

  const json& sensors = r.at("sensors");
  if (!sensors.is_array()) throw ConfigurationError("config: field 'sensors' must be an array");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    ObjectReader s(sensors[i], "sensors[" + std::to_string(i) + "]");
    SensorSpec spec;
    s.get("obs_dim", spec.obs_dim);
    s.get("r_scale", spec.r_scale);
    s.get("c_seed", spec.c_seed);
    s.get("c_variance", spec.c_variance);
    s.finish();
    c.sensors.push_back(spec);
  }

  if (r.has("codecs")) {
    const json& codecs = r.at("codecs");
    if (!codecs.is_array()) throw ConfigurationError("config: field 'codecs' must be an array");
    for (std::size_t i = 0; i < codecs.size(); ++i) {
      ObjectReader s(codecs[i], "codecs[" + std::to_string(i) + "]");
      CodecSpec spec;
      std::string kind = "identity";
      s.get("kind", kind);
      spec.kind = parse_codec_kind(kind);
      s.get("latent_dim", spec.latent_dim);
      s.get("checkpoint", spec.checkpoint);
      s.finish();
      c.codecs.push_back(spec);
    }
  }

  r.get("horizon", c.horizon);
  r.get("rounds", c.rounds);
  r.get("train_rounds", c.train_rounds);
  if (r.has("mode")) c.mode = parse_eval_mode(r.at("mode").get<std::string>());
  r.get("root_seed", c.root_seed);
  if (r.has("x0")) {
    ObjectReader x(r.at("x0"), "x0");
    x.get("kind", c.x0.kind);
    x.get("scale", c.x0.scale);
    if (x.has("value")) c.x0.value = vector_from(x.at("value"), "x0.value");
    x.finish();
  }
  r.get("sigma0_scale", c.sigma0_scale);
  r.get("q_goal_scale", c.q_goal_scale);
  r.get("r_goal_scale", c.r_goal_scale);
  if (r.has("x_desired")) c.x_desired = vector_from(r.at("x_desired"), "x_desired");
  if (r.has("budget")) {
    const json& b = r.at("budget");
    if (!b.is_null()) {
      if (!b.is_number_integer()) throw ConfigurationError("config: field 'budget' must be an integer");
      c.budget = b.get<Index>();
    }
  }
  r.get("noise", c.noise);
  if (r.has("training")) c.training = train_config_from_json(r.at("training"));
  r.finish();
  c.validate();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  json plant = {{"kind", c.plant.kind},
                {"dt", c.plant.dt},
                {"process_noise_scale", c.plant.process_noise_scale}};
  if (c.plant.kind == "explicit") {
    plant["a"] = to_json(c.plant.a);
    plant["b"] = to_json(c.plant.b);
    plant["q"] = to_json(c.plant.q);
  }
  j["plant"] = plant;
  j["sensors"] = json::array();
  for (const auto& s : c.sensors)
    j["sensors"].push_back({{"obs_dim", s.obs_dim},
                            {"r_scale", s.r_scale},
                            {"c_seed", s.c_seed},
                            {"c_variance", s.c_variance}});
  j["codecs"] = json::array();
  for (const auto& s : c.codecs) {
    json cj = {{"kind", to_string(s.kind)}, {"latent_dim", s.latent_dim}};
    if (!s.checkpoint.empty()) cj["checkpoint"] = s.checkpoint;
    j["codecs"].push_back(cj);
  }
  j["horizon"] = c.horizon;
  j["rounds"] = c.rounds;
  j["train_rounds"] = c.train_rounds;
  j["mode"] = to_string(c.mode);
  j["root_seed"] = c.root_seed;
  json x0 = {{"kind", c.x0.kind}, {"scale", c.x0.scale}};
  if (c.x0.value.size() > 0) x0["value"] = to_json(c.x0.value);
  j["x0"] = x0;
  j["sigma0_scale"] = c.sigma0_scale;
  j["q_goal_scale"] = c.q_goal_scale;
  j["r_goal_scale"] = c.r_goal_scale;
  if (c.x_desired.size() > 0) j["x_desired"] = to_json(c.x_desired);
  j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  j["noise"] = c.noise;
  j["training"] = train_config_to_json(c.training);
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

SweepSpec sweep_from_json(const json& j) {
  ObjectReader r(j, "");
  SweepSpec s;
  r.get("id", s.id);
  s.base = scenario_from_json(r.at("base"));
  s.axis = parse_sweep_axis(r.at("axis").get<std::string>());
  const json& values = r.at("values");
  if (!values.is_array()) throw ConfigurationError("config: field 'values' must be an array");
  for (const auto& v : values) {
    if (v.is_number_integer()) {
      s.values.push_back({v.get<Index>()});
    } else if (v.is_array()) {
      std::vector<Index> pair;
      for (const auto& e : v) {
        if (!e.is_number_integer())
          throw ConfigurationError("config: field 'values' entries must be integers");
        pair.push_back(e.get<Index>());
      }
      s.values.push_back(pair);
    } else {
      throw ConfigurationError("config: field 'values' entries must be integers or pairs");
    }
  }
  const json& methods = r.at("methods");
  if (!methods.is_array()) throw ConfigurationError("config: field 'methods' must be an array");
  for (const auto& m : methods) s.methods.push_back(parse_method(m.get<std::string>()));
  r.get("latent_dim", s.latent_dim);
  r.finish();
  s.validate();
  return s;
}

json sweep_to_json(const SweepSpec& s) {
  json j;
  j["id"] = s.id;
  j["base"] = scenario_to_json(s.base);
  j["axis"] = to_string(s.axis);
  j["values"] = json::array();
  for (const auto& v : s.values) {
    if (v.size() == 1)
      j["values"].push_back(v[0]);
    else
      j["values"].push_back(v);
  }
  j["methods"] = json::array();
  for (const auto& m : s.methods) j["methods"].push_back(m.label());
  j["latent_dim"] = s.latent_dim;
  return j;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  return sweep_from_json(read_json_file(path));
}

}  // namespace ratelink
