#include "dada/config.hpp"

#include <cmath>
#include <fstream>

namespace dada::config {

using nlohmann::json;

namespace {

[[noreturn]] void missing(const std::string& path, const std::string& key) {
  throw ConfigError("config error at " + path + ": missing required field '" +
                    key + "'");
}

[[noreturn]] void bad_type(const std::string& path, const std::string& key,
                           const char* want) {
  throw ConfigError("config error at " + path + ": field '" + key +
                    "' must be " + want);
}

}  // namespace

ObjectView::ObjectView(const json& j, std::string path)
    : j_(j), path_(std::move(path)) {
  if (!j_.is_object())
    throw ConfigError("config error at " + path_ + ": expected an object");
}

bool ObjectView::has(const std::string& key) const { return j_.contains(key); }

double ObjectView::require_double(const std::string& key) {
  if (!j_.contains(key)) missing(path_, key);
  used_.insert(key);
  if (!j_[key].is_number()) bad_type(path_, key, "a number");
  return j_[key].get<double>();
}

double ObjectView::get_double(const std::string& key, double fallback) {
  if (!j_.contains(key)) return fallback;
  return require_double(key);
}

int ObjectView::require_int(const std::string& key) {
  if (!j_.contains(key)) missing(path_, key);
  used_.insert(key);
  if (!j_[key].is_number_integer()) bad_type(path_, key, "an integer");
  return j_[key].get<int>();
}

int ObjectView::get_int(const std::string& key, int fallback) {
  if (!j_.contains(key)) return fallback;
  return require_int(key);
}

std::uint64_t ObjectView::get_u64(const std::string& key,
                                  std::uint64_t fallback) {
  if (!j_.contains(key)) return fallback;
  used_.insert(key);
  if (!j_[key].is_number_unsigned() && !j_[key].is_number_integer())
    bad_type(path_, key, "an unsigned integer");
  return j_[key].get<std::uint64_t>();
}

bool ObjectView::get_bool(const std::string& key, bool fallback) {
  if (!j_.contains(key)) return fallback;
  used_.insert(key);
  if (!j_[key].is_boolean()) bad_type(path_, key, "a boolean");
  return j_[key].get<bool>();
}

std::string ObjectView::require_string(const std::string& key) {
  if (!j_.contains(key)) missing(path_, key);
  used_.insert(key);
  if (!j_[key].is_string()) bad_type(path_, key, "a string");
  return j_[key].get<std::string>();
}

std::string ObjectView::get_string(const std::string& key,
                                   const std::string& fallback) {
  if (!j_.contains(key)) return fallback;
  return require_string(key);
}

std::vector<double> ObjectView::require_double_array(const std::string& key) {
  if (!j_.contains(key)) missing(path_, key);
  used_.insert(key);
  if (!j_[key].is_array()) bad_type(path_, key, "an array of numbers");
  std::vector<double> v;
  for (const auto& e : j_[key]) {
    if (!e.is_number()) bad_type(path_, key, "an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

std::vector<double> ObjectView::get_double_array(const std::string& key,
                                                 std::vector<double> fallback) {
  if (!j_.contains(key)) return fallback;
  return require_double_array(key);
}

const json& ObjectView::require_raw(const std::string& key) {
  if (!j_.contains(key)) missing(path_, key);
  used_.insert(key);
  return j_[key];
}

const json* ObjectView::optional_raw(const std::string& key) {
  if (!j_.contains(key)) return nullptr;
  used_.insert(key);
  return &j_[key];
}

void ObjectView::finish() {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!used_.count(it.key()))
      throw ConfigError("config error at " + path_ + ": unknown field '" +
                        it.key() + "'");
  }
}

json load_config_file(const std::filesystem::path& path,
                      const std::string& expected_kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  }
  if (!j.is_object())
    throw ConfigError("config error at $: expected a top-level object");
  if (!j.contains("schema_version")) missing("$", "schema_version");
  if (!j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != 1)
    throw ConfigError("config error at $: unsupported schema_version");
  if (!j.contains("kind")) missing("$", "kind");
  if (!j["kind"].is_string() || j["kind"].get<std::string>() != expected_kind)
    throw ConfigError("config error at $: expected kind '" + expected_kind +
                      "'");
  return j;
}

Vec parse_vec(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError("config error at " + path + ": expected a numeric array");
  Vec v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& e : arr) {
    if (!e.is_number())
      throw ConfigError("config error at " + path + ": expected numbers");
    v(i++) = e.get<double>();
  }
  return v;
}

Mat parse_mat(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError("config error at " + path +
                      ": expected an array of rows");
  Mat m;
  Eigen::Index r = 0;
  for (const auto& row : arr) {
    Vec v = parse_vec(row, path);
    if (r == 0) m.resize(static_cast<Eigen::Index>(arr.size()), v.size());
    if (v.size() != m.cols())
      throw ConfigError("config error at " + path + ": ragged matrix");
    m.row(r++) = v.transpose();
  }
  return m;
}

models::L63Params parse_l63(const json& j, const std::string& path) {
  ObjectView v(j, path);
  models::L63Params p;
  p.sigma = v.get_double("sigma", p.sigma);
  p.rho = v.get_double("rho", p.rho);
  p.beta = v.get_double("beta", p.beta);
  p.lambda = v.require_double("lambda");
  p.theta_deg = v.get_double("theta_deg", 0.0);
  p.dt = v.require_double("dt");
  p.sigma_q = v.require_double("sigma_q");
  v.finish();
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError("config error at " + path + ": " + e.what());
  }
  return p;
}

evidence::FilterKind parse_filter_kind(const std::string& s) {
  if (s == "kf") return evidence::FilterKind::kKalman;
  if (s == "enkf") return evidence::FilterKind::kEnkf;
  throw ConfigError("config error: filter must be 'kf' or 'enkf', got '" + s +
                    "'");
}

namespace {

FilterSettings parse_filter_settings(ObjectView& v) {
  FilterSettings f;
  f.kind = parse_filter_kind(v.get_string("filter", "enkf"));
  f.enkf.ensemble_size = v.get_int("ensemble_size", f.enkf.ensemble_size);
  f.enkf.inflation = v.get_double("inflation", f.enkf.inflation);
  if (f.enkf.ensemble_size < 2)
    throw ConfigError("config error: ensemble_size must be >= 2");
  if (!(f.enkf.inflation > 0.0))
    throw ConfigError("config error: inflation must be positive");
  return f;
}

void consume_envelope(ObjectView& v) {
  v.get_u64("schema_version", 1);
  v.get_string("kind", "");
}

}  // namespace

SimulateConfig parse_simulate(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  SimulateConfig c;
  c.model = parse_l63(v.require_raw("model"), "model");
  c.sigma_r = v.require_double("sigma_r");
  if (!(c.sigma_r >= 0.0))
    throw ConfigError("config error: sigma_r must be nonnegative");
  c.steps = v.require_int("steps");
  if (c.steps < 0) throw ConfigError("config error: steps must be >= 0");
  c.burn_in = v.get_int("burn_in", 0);
  if (c.burn_in < 0) throw ConfigError("config error: burn_in must be >= 0");
  c.seed = v.get_u64("seed", 0);
  if (const json* x0 = v.optional_raw("x0")) {
    c.x0 = parse_vec(*x0, "x0");
    if (c.x0.size() != 3)
      throw ConfigError("config error at x0: expected 3 components");
  } else {
    c.x0 = Vec3{1.0, 1.0, 1.0};
  }
  v.finish();
  return c;
}

ObserveConfig parse_observe(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  ObserveConfig c;
  c.sigma_r = v.require_double("sigma_r");
  if (!(c.sigma_r >= 0.0))
    throw ConfigError("config error: sigma_r must be nonnegative");
  c.seed = v.get_u64("seed", 0);
  if (const json* h = v.optional_raw("h_matrix"))
    c.h = parse_mat(*h, "h_matrix");
  v.finish();
  return c;
}

AttributeConfig parse_attribute(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  AttributeConfig c;
  c.factual = parse_l63(v.require_raw("factual"), "factual");
  c.counterfactual = parse_l63(v.require_raw("counterfactual"), "counterfactual");
  c.sigma_r = v.require_double("sigma_r");
  if (!(c.sigma_r >= 0.0))
    throw ConfigError("config error: sigma_r must be nonnegative");
  c.filter = parse_filter_settings(v);
  c.shared_prior = v.get_bool("shared_prior", false);
  c.attractor_samples = v.get_int("attractor_samples", 100000);
  c.attractor_stride = v.get_int("attractor_stride", 10);
  c.burn_in = v.get_int("burn_in", 10000);
  c.seed = v.get_u64("seed", 0);
  if (const json* prior = v.optional_raw("prior")) {
    ObjectView pv(*prior, "prior");
    c.prior.from_attractor = false;
    c.prior.mean = parse_vec(pv.require_raw("mean"), "prior.mean");
    c.prior.cov = parse_mat(pv.require_raw("cov"), "prior.cov");
    pv.finish();
    if (c.prior.cov.rows() != c.prior.mean.size() ||
        c.prior.cov.cols() != c.prior.mean.size())
      throw ConfigError("config error at prior: cov shape must match mean");
  }
  v.finish();
  return c;
}

experiments::SweepConfig parse_sweep(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  experiments::SweepConfig cfg = experiments::SweepConfig::defaults();
  cfg.lambda_grid = v.get_double_array("lambda_grid", cfg.lambda_grid);
  cfg.sigma_q_grid = v.get_double_array("sigma_q_grid", cfg.sigma_q_grid);
  cfg.sigma_r_grid = v.get_double_array("sigma_r_grid", cfg.sigma_r_grid);
  cfg.theta1_deg = v.get_double("theta1_deg", cfg.theta1_deg);
  cfg.n_directions = v.get_int("n_directions", cfg.n_directions);
  cfg.n_eval_sequences = v.get_int("n_eval_sequences", cfg.n_eval_sequences);
  cfg.window_steps = v.get_int("window_steps", cfg.window_steps);
  cfg.n_prob_segments = v.get_int("n_prob_segments", cfg.n_prob_segments);
  cfg.target_p1 = v.get_double("target_p1", cfg.target_p1);
  cfg.master_seed = v.get_u64("seed", 0);
  FilterSettings f = parse_filter_settings(v);
  cfg.filter = f.kind;
  cfg.enkf = f.enkf;
  cfg.condition_on_event =
      v.get_bool("condition_on_event", cfg.condition_on_event);
  cfg.shared_prior = v.get_bool("shared_prior", cfg.shared_prior);
  cfg.burn_in = v.get_int("burn_in", cfg.burn_in);
  cfg.attractor_samples = v.get_int("attractor_samples", cfg.attractor_samples);
  cfg.attractor_stride = v.get_int("attractor_stride", cfg.attractor_stride);
  v.finish();
  cfg.validate();
  return cfg;
}

AttractorConfig parse_attractor(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  AttractorConfig c;
  c.factual = parse_l63(v.require_raw("model"), "model");
  c.n_samples = v.get_int("n_samples", c.n_samples);
  c.stride = v.get_int("stride", c.stride);
  c.burn_in = v.get_int("burn_in", c.burn_in);
  c.grid_nx = v.get_int("grid_nx", c.grid_nx);
  c.grid_ny = v.get_int("grid_ny", c.grid_ny);
  c.seed = v.get_u64("seed", 0);
  if (v.has("bandwidth")) {
    auto bw = v.require_double_array("bandwidth");
    if (bw.size() != 2)
      throw ConfigError("config error at bandwidth: expected two values");
    if (!(bw[0] > 0.0 && bw[1] > 0.0))
      throw ConfigError("config error at bandwidth: values must be positive");
    c.bandwidth = Eigen::Vector2d(bw[0], bw[1]);
  }
  v.finish();
  if (c.grid_nx < 2 || c.grid_ny < 2)
    throw ConfigError("config error: grid must be at least 2x2");
  return c;
}

DemoAr1Config parse_demo_ar1(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  DemoAr1Config c;
  c.a = v.get_double("a", c.a);
  if (!(std::abs(c.a) < 1.0))
    throw ConfigError("config error: |a| must be below 1");
  c.noise_std = v.get_double("noise_std", c.noise_std);
  if (!(c.noise_std > 0.0))
    throw ConfigError("config error: noise_std must be positive");
  c.segment_steps = v.get_int("segment_steps", c.segment_steps);
  if (c.segment_steps < 1)
    throw ConfigError("config error: segment_steps must be >= 1");
  c.avg_window = v.get_int("avg_window", 0);
  if (c.avg_window < 0 || c.avg_window > c.segment_steps + 1)
    throw ConfigError("config error: avg_window out of range");
  c.target_p = v.get_double("target_p", c.target_p);
  if (!(c.target_p > 0.0 && c.target_p < 1.0))
    throw ConfigError("config error: target_p must lie in (0, 1)");
  c.n_grid = v.get_double_array("n_grid", c.n_grid);
  for (double n : c.n_grid)
    if (!(n >= 100.0))
      throw ConfigError("config error: n_grid values must be >= 100");
  c.timing_steps_grid =
      v.get_double_array("timing_steps_grid", c.timing_steps_grid);
  for (double t : c.timing_steps_grid)
    if (!(t >= 1.0))
      throw ConfigError("config error: timing_steps_grid values must be >= 1");
  c.gpd_fit_quantile = v.get_double("gpd_fit_quantile", c.gpd_fit_quantile);
  if (!(c.gpd_fit_quantile > 0.0 && c.gpd_fit_quantile < 1.0))
    throw ConfigError("config error: gpd_fit_quantile must lie in (0, 1)");
  c.n_bootstrap = v.get_int("n_bootstrap", c.n_bootstrap);
  if (c.n_bootstrap < 20)
    throw ConfigError("config error: n_bootstrap must be >= 20");
  c.seed = v.get_u64("seed", 0);
  v.finish();
  return c;
}

RocConfig parse_roc(const json& j) {
  ObjectView v(j, "$");
  consume_envelope(v);
  RocConfig c;
  c.score = v.get_string("score", "both");
  if (c.score != "dada" && c.score != "conv" && c.score != "both")
    throw ConfigError("config error: score must be dada, conv or both");
  v.finish();
  return c;
}

}  // namespace dada::config
