#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dada/evidence.hpp"
#include "dada/experiments.hpp"
#include "dada/filters.hpp"
#include "dada/models.hpp"
#include "dada/types.hpp"

namespace dada::config {

// Strict object reader: every key must be consumed; unknown or missing
// required keys raise ConfigError naming the JSON path and field.
class ObjectView {
 public:
  ObjectView(const nlohmann::json& j, std::string path);

  bool has(const std::string& key) const;
  double require_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  int require_int(const std::string& key);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string require_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  std::vector<double> require_double_array(const std::string& key);
  std::vector<double> get_double_array(const std::string& key,
                                       std::vector<double> fallback);
  const nlohmann::json& require_raw(const std::string& key);
  const nlohmann::json* optional_raw(const std::string& key);
  void finish();  // throws on unconsumed keys

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Reads and parses a JSON config file; checks schema_version and kind.
nlohmann::json load_config_file(const std::filesystem::path& path,
                                const std::string& expected_kind);

Vec parse_vec(const nlohmann::json& arr, const std::string& path);
Mat parse_mat(const nlohmann::json& arr, const std::string& path);

// Model block: dt, sigma_q and lambda are required; the classic parameter
// triple and theta default.
models::L63Params parse_l63(const nlohmann::json& j, const std::string& path);

struct FilterSettings {
  evidence::FilterKind kind = evidence::FilterKind::kEnkf;
  filters::EnkfOptions enkf{};
};

evidence::FilterKind parse_filter_kind(const std::string& s);

struct SimulateConfig {
  models::L63Params model;
  double sigma_r = 0.0;
  Vec x0;
  int steps = 0;
  int burn_in = 0;
  std::uint64_t seed = 0;
};
SimulateConfig parse_simulate(const nlohmann::json& j);

struct ObserveConfig {
  double sigma_r = 0.0;
  std::optional<Mat> h;  // defaults to identity on the state dimension
  std::uint64_t seed = 0;
};
ObserveConfig parse_observe(const nlohmann::json& j);

struct PriorSpec {
  bool from_attractor = true;
  Vec mean;  // explicit prior when from_attractor is false
  Mat cov;
};

struct AttributeConfig {
  models::L63Params factual;
  models::L63Params counterfactual;
  double sigma_r = 0.0;
  FilterSettings filter;
  PriorSpec prior;
  bool shared_prior = false;
  int attractor_samples = 100000;
  int attractor_stride = 10;
  int burn_in = 10000;
  std::uint64_t seed = 0;
};
AttributeConfig parse_attribute(const nlohmann::json& j);

experiments::SweepConfig parse_sweep(const nlohmann::json& j);

struct AttractorConfig {
  models::L63Params factual;
  int n_samples = 100000;
  int stride = 10;
  int burn_in = 10000;
  int grid_nx = 80;
  int grid_ny = 80;
  std::optional<Eigen::Vector2d> bandwidth;  // Scott's rule when absent
  std::uint64_t seed = 0;
};
AttractorConfig parse_attractor(const nlohmann::json& j);

struct DemoAr1Config {
  double a = 0.9;
  double noise_std = 1.0;
  int segment_steps = 20;    // window of segment_steps + 1 points
  int avg_window = 0;        // 0: average over the whole segment
  double target_p = 0.01;
  std::vector<double> n_grid{500, 5000, 50000};
  std::vector<double> timing_steps_grid{20, 40, 80, 160};
  double gpd_fit_quantile = 0.95;
  int n_bootstrap = 200;
  std::uint64_t seed = 0;
};
DemoAr1Config parse_demo_ar1(const nlohmann::json& j);

struct RocConfig {
  std::string score = "both";  // dada | conv | both
};
RocConfig parse_roc(const nlohmann::json& j);

}  // namespace dada::config
