#include "dada/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dada/config.hpp"
#include "dada/conventional.hpp"
#include "dada/evidence.hpp"
#include "dada/experiments.hpp"
#include "dada/io.hpp"
#include "dada/numerics.hpp"
#include "dada/version.hpp"

namespace dada::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> filter;
  std::optional<int> ensemble_size;
  std::string obs_path;
  std::string trajectory_path;
  std::string scores_path;
};

int resolve_workers(const CommonArgs& a) {
  if (a.workers) return std::max(1, *a.workers);
  if (const char* env = std::getenv("DADA_KIT_WORKERS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw ConfigError("DADA_KIT_WORKERS must be an integer");
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

fs::path prepare_out_dir(const CommonArgs& a) {
  fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw Error("cannot create output directory " + dir.string());
  return dir;
}

json config_snapshot(const json& original, const CommonArgs& a) {
  json snap = original;
  json overrides = json::object();
  if (a.seed) overrides["seed"] = *a.seed;
  if (a.filter) overrides["filter"] = *a.filter;
  if (a.ensemble_size) overrides["ensemble_size"] = *a.ensemble_size;
  if (!overrides.empty()) snap["cli_overrides"] = overrides;
  return snap;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    a.push_back(vec_to_json(m.row(r).transpose()));
  return a;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

filters::GaussianBelief attractor_prior(const models::L63Params& p,
                                        std::uint64_t master_seed,
                                        int n_samples, int burn_in,
                                        int stride) {
  Rng rng(derive_seed(master_seed, "attractor-prior", {models::content_hash(p)}));
  auto [mean, cov] =
      experiments::attractor_moments(p, n_samples, rng, burn_in, stride);
  return filters::GaussianBelief(mean, cov, filters::BeliefRole::kForecast, 0);
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const json& raw, const CommonArgs& args) {
  config::SimulateConfig cfg = config::parse_simulate(raw);
  if (args.seed) cfg.seed = *args.seed;
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  models::HmmSpec spec = models::HmmSpec::lorenz(cfg.model, cfg.sigma_r);
  Rng rng(derive_seed(cfg.seed, "simulate"));
  Vec x = cfg.x0;
  for (int t = 0; t < cfg.burn_in; ++t)
    x = models::step_stochastic(x, spec, rng, t);
  models::Trajectory traj = models::simulate(spec, x, cfg.steps, rng);
  models::ObservationSequence y = models::observe(traj, spec, rng);

  io::write_trajectory_csv(out / "trajectory.csv", traj);
  io::write_observations_csv(out / "observations.csv", y, traj.dt_per_step);

  io::Manifest manifest("simulate", cfg.seed);
  manifest.set_config(config_snapshot(raw, args));
  manifest.add_output(out / "trajectory.csv");
  manifest.add_output(out / "observations.csv");
  manifest.add_timing("total", sw.seconds());
  manifest.write(out);
  return 0;
}

// ----------------------------------------------------------------- observe

int cmd_observe(const json& raw, const CommonArgs& args) {
  if (args.trajectory_path.empty())
    throw ConfigError("observe: --trajectory is required");
  config::ObserveConfig cfg = config::parse_observe(raw);
  if (args.seed) cfg.seed = *args.seed;
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  models::Trajectory traj = io::read_trajectory_csv(args.trajectory_path);
  if (traj.states.empty()) throw ConfigError("observe: empty trajectory file");
  const auto n = traj.states[0].size();
  Mat h = cfg.h.value_or(Mat::Identity(n, n));
  if (h.cols() != n)
    throw ConfigError("observe: h_matrix has " + std::to_string(h.cols()) +
                      " columns but the state dimension is " +
                      std::to_string(n));
  Mat r = cfg.sigma_r * cfg.sigma_r * Mat::Identity(h.rows(), h.rows());
  models::HmmSpec spec = models::HmmSpec::linear(
      Mat::Identity(n, n), h, Mat::Zero(n, n), r);
  Rng rng(derive_seed(cfg.seed, "observe"));
  models::ObservationSequence y = models::observe(traj, spec, rng);
  io::write_observations_csv(out / "observations.csv", y, traj.dt_per_step);

  io::Manifest manifest("observe", cfg.seed);
  manifest.set_config(config_snapshot(raw, args));
  manifest.add_output(out / "observations.csv");
  manifest.add_timing("total", sw.seconds());
  manifest.write(out);
  return 0;
}

// --------------------------------------------------------------- attribute

int cmd_attribute(const json& raw, const CommonArgs& args) {
  if (args.obs_path.empty())
    throw ConfigError("attribute: --obs is required");
  config::AttributeConfig cfg = config::parse_attribute(raw);
  if (args.seed) cfg.seed = *args.seed;
  if (args.filter) cfg.filter.kind = config::parse_filter_kind(*args.filter);
  if (args.ensemble_size) cfg.filter.enkf.ensemble_size = *args.ensemble_size;
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  models::ObservationSequence y = io::read_observations_csv(args.obs_path);
  models::HmmSpec spec1 = models::HmmSpec::lorenz(cfg.factual, cfg.sigma_r);
  models::HmmSpec spec0 =
      models::HmmSpec::lorenz(cfg.counterfactual, cfg.sigma_r);
  for (const Vec& v : y.obs) {
    if (v.size() != spec1.obs_dim())
      throw ConfigError("attribute: observation dimension " +
                        std::to_string(v.size()) +
                        " does not match the models (" +
                        std::to_string(spec1.obs_dim()) + ")");
  }

  filters::GaussianBelief prior1 =
      cfg.prior.from_attractor
          ? attractor_prior(cfg.factual, cfg.seed, cfg.attractor_samples,
                            cfg.burn_in, cfg.attractor_stride)
          : filters::GaussianBelief(cfg.prior.mean, cfg.prior.cov,
                                    filters::BeliefRole::kForecast, 0);
  filters::GaussianBelief prior0 =
      cfg.shared_prior || !cfg.prior.from_attractor
          ? prior1
          : attractor_prior(cfg.counterfactual, cfg.seed,
                            cfg.attractor_samples, cfg.burn_in,
                            cfg.attractor_stride);

  // shared stream for the paired assimilation (common random numbers)
  Rng rng1(derive_seed(cfg.seed, "assimilate"));
  Rng rng0(derive_seed(cfg.seed, "assimilate"));
  evidence::EvidenceTrace tr1 =
      evidence::evidence_trace(spec1, prior1, y, cfg.filter.kind, rng1,
                               cfg.filter.enkf, WorldTag::kFactual);
  evidence::EvidenceTrace tr0 =
      evidence::evidence_trace(spec0, prior0, y, cfg.filter.kind, rng0,
                               cfg.filter.enkf, WorldTag::kCounterfactual);

  auto rows = experiments::evidence_figure_export(tr0, tr1);
  {
    io::CsvWriter w(out / "evidence.csv",
                    {"t", "time_days", "log_inc_counterfactual",
                     "log_inc_factual", "cum_counterfactual", "cum_factual",
                     "pn"});
    const double dt = cfg.factual.dt;
    for (const auto& r : rows) {
      w.cell(r.t)
          .cell(r.t * dt)
          .cell(r.inc_counterfactual)
          .cell(r.inc_factual)
          .cell(r.cum_counterfactual)
          .cell(r.cum_factual)
          .cell(r.pn);
      w.end_row();
    }
  }

  evidence::CausalProbs probs =
      evidence::causal_probs_from_evidence(tr0.total(), tr1.total());
  json summary;
  summary["log_evidence_factual"] = tr1.total();
  summary["log_evidence_counterfactual"] = tr0.total();
  summary["pn"] = probs.pn;
  summary["pn_clipped"] = probs.pn_clipped();
  summary["ps"] = probs.ps;
  summary["pns"] = probs.pns;
  summary["steps"] = y.steps();
  summary["filter"] =
      cfg.filter.kind == evidence::FilterKind::kKalman ? "kf" : "enkf";
  summary["ensemble_size"] = cfg.filter.enkf.ensemble_size;
  summary["inflation"] = cfg.filter.enkf.inflation;
  summary["prior_factual"] = {{"mean", vec_to_json(prior1.mean)},
                              {"cov", mat_to_json(prior1.cov)}};
  summary["prior_counterfactual"] = {{"mean", vec_to_json(prior0.mean)},
                                     {"cov", mat_to_json(prior0.cov)}};
  write_json(out / "summary.json", summary);

  io::Manifest manifest("attribute", cfg.seed);
  manifest.set_config(config_snapshot(raw, args));
  manifest.add_output(out / "evidence.csv");
  manifest.add_output(out / "summary.json");
  manifest.add_timing("total", sw.seconds());
  manifest.set_result("pn", probs.pn);
  manifest.write(out);
  return 0;
}

// ------------------------------------------------------------------- sweep

struct ScoreGroupTables {
  // one pooled ROC/Gini pair per distinct key value
  std::vector<std::tuple<double, int, int, double, double>> rows;
  // value, n_scores, n_factual, gini_dada, gini_conv
};

template <typename KeyFn>
ScoreGroupTables group_ginis(const std::vector<experiments::LabeledScore>& scores,
                             KeyFn key) {
  std::map<double, std::vector<const experiments::LabeledScore*>> groups;
  for (const auto& s : scores) groups[key(s)].push_back(&s);
  ScoreGroupTables out;
  for (auto& [value, members] : groups) {
    std::vector<double> dada, conv;
    std::vector<bool> labels;
    int n_factual = 0;
    for (const auto* s : members) {
      dada.push_back(s->pn_dada);
      conv.push_back(s->pn_conv);
      bool factual = s->true_world == WorldTag::kFactual;
      labels.push_back(factual);
      n_factual += factual ? 1 : 0;
    }
    if (n_factual == 0 || n_factual == static_cast<int>(members.size()))
      continue;  // gini undefined with a single class
    double g_dada = experiments::roc_curve(dada, labels).gini;
    double g_conv = experiments::roc_curve(conv, labels).gini;
    out.rows.emplace_back(value, static_cast<int>(members.size()), n_factual,
                          g_dada, g_conv);
  }
  return out;
}

void write_group_table(const fs::path& path, const std::string& key_name,
                       const ScoreGroupTables& t) {
  io::CsvWriter w(path, {key_name, "n_scores", "n_factual", "gini_dada",
                         "gini_conv"});
  for (const auto& [value, n, nf, gd, gc] : t.rows) {
    w.cell(value).cell(n).cell(nf).cell(gd).cell(gc);
    w.end_row();
  }
}

int cmd_sweep(const json& raw, const CommonArgs& args) {
  experiments::SweepConfig cfg = config::parse_sweep(raw);
  if (args.seed) cfg.master_seed = *args.seed;
  if (args.filter) cfg.filter = config::parse_filter_kind(*args.filter);
  if (args.ensemble_size) cfg.enkf.ensemble_size = *args.ensemble_size;
  const int workers = resolve_workers(args);
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  experiments::SweepResult result = experiments::run_sweep(cfg, workers);
  const double sweep_seconds = sw.seconds();

  io::Manifest manifest("sweep", cfg.master_seed);
  manifest.set_config(config_snapshot(raw, args));
  for (const auto& f : result.failures) {
    manifest.add_failure("combo " + std::to_string(f.combo_index) +
                         (f.dir_index >= 0
                              ? " direction " + std::to_string(f.dir_index)
                              : std::string(" (whole combo)")) +
                         ": " + f.message);
  }
  if (result.quintuplets.empty()) {
    manifest.write(out);
    std::cerr << "sweep: all tasks failed\n";
    return 1;
  }

  // quintuplet lookup for score rows
  std::map<std::pair<int, int>, const experiments::QuintupletRecord*> quints;
  for (const auto& q : result.quintuplets)
    quints[{q.combo_index, q.dir_index}] = &q;

  {
    io::CsvWriter w(out / "scores.csv",
                    {"combo_index", "dir_index", "seq_index", "lambda1",
                     "sigma_q", "sigma_r", "phi_1", "phi_2", "phi_3", "u",
                     "p0_hat", "p1_hat", "true_world", "pn_dada", "pn_conv"});
    for (const auto& s : result.scores) {
      const auto* q = quints.at({s.combo_index, s.dir_index});
      w.cell(s.combo_index)
          .cell(s.dir_index)
          .cell(s.seq_index)
          .cell(q->lambda1)
          .cell(q->sigma_q)
          .cell(q->sigma_r)
          .cell(q->phi(0))
          .cell(q->phi(1))
          .cell(q->phi(2))
          .cell(q->u)
          .cell(q->p0_hat)
          .cell(q->p1_hat)
          .cell(std::string(world_name(s.true_world)))
          .cell(s.pn_dada)
          .cell(s.pn_conv);
      w.end_row();
    }
  }

  // pooled ROC over the whole sample, both methods
  {
    io::CsvWriter w(out / "roc_overall.csv", {"method", "fpr", "tpr"});
    for (bool dada : {true, false}) {
      const std::string name = dada ? "dada" : "conventional";
      try {
        experiments::RocCurve roc = experiments::roc_of(result.scores, dada);
        for (const auto& [fpr, tpr] : roc.points) {
          w.cell(name).cell(fpr).cell(tpr);
          w.end_row();
        }
        manifest.set_result(dada ? "gini_dada" : "gini_conv", roc.gini);
        manifest.set_result(dada ? "auc_dada" : "auc_conv", roc.auc);
      } catch (const DomainError& e) {
        // a single-class evaluation set has no ROC
        manifest.add_failure("pooled ROC (" + name + "): " + e.what());
      }
    }
  }

  write_group_table(out / "gini_by_lambda.csv", "lambda1",
                    group_ginis(result.scores, [&](const auto& s) {
                      return quints.at({s.combo_index, s.dir_index})->lambda1;
                    }));
  write_group_table(out / "gini_by_sigmaQ.csv", "sigma_q",
                    group_ginis(result.scores, [&](const auto& s) {
                      return quints.at({s.combo_index, s.dir_index})->sigma_q;
                    }));
  write_group_table(out / "gini_by_sigmaR.csv", "sigma_r",
                    group_ginis(result.scores, [&](const auto& s) {
                      return quints.at({s.combo_index, s.dir_index})->sigma_r;
                    }));

  // contrast table: equal-count bins over log(p1/p0) across quintuplets
  {
    std::vector<std::pair<double, const experiments::QuintupletRecord*>> c;
    for (const auto& q : result.quintuplets)
      if (q.p0_hat > 0.0 && q.p1_hat > 0.0)
        c.emplace_back(std::log(q.p1_hat / q.p0_hat), &q);
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return a.first < b.first;
    });
    std::map<std::pair<int, int>, std::vector<const experiments::LabeledScore*>>
        by_quint;
    for (const auto& s : result.scores)
      by_quint[{s.combo_index, s.dir_index}].push_back(&s);

    const int n_bins = std::min<int>(5, static_cast<int>(c.size()));
    io::CsvWriter w(out / "gini_by_contrast.csv",
                    {"bin_index", "log_contrast_lo", "log_contrast_hi",
                     "n_quintuplets", "n_scores", "gini_dada", "gini_conv"});
    for (int b = 0; b < n_bins; ++b) {
      std::size_t lo = c.size() * static_cast<std::size_t>(b) /
                       static_cast<std::size_t>(n_bins);
      std::size_t hi = c.size() * static_cast<std::size_t>(b + 1) /
                       static_cast<std::size_t>(n_bins);
      if (lo >= hi) continue;
      std::vector<double> dada, conv;
      std::vector<bool> labels;
      int n_factual = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        const auto* q = c[i].second;
        for (const auto* s : by_quint[{q->combo_index, q->dir_index}]) {
          dada.push_back(s->pn_dada);
          conv.push_back(s->pn_conv);
          bool factual = s->true_world == WorldTag::kFactual;
          labels.push_back(factual);
          n_factual += factual ? 1 : 0;
        }
      }
      if (n_factual == 0 || n_factual == static_cast<int>(labels.size()))
        continue;
      double gd = experiments::roc_curve(dada, labels).gini;
      double gc = experiments::roc_curve(conv, labels).gini;
      w.cell(b)
          .cell(c[lo].first)
          .cell(c[hi - 1].first)
          .cell(static_cast<int>(hi - lo))
          .cell(static_cast<int>(labels.size()))
          .cell(gd)
          .cell(gc);
      w.end_row();
    }
  }

  for (const char* name :
       {"scores.csv", "roc_overall.csv", "gini_by_lambda.csv",
        "gini_by_sigmaQ.csv", "gini_by_sigmaR.csv", "gini_by_contrast.csv"})
    manifest.add_output(out / name);
  manifest.add_timing("sweep", sweep_seconds);
  manifest.add_timing("total", sw.seconds());
  manifest.set_result("n_scores", static_cast<int>(result.scores.size()));
  manifest.set_result("n_quintuplets",
                      static_cast<int>(result.quintuplets.size()));
  manifest.set_result("n_failures", static_cast<int>(result.failures.size()));
  manifest.set_result("workers", workers);
  manifest.write(out);
  return 0;
}

// --------------------------------------------------------------------- roc

int cmd_roc(const json& raw, const CommonArgs& args) {
  if (args.scores_path.empty()) throw ConfigError("roc: --scores is required");
  config::RocConfig cfg = config::parse_roc(raw);
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  io::CsvTable t = io::read_csv(args.scores_path);
  int col_world = t.column("true_world");
  if (col_world < 0)
    throw ConfigError("roc: scores file needs a true_world column");
  std::vector<bool> labels;
  labels.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& v = t.rows[r][static_cast<std::size_t>(col_world)];
    if (v != "factual" && v != "counterfactual")
      throw ConfigError("roc: bad true_world value at data row " +
                        std::to_string(r + 1));
    labels.push_back(v == "factual");
  }

  io::Manifest manifest("roc", 0);
  manifest.set_config(config_snapshot(raw, args));
  json summary;
  auto emit = [&](const std::string& name, const std::string& column) {
    int col = t.column(column);
    if (col < 0)
      throw ConfigError("roc: scores file needs a " + column + " column");
    std::vector<double> scores;
    scores.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      scores.push_back(t.number(r, col));
    experiments::RocCurve roc = experiments::roc_curve(scores, labels);
    fs::path path = out / ("roc_" + name + ".csv");
    io::CsvWriter w(path, {"fpr", "tpr"});
    for (const auto& [fpr, tpr] : roc.points) {
      w.cell(fpr).cell(tpr);
      w.end_row();
    }
    summary[name] = {{"auc", roc.auc}, {"gini", roc.gini}};
    manifest.add_output(path);
  };
  if (cfg.score == "dada" || cfg.score == "both") emit("dada", "pn_dada");
  if (cfg.score == "conv" || cfg.score == "both") emit("conv", "pn_conv");
  write_json(out / "summary.json", summary);
  manifest.add_output(out / "summary.json");
  manifest.add_timing("total", sw.seconds());
  manifest.write(out);
  return 0;
}

// --------------------------------------------------------------- attractor

int cmd_attractor(const json& raw, const CommonArgs& args) {
  config::AttractorConfig cfg = config::parse_attractor(raw);
  if (args.seed) cfg.seed = *args.seed;
  fs::path out = prepare_out_dir(args);

  Stopwatch sw;
  const models::L63Params counterfactual = cfg.factual.counterfactual();
  auto sample_world = [&](const models::L63Params& p) {
    Rng rng(derive_seed(cfg.seed, "attractor-sample", {models::content_hash(p)}));
    return experiments::attractor_sample(p, cfg.n_samples, rng, cfg.burn_in,
                                         cfg.stride);
  };
  experiments::AttractorSample s1 = sample_world(cfg.factual);
  experiments::AttractorSample s0 = sample_world(counterfactual);

  auto [v1, v2] = experiments::leading_plane(s1.cov);
  auto project = [&](const Mat& states) {
    Mat p(states.rows(), 2);
    p.col(0) = states * v1;
    p.col(1) = states * v2;
    return p;
  };
  Mat p1 = project(s1.states);
  Mat p0 = project(s0.states);

  Eigen::Vector2d bw =
      cfg.bandwidth ? *cfg.bandwidth : experiments::kde_bandwidth_scott(p1);
  Mat both(p1.rows() + p0.rows(), 2);
  both << p1, p0;
  experiments::Grid2d grid =
      experiments::kde_grid(both, bw, cfg.grid_nx, cfg.grid_ny);
  experiments::Kde2d k1 = experiments::kde2d(p1, grid, bw);
  experiments::Kde2d k0 = experiments::kde2d(p0, grid, bw);

  auto write_grid = [&](const fs::path& path, const Mat& density) {
    io::CsvWriter w(path, {"u", "v", "density"});
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        w.cell(grid.x(i)).cell(grid.y(j)).cell(density(j, i));
        w.end_row();
      }
  };
  write_grid(out / "kde_factual.csv", k1.density);
  write_grid(out / "kde_counterfactual.csv", k0.density);
  write_grid(out / "kde_difference.csv", k1.density - k0.density);

  json moments;
  moments["factual"] = {{"mean", vec_to_json(s1.mean)},
                        {"cov", mat_to_json(s1.cov)}};
  moments["counterfactual"] = {{"mean", vec_to_json(s0.mean)},
                               {"cov", mat_to_json(s0.cov)}};
  moments["plane"] = {{"first", vec_to_json(v1)}, {"second", vec_to_json(v2)}};
  moments["bandwidth"] = {bw(0), bw(1)};
  moments["n_samples"] = cfg.n_samples;
  write_json(out / "moments.json", moments);

  io::Manifest manifest("attractor", cfg.seed);
  manifest.set_config(config_snapshot(raw, args));
  for (const char* name : {"kde_factual.csv", "kde_counterfactual.csv",
                           "kde_difference.csv", "moments.json"})
    manifest.add_output(out / name);
  manifest.add_timing("total", sw.seconds());
  manifest.write(out);
  return 0;
}

// ---------------------------------------------------------------- demo-ar1

// Variance of the W-point window mean of the stationary scalar AR(1).
double ar1_window_mean_variance(double a, double noise_std, int w) {
  const double c0 = noise_std * noise_std / (1.0 - a * a);
  double acc = static_cast<double>(w) * c0;
  for (int h = 1; h < w; ++h)
    acc += 2.0 * static_cast<double>(w - h) * c0 * std::pow(a, h);
  return acc / (static_cast<double>(w) * static_cast<double>(w));
}

// Largest W-point moving-average within one segment.
double segment_phi(const std::vector<double>& seg, int w) {
  double sum = 0.0;
  for (int i = 0; i < w; ++i) sum += seg[static_cast<std::size_t>(i)];
  double best = sum;
  for (std::size_t s = static_cast<std::size_t>(w); s < seg.size(); ++s) {
    sum += seg[s] - seg[s - static_cast<std::size_t>(w)];
    best = std::max(best, sum);
  }
  return best / w;
}

int cmd_demo_ar1(const json& raw, const CommonArgs& args) {
  config::DemoAr1Config cfg = config::parse_demo_ar1(raw);
  if (args.seed) cfg.seed = *args.seed;
  fs::path out = prepare_out_dir(args);

  Stopwatch total_sw;
  models::Ar1Spec spec = models::Ar1Spec::scalar(cfg.a, cfg.noise_std);
  const int points = cfg.segment_steps + 1;
  const int w = cfg.avg_window == 0 ? points : cfg.avg_window;

  // Event threshold with the configured true exceedance probability. The
  // window mean is Gaussian, so the quantile is exact when the averaging
  // window spans the whole segment; otherwise calibrate on a long run.
  double u;
  bool exact_truth = (w == points);
  if (exact_truth) {
    u = normal_quantile(1.0 - cfg.target_p) *
        std::sqrt(ar1_window_mean_variance(cfg.a, cfg.noise_std, w));
  } else {
    const int n_calib = static_cast<int>(
        10.0 * *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end()));
    Rng rng(derive_seed(cfg.seed, "demo-calibrate"));
    std::vector<double> maxima;
    maxima.reserve(static_cast<std::size_t>(n_calib));
    std::vector<double> seg(static_cast<std::size_t>(points));
    double y = spec.prior_mean(0) + spec.prior_std * rng.gaussian();
    for (int i = 0; i < n_calib; ++i) {
      for (int t = 0; t < points; ++t) {
        if (!(i == 0 && t == 0)) y = cfg.a * y + cfg.noise_std * rng.gaussian();
        seg[static_cast<std::size_t>(t)] = y;
      }
      maxima.push_back(segment_phi(seg, w));
    }
    u = conventional::calibrate_threshold(std::move(maxima), cfg.target_p);
  }

  // Conventional path per sample size: one long run split into segments,
  // GPD tail above the configured quantile, bootstrap band.
  io::CsvWriter tail_csv(out / "tail_prob_vs_n.csv",
                         {"n_segments", "p_empirical", "p_gpd", "p_lo95",
                          "p_hi95", "p_true"});
  io::CsvWriter timing_csv(out / "timing.csv",
                           {"n_segments", "conventional_seconds",
                            "dada_seconds"});
  std::vector<double> largest_maxima;
  double largest_fit_threshold = 0.0;
  double largest_fit_quantile = cfg.gpd_fit_quantile;

  // One closed-form evidence evaluation, timed over enough repetitions to
  // resolve the clock.
  auto time_closed_form = [&](int steps, std::uint64_t seed) {
    Rng rng(seed);
    models::ObservationSequence seq = models::ar1_simulate(spec, steps, rng);
    int reps = std::max(1, 200000 / (steps + 1));
    volatile double sink = 0.0;
    Stopwatch sw;
    for (int rundup = 0; rundup < reps; ++rundup)
      sink = sink + models::ar1_loglik(seq, spec);
    return sw.seconds() / reps;
  };

  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const int n = static_cast<int>(cfg.n_grid[gi]);
    Rng rng(derive_seed(cfg.seed, "demo-mc", {static_cast<std::uint64_t>(n)}));
    // keep enough tail data at small n: the fit threshold may not exceed
    // the quantile that leaves ~35 exceedances
    const double fit_quantile =
        std::min(cfg.gpd_fit_quantile, 1.0 - 35.0 / static_cast<double>(n));

    Stopwatch mc_sw;
    std::vector<double> maxima;
    maxima.reserve(static_cast<std::size_t>(n));
    std::vector<double> seg(static_cast<std::size_t>(points));
    double y = spec.prior_mean(0) + spec.prior_std * rng.gaussian();
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < points; ++t) {
        if (!(i == 0 && t == 0)) y = cfg.a * y + cfg.noise_std * rng.gaussian();
        seg[static_cast<std::size_t>(t)] = y;
      }
      maxima.push_back(segment_phi(seg, w));
    }
    std::vector<double> sorted = maxima;
    std::sort(sorted.begin(), sorted.end());
    auto qidx = static_cast<std::size_t>(fit_quantile *
                                         static_cast<double>(sorted.size() - 1));
    double fit_threshold = sorted[qidx];
    conventional::GpdFit fit = conventional::gpd_tail_fit(maxima, fit_threshold);
    double p_gpd = fit.tail_prob(u);
    const double mc_seconds = mc_sw.seconds();

    double p_emp =
        static_cast<double>(std::count_if(maxima.begin(), maxima.end(),
                                          [&](double m) { return m >= u; })) /
        n;
    Rng boot_rng(
        derive_seed(cfg.seed, "demo-boot", {static_cast<std::uint64_t>(n)}));
    auto [lo, hi] = conventional::gpd_tail_prob_band(
        maxima, fit_quantile, u, cfg.n_bootstrap, 0.95, boot_rng);

    tail_csv.cell(n).cell(p_emp).cell(p_gpd).cell(lo).cell(hi).cell(
        cfg.target_p);
    tail_csv.end_row();

    double dada_seconds = time_closed_form(
        cfg.segment_steps, derive_seed(cfg.seed, "demo-evidence-seq",
                                       {static_cast<std::uint64_t>(n)}));
    timing_csv.cell(n).cell(mc_seconds).cell(dada_seconds);
    timing_csv.end_row();

    if (gi + 1 == cfg.n_grid.size()) {
      largest_maxima = std::move(maxima);
      largest_fit_threshold = fit_threshold;
      largest_fit_quantile = fit_quantile;
    }
  }

  // Closed-form evidence cost as a function of sequence length.
  {
    io::CsvWriter w2(out / "timing_dada_by_steps.csv",
                     {"sequence_steps", "seconds_per_evaluation"});
    for (double steps_d : cfg.timing_steps_grid) {
      int steps = static_cast<int>(steps_d);
      double sec = time_closed_form(
          steps, derive_seed(cfg.seed, "demo-evidence-steps",
                             {static_cast<std::uint64_t>(steps)}));
      w2.cell(steps).cell(sec);
      w2.end_row();
    }
  }

  // Return levels at the largest sample size.
  {
    conventional::GpdFit fit =
        conventional::gpd_tail_fit(largest_maxima, largest_fit_threshold);
    std::vector<double> sorted = largest_maxima;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    io::CsvWriter w2(out / "return_levels.csv",
                     {"return_period_segments", "level_empirical", "level_gpd",
                      "level_lo95", "level_hi95"});
    const double r_min = 1.0 / (1.0 - largest_fit_quantile) * 1.5;
    const double r_max = static_cast<double>(n);
    const int n_points = 12;
    Rng boot_rng(derive_seed(cfg.seed, "demo-boot-levels"));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int i = 0; i < n_points; ++i) {
      double r = r_min * std::pow(r_max / r_min,
                                  static_cast<double>(i) / (n_points - 1));
      auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / r)));
      double emp = sorted[n - std::min(k, n)];
      double gpd_level = fit.return_level(r);
      // bootstrap band on the level
      std::vector<double> levels;
      std::vector<double> resample(n);
      for (int b = 0; b < cfg.n_bootstrap; ++b) {
        for (auto& v : resample) v = largest_maxima[pick(boot_rng.engine())];
        std::vector<double> rs = resample;
        std::sort(rs.begin(), rs.end());
        auto qi = static_cast<std::size_t>(largest_fit_quantile *
                                           static_cast<double>(rs.size() - 1));
        try {
          levels.push_back(
              conventional::gpd_tail_fit(resample, rs[qi]).return_level(r));
        } catch (const Error&) {
        }
      }
      double lo = gpd_level, hi = gpd_level;
      if (levels.size() >= 10) {
        std::sort(levels.begin(), levels.end());
        lo = levels[static_cast<std::size_t>(0.025 *
                                             static_cast<double>(levels.size() - 1))];
        hi = levels[static_cast<std::size_t>(0.975 *
                                             static_cast<double>(levels.size() - 1))];
      }
      w2.cell(r).cell(emp).cell(gpd_level).cell(lo).cell(hi);
      w2.end_row();
    }
  }

  json summary;
  summary["threshold_u"] = u;
  summary["threshold_exact"] = exact_truth;
  summary["target_p"] = cfg.target_p;
  summary["segment_points"] = points;
  summary["avg_window_points"] = w;
  summary["stationary_sd"] = spec.stationary_sd();
  write_json(out / "summary.json", summary);

  io::Manifest manifest("demo-ar1", cfg.seed);
  manifest.set_config(config_snapshot(raw, args));
  for (const char* name :
       {"tail_prob_vs_n.csv", "timing.csv", "timing_dada_by_steps.csv",
        "return_levels.csv", "summary.json"})
    manifest.add_output(out / name);
  manifest.add_timing("total", total_sw.seconds());
  manifest.write(out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"dada-kit: two-world model evidence and event attribution"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    auto* opt = sub->add_option("--config", common.config_path,
                                "JSON configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "override the config master seed");
    sub->add_option("--workers", common.workers,
                    "worker threads (default: DADA_KIT_WORKERS or hardware)");
    sub->add_option("--filter", common.filter, "kf or enkf")
        ->check(CLI::IsMember({"kf", "enkf"}));
    sub->add_option("--ensemble-size", common.ensemble_size,
                    "EnKF ensemble size");
  };

  CLI::App* c_simulate =
      app.add_subcommand("simulate", "simulate a trajectory and observations");
  add_common(c_simulate);
  CLI::App* c_observe =
      app.add_subcommand("observe", "observe an existing trajectory");
  add_common(c_observe);
  c_observe->add_option("--trajectory", common.trajectory_path,
                        "trajectory csv to observe");
  CLI::App* c_attribute = app.add_subcommand(
      "attribute", "two-world evidence and PN for an observation file");
  add_common(c_attribute);
  c_attribute->add_option("--obs", common.obs_path, "observations csv");
  CLI::App* c_sweep =
      app.add_subcommand("sweep", "mixed-world scoring sweep with ROC/Gini");
  add_common(c_sweep);
  CLI::App* c_roc =
      app.add_subcommand("roc", "ROC/Gini tables from a scores file");
  add_common(c_roc);
  c_roc->add_option("--scores", common.scores_path, "scores csv from a sweep");
  CLI::App* c_attractor = app.add_subcommand(
      "attractor", "attractor moments, leading plane and projected densities");
  add_common(c_attractor);
  CLI::App* c_demo =
      app.add_subcommand("demo-ar1", "scalar AR(1) baseline comparison");
  add_common(c_demo);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_simulate))
      return cmd_simulate(
          config::load_config_file(common.config_path, "simulate"), common);
    if (app.got_subcommand(c_observe))
      return cmd_observe(
          config::load_config_file(common.config_path, "observe"), common);
    if (app.got_subcommand(c_attribute))
      return cmd_attribute(
          config::load_config_file(common.config_path, "attribute"), common);
    if (app.got_subcommand(c_sweep))
      return cmd_sweep(config::load_config_file(common.config_path, "sweep"),
                       common);
    if (app.got_subcommand(c_roc))
      return cmd_roc(config::load_config_file(common.config_path, "roc"),
                     common);
    if (app.got_subcommand(c_attractor))
      return cmd_attractor(
          config::load_config_file(common.config_path, "attractor"), common);
    if (app.got_subcommand(c_demo))
      return cmd_demo_ar1(
          config::load_config_file(common.config_path, "demo_ar1"), common);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dada::cli
