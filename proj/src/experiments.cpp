#include "dada/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "dada/numerics.hpp"
#include "dada/parallel.hpp"

namespace dada::experiments {

using conventional::EventSpec;
using evidence::EvidenceTrace;
using filters::BeliefRole;
using filters::GaussianBelief;
using models::HmmSpec;
using models::L63Params;
using models::ObservationSequence;

namespace {

// Start off the origin (a fixed point of the unforced deterministic flow)
// so burn-in reaches the attractor even with sigma_q = 0.
const Vec3 kSpinupStart{1.0, 1.0, 1.0};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

AttractorSample attractor_sample(const L63Params& p, int n_samples, Rng& rng,
                                 int burn_in, int stride) {
  p.validate();
  if (n_samples < 1000)
    throw DomainError("attractor_sample: need at least 1000 samples");
  if (stride < 1) throw DomainError("attractor_sample: stride must be >= 1");
  HmmSpec spec = HmmSpec::lorenz(p, 0.0);

  Vec x = kSpinupStart;
  for (int t = 0; t < burn_in; ++t)
    x = models::step_stochastic(x, spec, rng, t);

  AttractorSample out;
  out.states = Mat(n_samples, 3);
  long step = burn_in;
  for (int i = 0; i < n_samples; ++i) {
    for (int s = 0; s < stride; ++s)
      x = models::step_stochastic(x, spec, rng, step++);
    out.states.row(i) = x.transpose();
  }
  out.mean = out.states.colwise().mean().transpose();
  Mat centered = out.states.rowwise() - out.mean.transpose();
  out.cov = symmetrize(centered.transpose() * centered / (n_samples - 1));
  return out;
}

std::pair<Vec, Mat> attractor_moments(const L63Params& p, int n_samples,
                                      Rng& rng, int burn_in, int stride) {
  AttractorSample s = attractor_sample(p, n_samples, rng, burn_in, stride);
  return {s.mean, s.cov};
}

std::pair<Vec, Vec> leading_plane(const Mat& cov) {
  if (cov.rows() != cov.cols() || cov.rows() < 2)
    throw DimensionError("leading_plane: need a square covariance, dim >= 2");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(cov));
  const auto n = cov.rows();
  // eigenvalues come out ascending
  if (es.eigenvalues()(n - 2) <= 1e-12 * std::max(es.eigenvalues()(n - 1), 0.0))
    throw DomainError("leading_plane: covariance rank below 2");
  auto fix_sign = [](Vec v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    return v;
  };
  Vec first = fix_sign(es.eigenvectors().col(n - 1));
  Vec second = fix_sign(es.eigenvectors().col(n - 2));
  return {first, second};
}

Grid2d kde_grid(const Mat& points, const Eigen::Vector2d& bandwidth, int nx,
                int ny, double pad) {
  if (points.rows() < 1 || points.cols() != 2)
    throw DimensionError("kde_grid: points must be n x 2");
  Grid2d g;
  g.nx = nx;
  g.ny = ny;
  g.xmin = points.col(0).minCoeff() - pad * bandwidth(0);
  g.xmax = points.col(0).maxCoeff() + pad * bandwidth(0);
  g.ymin = points.col(1).minCoeff() - pad * bandwidth(1);
  g.ymax = points.col(1).maxCoeff() + pad * bandwidth(1);
  return g;
}

Eigen::Vector2d kde_bandwidth_scott(const Mat& points) {
  const auto n = points.rows();
  if (n < 2) throw DomainError("kde_bandwidth_scott: need at least 2 points");
  Eigen::Vector2d sd;
  for (int k = 0; k < 2; ++k) {
    double m = points.col(k).mean();
    sd(k) = std::sqrt((points.col(k).array() - m).square().sum() / (n - 1));
  }
  return sd * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

Kde2d kde2d(const Mat& points, const Grid2d& grid,
            const Eigen::Vector2d& bandwidth) {
  if (points.rows() < 1 || points.cols() != 2)
    throw DimensionError("kde2d: points must be n x 2");
  if (!(bandwidth(0) > 0.0 && bandwidth(1) > 0.0))
    throw DomainError("kde2d: bandwidth must be positive");
  if (grid.nx < 2 || grid.ny < 2) throw DomainError("kde2d: grid too small");

  Kde2d out;
  out.grid = grid;
  out.density = Mat::Zero(grid.ny, grid.nx);
  const double bx = bandwidth(0), by = bandwidth(1);
  const double cut = 4.0;  // kernel truncated at four bandwidths
  const double dx = grid.dx(), dy = grid.dy();

  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const double px = points(p, 0), py = points(p, 1);
    int i0 = std::max(0, static_cast<int>(std::ceil((px - cut * bx - grid.xmin) / dx)));
    int i1 = std::min(grid.nx - 1,
                      static_cast<int>(std::floor((px + cut * bx - grid.xmin) / dx)));
    int j0 = std::max(0, static_cast<int>(std::ceil((py - cut * by - grid.ymin) / dy)));
    int j1 = std::min(grid.ny - 1,
                      static_cast<int>(std::floor((py + cut * by - grid.ymin) / dy)));
    for (int j = j0; j <= j1; ++j) {
      double zy = (grid.y(j) - py) / by;
      double ky = std::exp(-0.5 * zy * zy);
      for (int i = i0; i <= i1; ++i) {
        double zx = (grid.x(i) - px) / bx;
        out.density(j, i) += ky * std::exp(-0.5 * zx * zx);
      }
    }
  }
  out.density /= static_cast<double>(points.rows()) * 2.0 * M_PI * bx * by;
  return out;
}

double grid_integral(const Kde2d& k) {
  const Mat& d = k.density;
  double sum = 0.0;
  for (int j = 0; j < k.grid.ny; ++j) {
    double wy = (j == 0 || j == k.grid.ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i < k.grid.nx; ++i) {
      double wx = (i == 0 || i == k.grid.nx - 1) ? 0.5 : 1.0;
      sum += wx * wy * d(j, i);
    }
  }
  return sum * k.grid.dx() * k.grid.dy();
}

SweepConfig SweepConfig::defaults() {
  SweepConfig cfg;
  cfg.lambda_grid = linspace(0.0, 40.0, 10);
  cfg.sigma_q_grid = linspace(0.1, 0.5, 10);
  cfg.sigma_r_grid = linspace(0.1, 1.0, 10);
  return cfg;
}

void SweepConfig::validate() const {
  if (lambda_grid.empty() || sigma_q_grid.empty() || sigma_r_grid.empty())
    throw ConfigError("sweep: all parameter grids must be nonempty");
  for (double l : lambda_grid)
    if (!(l >= 0.0)) throw ConfigError("sweep: lambda values must be >= 0");
  for (double q : sigma_q_grid)
    if (!(q >= 0.0)) throw ConfigError("sweep: sigma_q values must be >= 0");
  for (double r : sigma_r_grid)
    if (!(r >= 0.0)) throw ConfigError("sweep: sigma_r values must be >= 0");
  if (window_steps < 1) throw ConfigError("sweep: window_steps must be >= 1");
  if (n_directions < 1) throw ConfigError("sweep: n_directions must be >= 1");
  if (n_eval_sequences < 1)
    throw ConfigError("sweep: n_eval_sequences must be >= 1");
  if (!(target_p1 > 0.0 && target_p1 <= 1.0))
    throw ConfigError("sweep: target_p1 must lie in (0, 1]");
  if (n_prob_segments < static_cast<int>(std::ceil(1.0 / target_p1)))
    throw ConfigError("sweep: n_prob_segments too small for target_p1");
  if (enkf.ensemble_size < 2)
    throw ConfigError("sweep: ensemble size must be >= 2");
  if (attractor_samples < 1000)
    throw ConfigError("sweep: attractor_samples must be >= 1000");
  if (attractor_stride < 1 || burn_in < 0)
    throw ConfigError("sweep: bad burn-in or stride");
}

std::array<double, 3> SweepConfig::combo_values(int combo_index) const {
  const int nr = static_cast<int>(sigma_r_grid.size());
  const int nq = static_cast<int>(sigma_q_grid.size());
  int ir = combo_index % nr;
  int iq = (combo_index / nr) % nq;
  int il = combo_index / (nr * nq);
  return {lambda_grid[static_cast<std::size_t>(il)],
          sigma_q_grid[static_cast<std::size_t>(iq)],
          sigma_r_grid[static_cast<std::size_t>(ir)]};
}

namespace {

struct ComboOutput {
  std::vector<QuintupletRecord> quintuplets;
  std::vector<LabeledScore> scores;
  std::vector<SweepFailure> failures;
};

// Consecutive non-overlapping windows from one stationary chain.
class WindowChain {
 public:
  WindowChain(const HmmSpec& spec, int burn_in, Rng& rng)
      : spec_(spec), rng_(rng), x_(kSpinupStart) {
    for (int t = 0; t < burn_in; ++t)
      x_ = models::step_stochastic(x_, spec_, rng_, t);
  }

  ObservationSequence next_window(int window_steps) {
    ObservationSequence w;
    w.obs.reserve(static_cast<std::size_t>(window_steps) + 1);
    const bool noisy = spec_.R().trace() > 0.0;
    for (int i = 0; i <= window_steps; ++i) {
      if (!first_point_) x_ = models::step_stochastic(x_, spec_, rng_, step_++);
      first_point_ = false;
      Vec y = spec_.H() * x_;
      if (noisy) y = mvn_sample(y, spec_.obs_noise_sqrt(), rng_);
      w.obs.push_back(std::move(y));
    }
    return w;
  }

 private:
  const HmmSpec& spec_;
  Rng& rng_;
  Vec x_;
  long step_ = 0;
  bool first_point_ = true;
};

// Attractor prior moments, cached across combos; the key and the random
// stream depend only on the dynamics parameters, so every combo (and both
// worlds, when their parameters coincide) sees identical moments.
class PriorCache {
 public:
  PriorCache(const SweepConfig& cfg) : cfg_(cfg) {}

  std::pair<Vec, Mat> get(const L63Params& p) {
    const std::uint64_t key = models::content_hash(p);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    Rng rng(derive_seed(cfg_.master_seed, "attractor-prior", {key}));
    auto moments = attractor_moments(p, cfg_.attractor_samples, rng,
                                     cfg_.burn_in, cfg_.attractor_stride);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(key, std::move(moments)).first->second;
  }

 private:
  const SweepConfig& cfg_;
  std::mutex mu_;
  std::map<std::uint64_t, std::pair<Vec, Mat>> cache_;
};

std::vector<ObservationSequence> collect_eval_windows(
    const SweepConfig& cfg, const HmmSpec& spec, const EventSpec& ev,
    int count, std::uint64_t seed) {
  std::vector<ObservationSequence> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 0) return out;
  Rng rng(seed);
  WindowChain chain(spec, cfg.burn_in, rng);
  long scanned = 0;
  while (static_cast<int>(out.size()) < count) {
    if (scanned >= cfg.max_scan_windows)
      throw Error("evaluation sampling hit the window cap before finding " +
                  std::to_string(count) + " event windows");
    ObservationSequence w = chain.next_window(cfg.window_steps);
    ++scanned;
    if (!cfg.condition_on_event || conventional::event_occurs(w, ev))
      out.push_back(std::move(w));
  }
  return out;
}

ComboOutput run_combo(const SweepConfig& cfg, int c, PriorCache& priors) {
  ComboOutput out;
  const auto [lambda1, sigma_q, sigma_r] = cfg.combo_values(c);

  L63Params factual;
  factual.lambda = lambda1;
  factual.theta_deg = cfg.theta1_deg;
  factual.sigma_q = sigma_q;
  const L63Params counterfactual = factual.counterfactual();

  const HmmSpec spec1 = HmmSpec::lorenz(factual, sigma_r);
  const HmmSpec spec0 = HmmSpec::lorenz(counterfactual, sigma_r);
  const std::uint64_t hash1 = spec1.params_hash();
  const std::uint64_t hash0 = spec0.params_hash();

  auto [mean1, cov1] = priors.get(factual);
  auto [mean0, cov0] = priors.get(counterfactual);
  const GaussianBelief prior1(mean1, cov1, BeliefRole::kForecast, 0);
  const GaussianBelief prior0 = cfg.shared_prior
                                    ? prior1
                                    : GaussianBelief(mean0, cov0,
                                                     BeliefRole::kForecast, 0);

  std::vector<Vec> phis;
  phis.reserve(static_cast<std::size_t>(cfg.n_directions));
  for (int j = 0; j < cfg.n_directions; ++j) {
    Rng rng(derive_seed(cfg.master_seed, "direction",
                        {static_cast<std::uint64_t>(c),
                         static_cast<std::uint64_t>(j)}));
    Vec v(3);
    for (int i = 0; i < 3; ++i) v(i) = rng.gaussian();
    v.normalize();
    phis.push_back(std::move(v));
  }

  // One long stationary run per world provides every direction's
  // per-window projection maxima.
  auto collect_maxima = [&](const HmmSpec& spec, std::uint64_t hash) {
    std::vector<std::vector<double>> maxima(
        static_cast<std::size_t>(cfg.n_directions));
    for (auto& m : maxima) m.reserve(static_cast<std::size_t>(cfg.n_prob_segments));
    Rng rng(derive_seed(cfg.master_seed, "prob-run", {hash}));
    conventional::segmented_observations(
        spec, kSpinupStart, cfg.n_prob_segments, cfg.window_steps, cfg.burn_in,
        rng, [&](int, const ObservationSequence& w) {
          for (int j = 0; j < cfg.n_directions; ++j)
            maxima[static_cast<std::size_t>(j)].push_back(
                conventional::projection_max(w, phis[static_cast<std::size_t>(j)]));
        });
    return maxima;
  };
  const auto maxima1 = collect_maxima(spec1, hash1);
  const auto maxima0 = collect_maxima(spec0, hash0);

  for (int j = 0; j < cfg.n_directions; ++j) {
    const std::size_t scores_before = out.scores.size();
    try {
      const auto& m1 = maxima1[static_cast<std::size_t>(j)];
      const auto& m0 = maxima0[static_cast<std::size_t>(j)];
      const double u = conventional::calibrate_threshold(m1, cfg.target_p1);
      auto freq = [u](const std::vector<double>& m) {
        auto hits = std::count_if(m.begin(), m.end(),
                                  [u](double v) { return v >= u; });
        return static_cast<double>(hits) / static_cast<double>(m.size());
      };
      QuintupletRecord rec;
      rec.combo_index = c;
      rec.dir_index = j;
      rec.lambda1 = lambda1;
      rec.sigma_q = sigma_q;
      rec.sigma_r = sigma_r;
      rec.phi = phis[static_cast<std::size_t>(j)];
      rec.u = u;
      rec.p1_hat = freq(m1);
      rec.p0_hat = freq(m0);
      rec.se1 = std::sqrt(rec.p1_hat * (1.0 - rec.p1_hat) / cfg.n_prob_segments);
      rec.se0 = std::sqrt(rec.p0_hat * (1.0 - rec.p0_hat) / cfg.n_prob_segments);
      rec.pn_conv = conventional::pn_conventional(rec.p0_hat, rec.p1_hat);

      const double total = rec.p0_hat + rec.p1_hat;
      int n_factual = static_cast<int>(
          std::lround(cfg.n_eval_sequences * rec.p1_hat / total));
      n_factual = std::min(n_factual, cfg.n_eval_sequences);
      const int n_counterfactual = cfg.n_eval_sequences - n_factual;
      rec.n_factual = n_factual;
      rec.n_counterfactual = n_counterfactual;

      EventSpec ev{rec.phi, u, cfg.window_steps};
      auto windows1 = collect_eval_windows(
          cfg, spec1, ev, n_factual,
          derive_seed(cfg.master_seed, "eval-chain",
                      {static_cast<std::uint64_t>(c),
                       static_cast<std::uint64_t>(j), hash1}));
      auto windows0 = collect_eval_windows(
          cfg, spec0, ev, n_counterfactual,
          derive_seed(cfg.master_seed, "eval-chain",
                      {static_cast<std::uint64_t>(c),
                       static_cast<std::uint64_t>(j), hash0}));

      int seq = 0;
      auto score_window = [&](const ObservationSequence& w, WorldTag label) {
        // Both worlds assimilate with the same derived stream (common random
        // numbers): the paired evidence difference loses sampling noise, and
        // identical worlds yield bitwise-identical traces, hence PN = 0.
        const std::uint64_t assim_seed =
            derive_seed(cfg.master_seed, "assimilate",
                        {static_cast<std::uint64_t>(c),
                         static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(seq)});
        Rng rng1(assim_seed);
        Rng rng0(assim_seed);
        EvidenceTrace tr1 =
            evidence::evidence_trace(spec1, prior1, w, cfg.filter, rng1,
                                     cfg.enkf, WorldTag::kFactual);
        EvidenceTrace tr0 =
            evidence::evidence_trace(spec0, prior0, w, cfg.filter, rng0,
                                     cfg.enkf, WorldTag::kCounterfactual);
        LabeledScore s;
        s.combo_index = c;
        s.dir_index = j;
        s.seq_index = seq;
        s.true_world = label;
        s.pn_dada =
            evidence::causal_probs_from_evidence(tr0.total(), tr1.total()).pn;
        s.pn_conv = rec.pn_conv;
        out.scores.push_back(s);
        ++seq;
      };
      for (const auto& w : windows1) score_window(w, WorldTag::kFactual);
      for (const auto& w : windows0) score_window(w, WorldTag::kCounterfactual);

      out.quintuplets.push_back(std::move(rec));
    } catch (const std::exception& e) {
      // drop any partial scores so every score keeps a quintuplet record
      out.scores.resize(scores_before);
      out.failures.push_back({c, j, e.what()});
    }
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, int n_workers) {
  cfg.validate();
  const int n_combos = cfg.n_combos();
  PriorCache priors(cfg);
  std::vector<ComboOutput> outputs(static_cast<std::size_t>(n_combos));

  parallel_for(n_combos, n_workers, [&](int c) {
    try {
      outputs[static_cast<std::size_t>(c)] = run_combo(cfg, c, priors);
    } catch (const std::exception& e) {
      outputs[static_cast<std::size_t>(c)].failures.push_back({c, -1, e.what()});
    }
  });

  SweepResult result;
  result.config = cfg;
  for (auto& o : outputs) {
    std::move(o.quintuplets.begin(), o.quintuplets.end(),
              std::back_inserter(result.quintuplets));
    std::move(o.scores.begin(), o.scores.end(),
              std::back_inserter(result.scores));
    std::move(o.failures.begin(), o.failures.end(),
              std::back_inserter(result.failures));
  }
  return result;
}

RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<bool>& is_positive) {
  if (scores.size() != is_positive.size())
    throw DimensionError("roc_curve: scores/labels size mismatch");
  const auto n = scores.size();
  std::size_t n_pos = 0;
  for (bool b : is_positive) n_pos += b ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DomainError("roc_curve: both classes must be present");
  for (double s : scores)
    if (!std::isfinite(s)) throw DomainError("roc_curve: non-finite score");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < n) {
    // all samples tied at this score value flip together
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (is_positive[order[j]]) ++tp;
      else ++fp;
      ++j;
    }
    i = j;
    double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    auc += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
    roc.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  roc.auc = auc;
  roc.gini = 2.0 * auc - 1.0;
  return roc;
}

RocCurve roc_of(const std::vector<LabeledScore>& scores, bool dada) {
  std::vector<double> s;
  std::vector<bool> lab;
  s.reserve(scores.size());
  lab.reserve(scores.size());
  for (const auto& sc : scores) {
    s.push_back(dada ? sc.pn_dada : sc.pn_conv);
    lab.push_back(sc.true_world == WorldTag::kFactual);
  }
  return roc_curve(s, lab);
}

std::vector<EvidenceFigureRow> evidence_figure_export(
    const EvidenceTrace& counterfactual, const EvidenceTrace& factual) {
  if (counterfactual.increments.size() != factual.increments.size())
    throw DimensionError("evidence_figure_export: trace lengths disagree");
  std::vector<EvidenceFigureRow> rows;
  rows.reserve(factual.increments.size());
  for (std::size_t t = 0; t < factual.increments.size(); ++t) {
    EvidenceFigureRow r;
    r.t = static_cast<int>(t);
    r.inc_counterfactual = counterfactual.increments[t];
    r.inc_factual = factual.increments[t];
    r.cum_counterfactual = counterfactual.cumulative[t];
    r.cum_factual = factual.cumulative[t];
    r.pn = -std::expm1(counterfactual.cumulative[t] - factual.cumulative[t]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace dada::experiments
