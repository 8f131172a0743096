#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dada/conventional.hpp"
#include "dada/evidence.hpp"
#include "dada/filters.hpp"
#include "dada/models.hpp"
#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada::experiments {

struct AttractorSample {
  Mat states;  // n_samples x 3, thinned long-run states after burn-in
  Vec mean;
  Mat cov;
};

// Long-run sampling of the (stochastic) attractor; the moments serve as the
// climatological prior (mean, covariance) for assimilation in that world.
AttractorSample attractor_sample(const models::L63Params& p, int n_samples,
                                 Rng& rng, int burn_in = 10000,
                                 int stride = 10);

// Moments only, without keeping the states.
std::pair<Vec, Mat> attractor_moments(const models::L63Params& p,
                                      int n_samples, Rng& rng,
                                      int burn_in = 10000, int stride = 10);

// Orthonormal eigenvectors of the two largest eigenvalues of a sample
// covariance; each vector's largest-magnitude component is made positive.
std::pair<Vec, Vec> leading_plane(const Mat& cov);

struct Grid2d {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  int nx = 2, ny = 2;
  double x(int i) const { return xmin + (xmax - xmin) * i / (nx - 1); }
  double y(int j) const { return ymin + (ymax - ymin) * j / (ny - 1); }
  double dx() const { return (xmax - xmin) / (nx - 1); }
  double dy() const { return (ymax - ymin) / (ny - 1); }
};

struct Kde2d {
  Grid2d grid;
  Mat density;  // ny rows, nx cols; density(j, i) at (x(i), y(j))
};

// Grid covering the sample range padded by `pad` bandwidths on every side.
Grid2d kde_grid(const Mat& points, const Eigen::Vector2d& bandwidth, int nx,
                int ny, double pad = 4.0);

// Scott's rule per dimension: h_k = sd_k * n^(-1/6).
Eigen::Vector2d kde_bandwidth_scott(const Mat& points);

// Gaussian-product-kernel density of 2-D points on the grid; kernels are
// truncated at four bandwidths.
Kde2d kde2d(const Mat& points, const Grid2d& grid,
            const Eigen::Vector2d& bandwidth);

// Trapezoidal integral of a gridded density, for normalization checks.
double grid_integral(const Kde2d& k);

struct SweepConfig {
  std::vector<double> lambda_grid;
  std::vector<double> sigma_q_grid;
  std::vector<double> sigma_r_grid;
  double theta1_deg = -140.0;
  int n_directions = 10;
  int n_eval_sequences = 100;
  int window_steps = 20;
  int n_prob_segments = 50000;
  double target_p1 = 0.01;
  std::uint64_t master_seed = 0;

  evidence::FilterKind filter = evidence::FilterKind::kEnkf;
  filters::EnkfOptions enkf{};

  bool condition_on_event = true;  // evaluation windows must contain an event
  bool shared_prior = false;       // both worlds assimilate with the factual prior
  int burn_in = 10000;
  int attractor_samples = 100000;
  int attractor_stride = 10;
  long max_scan_windows = 2000000;  // rejection-sampling cap per world

  static SweepConfig defaults();  // the full-size grids
  void validate() const;
  int n_combos() const {
    return static_cast<int>(lambda_grid.size() * sigma_q_grid.size() *
                            sigma_r_grid.size());
  }
  // combo index -> (lambda1, sigma_q, sigma_r), row-major over the grids
  std::array<double, 3> combo_values(int combo_index) const;
};

struct QuintupletRecord {
  int combo_index = 0;
  int dir_index = 0;
  double lambda1 = 0.0, sigma_q = 0.0, sigma_r = 0.0;
  Vec phi;
  double u = 0.0;
  double p0_hat = 0.0, p1_hat = 0.0;
  double se0 = 0.0, se1 = 0.0;
  int n_factual = 0, n_counterfactual = 0;
  double pn_conv = 0.0;
};

struct LabeledScore {
  int combo_index = 0;
  int dir_index = 0;
  int seq_index = 0;
  WorldTag true_world = WorldTag::kFactual;
  double pn_dada = 0.0;  // unclipped PN from the evidence ratio
  double pn_conv = 0.0;  // constant within a quintuplet
};

struct SweepFailure {
  int combo_index = -1;
  int dir_index = -1;  // -1: the whole combo failed
  std::string message;
};

struct SweepResult {
  SweepConfig config;
  std::vector<QuintupletRecord> quintuplets;  // ordered by (combo, dir)
  std::vector<LabeledScore> scores;           // ordered by (combo, dir, seq)
  std::vector<SweepFailure> failures;
};

// The full mixed-world evaluation protocol. Deterministic given the master
// seed: every task's stream derives from (master seed, task identity), so
// results do not depend on worker count or schedule.
SweepResult run_sweep(const SweepConfig& cfg, int n_workers = 1);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  double auc = 0.0;
  double gini = 0.0;  // 2 auc - 1
};

// Threshold sweep over distinct score values; tied scores flip together and
// trace diagonal segments. Positives are the factual labels.
RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<bool>& is_positive);

RocCurve roc_of(const std::vector<LabeledScore>& scores, bool dada);

struct EvidenceFigureRow {
  int t = 0;
  double inc_counterfactual = 0.0, inc_factual = 0.0;
  double cum_counterfactual = 0.0, cum_factual = 0.0;
  double pn = 0.0;  // over the window [0, t]
};

// Per-step table of both worlds' evidence and the running PN.
std::vector<EvidenceFigureRow> evidence_figure_export(
    const evidence::EvidenceTrace& counterfactual,
    const evidence::EvidenceTrace& factual);

}  // namespace dada::experiments
