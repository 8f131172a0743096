#pragma once

#include <functional>
#include <vector>

#include "dada/models.hpp"
#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada::conventional {

// Threshold-exceedance event: the projection of the observations onto the
// unit direction phi exceeds u somewhere in a window of `window_steps` steps
// (window_steps + 1 points, t = 0..window_steps).
struct EventSpec {
  Vec phi;
  double u = 0.0;
  int window_steps = 0;

  void validate() const;  // requires ||phi|| = 1 within 1e-12
};

bool event_occurs(const models::ObservationSequence& y, const EventSpec& ev);

// Largest projection onto phi over one window.
double projection_max(const models::ObservationSequence& y, const Vec& phi);

// Empirical (1 - target_p) quantile of per-segment maxima, with ties broken
// downward so the achieved exceedance frequency is at least target_p.
double calibrate_threshold(std::vector<double> segment_maxima, double target_p);
double calibrate_threshold(const std::vector<models::ObservationSequence>& segments,
                           const Vec& phi, double target_p);

struct EventProbEstimate {
  double p_hat = 0.0;
  double std_err = 0.0;  // binomial
  int n_segments = 0;
};

// Streams one stationary run (after `burn_in` steps from x0) split into
// n non-overlapping windows of window_steps + 1 observed points each; the
// callback sees each window in order. No re-initialization between windows.
void segmented_observations(
    const models::HmmSpec& spec, const Vec& x0, int n_windows,
    int window_steps, int burn_in, Rng& rng,
    const std::function<void(int, const models::ObservationSequence&)>& visit);

// Fraction of windows in which the event occurs, from a single long run.
EventProbEstimate estimate_event_probs(const models::HmmSpec& spec,
                                       const EventSpec& ev, int n_segments,
                                       Rng& rng, int burn_in = 10000);

// Generalized Pareto tail fitted to exceedances by probability-weighted
// moments. tail_prob composes the exceedance fraction with the GPD survival.
struct GpdFit {
  double xi = 0.0;         // shape
  double sigma_gpd = 1.0;  // scale, > 0
  double threshold = 0.0;
  int n_exceedances = 0;
  double zeta = 0.0;  // fraction of the sample above threshold

  double survival(double z) const;  // GPD survival at excess z >= 0
  double tail_prob(double u) const { return zeta * survival(u - threshold); }
  // Level exceeded once every `return_period` segments on average.
  double return_level(double return_period) const;
};

GpdFit gpd_tail_fit(const std::vector<double>& maxima, double fit_threshold);

// Percentile bootstrap band for tail_prob(u); resamples the maxima and
// refits. Returns {lo, hi} at the requested coverage.
std::pair<double, double> gpd_tail_prob_band(const std::vector<double>& maxima,
                                             double fit_quantile, double u,
                                             int n_boot, double coverage,
                                             Rng& rng);

double pn_conventional(double p0_hat, double p1_hat);

}  // namespace dada::conventional
