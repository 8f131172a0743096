#pragma once

#include <vector>

#include "dada/models.hpp"
#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada::filters {

enum class BeliefRole { kForecast, kAnalysis };

// Gaussian state estimate. The covariance is symmetrized on construction and
// must be PSD up to a -1e-10 * trace eigenvalue tolerance.
struct GaussianBelief {
  Vec mean;
  Mat cov;
  BeliefRole role = BeliefRole::kForecast;
  int t = 0;

  GaussianBelief(Vec mean_in, Mat cov_in, BeliefRole role_in, int t_in = 0);
};

struct Ensemble {
  std::vector<Vec> members;  // Ne >= 2
  int t = 0;
  int size() const { return static_cast<int>(members.size()); }
};

// Full record of a sequential run: forecast and analysis beliefs (exact for
// the KF, sample moments for the EnKF) and the gain used at each step.
struct FilterRun {
  std::vector<GaussianBelief> forecasts;  // t = 0..T, forecast at t precedes
  std::vector<GaussianBelief> analyses;   // the analysis at the same t
  std::vector<Mat> gains;
};

struct EnkfOptions {
  int ensemble_size = 100;
  double inflation = 1.0;  // multiplicative, 1.0 = off
};

// One Kalman analysis: K = P H' (H P H' + R)^-1, mean += K innovation,
// cov = (I - K H) P, symmetrized.
GaussianBelief kf_analysis(const GaussianBelief& forecast, const Vec& y,
                           const Mat& H, const Mat& R, Mat* gain_out = nullptr);

// One Kalman forecast: mean = M x, cov = M P M' + Q, symmetrized.
GaussianBelief kf_forecast(const GaussianBelief& analysis, const Mat& M,
                           const Mat& Q);

// Alternating analysis/forecast over t = 0..T. The prior is the forecast
// belief at t = 0 and y_0 is assimilated against it.
FilterRun kf_run(const models::HmmSpec& spec, const GaussianBelief& prior,
                 const models::ObservationSequence& y);

// Ne independent draws from the prior; members in order, coordinates within.
Ensemble draw_ensemble(const GaussianBelief& prior, int ensemble_size,
                       Rng& rng);

// Advances every member by one stochastic model step.
Ensemble enkf_forecast(const Ensemble& e, const models::HmmSpec& spec,
                       Rng& rng);

// Perturbed-observation update: each member sees y + w_i with w_i ~ N(0, R)
// and moves by the sample-covariance gain. Anomalies are inflated before the
// gain is formed.
Ensemble enkf_analysis(const Ensemble& e, const Vec& y, const Mat& H,
                       const Mat& R, Rng& rng, double inflation = 1.0,
                       Mat* gain_out = nullptr);

// Sample mean and unbiased (Ne - 1) sample covariance.
GaussianBelief ensemble_moments(const Ensemble& e);

// EnKF counterpart of kf_run; records the forecast/analysis sample moments.
FilterRun enkf_run(const models::HmmSpec& spec, const GaussianBelief& prior,
                   const models::ObservationSequence& y, Rng& rng,
                   const EnkfOptions& options = {});

}  // namespace dada::filters
