#include "dada/filters.hpp"

#include <cmath>

#include "dada/numerics.hpp"

namespace dada::filters {

using models::HmmSpec;
using models::ObservationSequence;

GaussianBelief::GaussianBelief(Vec mean_in, Mat cov_in, BeliefRole role_in,
                               int t_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)), role(role_in), t(t_in) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw DimensionError("belief: covariance shape does not match mean");
  if (!mean.allFinite() || !cov.allFinite())
    throw DomainError("belief: non-finite moments");
  cov = symmetrize(cov);
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(cov.trace(), 0.0))
    throw DomainError("belief: covariance not PSD within tolerance");
}

namespace {

// Cholesky of the innovation covariance, with a diagnosable failure.
Eigen::LLT<Mat> factor_innovation(const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError("innovation covariance not positive definite",
                              condition_number_sym(s));
  }
  return llt;
}

}  // namespace

GaussianBelief kf_analysis(const GaussianBelief& forecast, const Vec& y,
                           const Mat& H, const Mat& R, Mat* gain_out) {
  if (forecast.role != BeliefRole::kForecast)
    throw DomainError("kf_analysis: expected a forecast belief");
  if (H.cols() != forecast.mean.size() || H.rows() != y.size() ||
      R.rows() != y.size() || R.cols() != y.size())
    throw DimensionError("kf_analysis: H/R/y shapes disagree");

  const Mat& p = forecast.cov;
  Mat s = symmetrize(H * p * H.transpose() + R);
  auto llt = factor_innovation(s);
  // K = P H' S^-1 computed as the solution of S K' = H P.
  Mat gain = llt.solve(H * p).transpose();
  Vec mean = forecast.mean + gain * (y - H * forecast.mean);
  Mat cov = symmetrize((Mat::Identity(p.rows(), p.cols()) - gain * H) * p);
  if (gain_out) *gain_out = gain;
  return GaussianBelief(std::move(mean), std::move(cov), BeliefRole::kAnalysis,
                        forecast.t);
}

GaussianBelief kf_forecast(const GaussianBelief& analysis, const Mat& M,
                           const Mat& Q) {
  if (analysis.role != BeliefRole::kAnalysis)
    throw DomainError("kf_forecast: expected an analysis belief");
  if (M.cols() != analysis.mean.size() || Q.rows() != M.rows() ||
      Q.cols() != M.rows())
    throw DimensionError("kf_forecast: M/Q shapes disagree");
  Vec mean = M * analysis.mean;
  Mat cov = symmetrize(M * analysis.cov * M.transpose() + Q);
  return GaussianBelief(std::move(mean), std::move(cov), BeliefRole::kForecast,
                        analysis.t + 1);
}

FilterRun kf_run(const HmmSpec& spec, const GaussianBelief& prior,
                 const ObservationSequence& y) {
  if (!spec.is_linear())
    throw DomainError("kf_run: exact Kalman filtering needs linear dynamics");
  if (prior.role != BeliefRole::kForecast)
    throw DomainError("kf_run: prior must be the forecast belief at t = 0");
  const int last = y.steps();
  FilterRun run;
  run.forecasts.reserve(last + 1);
  run.analyses.reserve(last + 1);
  run.gains.reserve(last + 1);

  GaussianBelief forecast = prior;
  forecast.t = 0;
  for (int t = 0; t <= last; ++t) {
    Mat gain;
    GaussianBelief analysis =
        kf_analysis(forecast, y.obs[static_cast<std::size_t>(t)], spec.H(),
                    spec.R(), &gain);
    run.forecasts.push_back(forecast);
    run.analyses.push_back(analysis);
    run.gains.push_back(std::move(gain));
    if (t < last) forecast = kf_forecast(analysis, spec.transition(), spec.Q());
  }
  return run;
}

Ensemble draw_ensemble(const GaussianBelief& prior, int ensemble_size,
                       Rng& rng) {
  if (ensemble_size < 2)
    throw DomainError("ensemble: need at least two members");
  Mat sqrt_cov = psd_sqrt(prior.cov);
  Ensemble e;
  e.t = prior.t;
  e.members.reserve(static_cast<std::size_t>(ensemble_size));
  for (int i = 0; i < ensemble_size; ++i)
    e.members.push_back(mvn_sample(prior.mean, sqrt_cov, rng));
  return e;
}

Ensemble enkf_forecast(const Ensemble& e, const HmmSpec& spec, Rng& rng) {
  if (e.size() < 2) throw DomainError("enkf_forecast: need at least two members");
  Ensemble out;
  out.t = e.t + 1;
  out.members.reserve(e.members.size());
  for (const Vec& m : e.members)
    out.members.push_back(models::step_stochastic(m, spec, rng, e.t + 1));
  return out;
}

Ensemble enkf_analysis(const Ensemble& e, const Vec& y, const Mat& H,
                       const Mat& R, Rng& rng, double inflation,
                       Mat* gain_out) {
  const int ne = e.size();
  if (ne < 2) throw DomainError("enkf_analysis: need at least two members");
  if (!(inflation > 0.0)) throw DomainError("enkf_analysis: inflation must be positive");
  const auto n = e.members[0].size();
  if (H.cols() != n || H.rows() != y.size() || R.rows() != y.size())
    throw DimensionError("enkf_analysis: H/R/y shapes disagree");

  Vec mean = Vec::Zero(n);
  for (const Vec& m : e.members) mean += m;
  mean /= ne;

  // Inflated anomaly matrix and its image under H.
  Mat anomalies(n, ne);
  for (int i = 0; i < ne; ++i)
    anomalies.col(i) = inflation * (e.members[i] - mean);
  Mat obs_anomalies = H * anomalies;

  Mat cross = anomalies * obs_anomalies.transpose() / (ne - 1);  // P H'
  Mat s = symmetrize(obs_anomalies * obs_anomalies.transpose() / (ne - 1) + R);
  auto llt = factor_innovation(s);
  Mat gain = llt.solve(cross.transpose()).transpose();
  if (gain_out) *gain_out = gain;

  Mat r_sqrt = psd_sqrt(R);
  Ensemble out;
  out.t = e.t;
  out.members.reserve(e.members.size());
  for (int i = 0; i < ne; ++i) {
    Vec member = mean + anomalies.col(i);
    Vec perturbed = mvn_sample(y, r_sqrt, rng);
    out.members.push_back(member + gain * (perturbed - H * member));
  }
  return out;
}

GaussianBelief ensemble_moments(const Ensemble& e) {
  const int ne = e.size();
  if (ne < 2) throw DomainError("ensemble_moments: need at least two members");
  const auto n = e.members[0].size();
  Vec mean = Vec::Zero(n);
  for (const Vec& m : e.members) mean += m;
  mean /= ne;
  Mat cov = Mat::Zero(n, n);
  for (const Vec& m : e.members) {
    Vec d = m - mean;
    cov += d * d.transpose();
  }
  cov /= (ne - 1);
  return GaussianBelief(std::move(mean), symmetrize(cov),
                        BeliefRole::kForecast, e.t);
}

FilterRun enkf_run(const HmmSpec& spec, const GaussianBelief& prior,
                   const ObservationSequence& y, Rng& rng,
                   const EnkfOptions& options) {
  if (prior.role != BeliefRole::kForecast)
    throw DomainError("enkf_run: prior must be the forecast belief at t = 0");
  const int last = y.steps();
  FilterRun run;
  run.forecasts.reserve(last + 1);
  run.analyses.reserve(last + 1);
  run.gains.reserve(last + 1);

  Ensemble ensemble = draw_ensemble(prior, options.ensemble_size, rng);
  ensemble.t = 0;
  for (int t = 0; t <= last; ++t) {
    GaussianBelief forecast_moments = ensemble_moments(ensemble);
    forecast_moments.role = BeliefRole::kForecast;
    run.forecasts.push_back(forecast_moments);

    Mat gain;
    ensemble = enkf_analysis(ensemble, y.obs[static_cast<std::size_t>(t)],
                             spec.H(), spec.R(), rng, options.inflation, &gain);
    GaussianBelief analysis_moments = ensemble_moments(ensemble);
    analysis_moments.role = BeliefRole::kAnalysis;
    run.analyses.push_back(analysis_moments);
    run.gains.push_back(std::move(gain));

    if (t < last) ensemble = enkf_forecast(ensemble, spec, rng);
  }
  return run;
}

}  // namespace dada::filters
