#include "dada/evidence.hpp"

#include <cmath>

#include "dada/numerics.hpp"

namespace dada::evidence {

using filters::BeliefRole;
using filters::FilterRun;
using filters::GaussianBelief;
using models::HmmSpec;
using models::ObservationSequence;
using models::Trajectory;

double evidence_increment(const GaussianBelief& forecast, const Vec& y,
                          const Mat& H, const Mat& R) {
  if (forecast.role != BeliefRole::kForecast)
    throw DomainError("evidence_increment: expected a forecast belief");
  Mat innovation_cov = symmetrize(H * forecast.cov * H.transpose() + R);
  return log_mvn_pdf(y, H * forecast.mean, innovation_cov);
}

EvidenceTrace evidence_from_run(const FilterRun& run, const HmmSpec& spec,
                                const ObservationSequence& y, WorldTag label) {
  if (run.forecasts.size() != y.obs.size())
    throw DimensionError("evidence_from_run: run and observations disagree");
  EvidenceTrace trace;
  trace.label = label;
  trace.increments.reserve(y.obs.size());
  trace.cumulative.reserve(y.obs.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < y.obs.size(); ++t) {
    double inc = evidence_increment(run.forecasts[t], y.obs[t], spec.H(),
                                    spec.R());
    sum += inc;
    trace.increments.push_back(inc);
    trace.cumulative.push_back(sum);
  }
  return trace;
}

EvidenceTrace evidence_trace(const HmmSpec& spec, const GaussianBelief& prior,
                             const ObservationSequence& y, FilterKind filter,
                             Rng& rng, const filters::EnkfOptions& options,
                             WorldTag label) {
  FilterRun run = (filter == FilterKind::kKalman)
                      ? filters::kf_run(spec, prior, y)
                      : filters::enkf_run(spec, prior, y, rng, options);
  return evidence_from_run(run, spec, y, label);
}

double CausalProbs::pn_clipped() const {
  return std::min(1.0, std::max(0.0, pn));
}

CausalProbs causal_probs_from_rates(double p0, double p1) {
  if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
    throw DomainError("causal probabilities need p0, p1 in [0, 1]");
  if (p1 == 0.0) throw DomainError("PN undefined: p1 is zero");
  if (p0 == 1.0) throw DomainError("PS undefined: p0 is one");
  CausalProbs c;
  c.source = CausalSource::kFromProbabilities;
  c.pn = 1.0 - p0 / p1;
  c.ps = 1.0 - (1.0 - p1) / (1.0 - p0);
  c.pns = p1 - p0;
  return c;
}

CausalProbs causal_probs_from_evidence(double log_f0, double log_f1) {
  if (std::isnan(log_f0) || std::isnan(log_f1))
    throw DomainError("causal_probs_from_evidence: NaN log evidence");
  CausalProbs c;
  c.source = CausalSource::kFromDensities;
  double diff = log_f0 - log_f1;  // -inf allowed: a vanishing f0 gives PN = 1
  c.pn = -std::expm1(diff);
  c.ps = 0.0;
  c.pns = 0.0;
  return c;
}

namespace {

// Stacked Gaussian for (x_0..x_T): prior trajectory moments under the model.
struct TrajectoryPrior {
  Vec mean;   // N(T+1)
  Mat cov;    // N(T+1) x N(T+1)
};

TrajectoryPrior stack_trajectory_prior(const HmmSpec& spec,
                                       const GaussianBelief& prior, int last) {
  const int n = spec.state_dim();
  const Mat& m = spec.transition();
  const int dim = n * (last + 1);

  std::vector<Vec> means(last + 1);
  std::vector<Mat> vars(last + 1);
  means[0] = prior.mean;
  vars[0] = prior.cov;
  for (int t = 1; t <= last; ++t) {
    means[t] = m * means[t - 1];
    vars[t] = symmetrize(m * vars[t - 1] * m.transpose() + spec.Q());
  }

  TrajectoryPrior out;
  out.mean = Vec(dim);
  out.cov = Mat(dim, dim);
  for (int t = 0; t <= last; ++t) out.mean.segment(t * n, n) = means[t];
  for (int t = 0; t <= last; ++t) {
    out.cov.block(t * n, t * n, n, n) = vars[t];
    Mat c = vars[t];  // Cov(x_s, x_t) = M^(s-t) Var(x_t) for s > t
    for (int s = t + 1; s <= last; ++s) {
      c = (m * c).eval();
      out.cov.block(s * n, t * n, n, n) = c;
      out.cov.block(t * n, s * n, n, n) = c.transpose();
    }
  }
  out.cov = symmetrize(out.cov);
  return out;
}

}  // namespace

double bayes_ratio_check(const HmmSpec& spec, const GaussianBelief& prior,
                         const ObservationSequence& y, const Trajectory& x) {
  if (!spec.is_linear())
    throw DomainError("bayes_ratio_check: linear-Gaussian models only");
  if (x.states.size() != y.obs.size())
    throw DimensionError("bayes_ratio_check: trajectory/observation lengths disagree");
  const int last = y.steps();
  const int n = spec.state_dim();
  const int d = spec.obs_dim();

  // log p(y | x): conditionally independent observation terms.
  double log_obs = 0.0;
  for (int t = 0; t <= last; ++t)
    log_obs += log_mvn_pdf(y.obs[t], spec.H() * x.states[t], spec.R());

  // log p(x): prior chain under the dynamics.
  double log_prior = log_mvn_pdf(x.states[0], prior.mean, prior.cov);
  for (int t = 1; t <= last; ++t)
    log_prior += log_mvn_pdf(x.states[t],
                             spec.transition() * x.states[t - 1], spec.Q());

  // log p(x | y): condition the stacked trajectory prior on the stacked
  // observations. This is an independent route; it never runs the filter.
  TrajectoryPrior joint = stack_trajectory_prior(spec, prior, last);
  const int xdim = n * (last + 1);
  const int ydim = d * (last + 1);
  Mat h_big = Mat::Zero(ydim, xdim);
  Mat r_big = Mat::Zero(ydim, ydim);
  Vec y_big(ydim);
  for (int t = 0; t <= last; ++t) {
    h_big.block(t * d, t * n, d, n) = spec.H();
    r_big.block(t * d, t * d, d, d) = spec.R();
    y_big.segment(t * d, d) = y.obs[t];
  }
  Mat cross = joint.cov * h_big.transpose();           // Cov(x, y)
  Mat y_cov = symmetrize(h_big * cross + r_big);       // Cov(y)
  Eigen::LLT<Mat> llt(y_cov);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("stacked observation covariance not PD",
                              condition_number_sym(y_cov));
  Vec post_mean = joint.mean + cross * llt.solve(y_big - h_big * joint.mean);
  Mat post_cov =
      symmetrize(joint.cov - cross * llt.solve(cross.transpose()));

  Vec x_big(xdim);
  for (int t = 0; t <= last; ++t) x_big.segment(t * n, n) = x.states[t];
  double log_posterior = log_mvn_pdf(x_big, post_mean, post_cov);

  double direct = log_obs + log_prior - log_posterior;
  FilterRun run = filters::kf_run(spec, prior, y);
  double filtered = evidence_from_run(run, spec, y).total();
  return direct - filtered;
}

}  // namespace dada::evidence
