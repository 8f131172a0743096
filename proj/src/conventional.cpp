#include "dada/conventional.hpp"

#include <algorithm>
#include <cmath>

#include "dada/evidence.hpp"
#include "dada/numerics.hpp"

namespace dada::conventional {

using models::HmmSpec;
using models::ObservationSequence;

void EventSpec::validate() const {
  if (phi.size() == 0) throw DomainError("event: empty direction");
  if (std::abs(phi.norm() - 1.0) > 1e-12)
    throw DomainError("event: phi must be a unit vector");
  if (window_steps < 0) throw DomainError("event: negative window");
  if (!std::isfinite(u)) throw DomainError("event: non-finite threshold");
}

double projection_max(const ObservationSequence& y, const Vec& phi) {
  if (y.obs.empty()) throw DomainError("projection_max: empty sequence");
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& v : y.obs) {
    if (v.size() != phi.size())
      throw DimensionError("projection_max: dimension mismatch");
    best = std::max(best, phi.dot(v));
  }
  return best;
}

bool event_occurs(const ObservationSequence& y, const EventSpec& ev) {
  ev.validate();
  if (y.steps() != ev.window_steps)
    throw DimensionError("event_occurs: window length mismatch");
  return projection_max(y, ev.phi) >= ev.u;
}

double calibrate_threshold(std::vector<double> maxima, double target_p) {
  if (!(target_p > 0.0 && target_p <= 1.0))
    throw DomainError("calibrate_threshold: target probability in (0, 1]");
  const auto n = maxima.size();
  if (n < static_cast<std::size_t>(std::ceil(1.0 / target_p)))
    throw InsufficientDataError(
        "calibrate_threshold: need at least 1/target_p segments");
  // u = k-th largest maximum with k = ceil(n * p); every tie at u counts as
  // an exceedance, so the achieved frequency is >= target_p.
  auto k = static_cast<std::size_t>(std::ceil(target_p * static_cast<double>(n)));
  k = std::min(std::max<std::size_t>(k, 1), n);
  std::nth_element(maxima.begin(), maxima.begin() + (n - k), maxima.end());
  return maxima[n - k];
}

double calibrate_threshold(const std::vector<ObservationSequence>& segments,
                           const Vec& phi, double target_p) {
  std::vector<double> maxima;
  maxima.reserve(segments.size());
  for (const auto& seg : segments) maxima.push_back(projection_max(seg, phi));
  return calibrate_threshold(std::move(maxima), target_p);
}

void segmented_observations(
    const HmmSpec& spec, const Vec& x0, int n_windows, int window_steps,
    int burn_in, Rng& rng,
    const std::function<void(int, const ObservationSequence&)>& visit) {
  if (n_windows < 0 || window_steps < 0 || burn_in < 0)
    throw DomainError("segmented_observations: negative count");
  Vec x = x0;
  for (int t = 0; t < burn_in; ++t) x = models::step_stochastic(x, spec, rng, t);

  const int points = window_steps + 1;
  const bool noisy = spec.R().trace() > 0.0;
  ObservationSequence window;
  window.obs.resize(points);
  long step = burn_in;
  for (int w = 0; w < n_windows; ++w) {
    for (int i = 0; i < points; ++i) {
      if (!(w == 0 && i == 0)) x = models::step_stochastic(x, spec, rng, step++);
      Vec y = spec.H() * x;
      if (noisy) y = mvn_sample(y, spec.obs_noise_sqrt(), rng);
      window.obs[static_cast<std::size_t>(i)] = std::move(y);
    }
    visit(w, window);
  }
}

EventProbEstimate estimate_event_probs(const HmmSpec& spec, const EventSpec& ev,
                                       int n_segments, Rng& rng, int burn_in) {
  ev.validate();
  if (n_segments <= 0)
    throw DomainError("estimate_event_probs: need at least one segment");
  int hits = 0;
  Vec x0 = Vec::Zero(spec.state_dim());
  segmented_observations(spec, x0, n_segments, ev.window_steps, burn_in, rng,
                         [&](int, const ObservationSequence& window) {
                           if (projection_max(window, ev.phi) >= ev.u) ++hits;
                         });
  EventProbEstimate est;
  est.n_segments = n_segments;
  est.p_hat = static_cast<double>(hits) / n_segments;
  est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) / n_segments);
  return est;
}

double GpdFit::survival(double z) const {
  if (z <= 0.0) return 1.0;
  if (std::abs(xi) < 1e-12) return std::exp(-z / sigma_gpd);
  double arg = 1.0 + xi * z / sigma_gpd;
  if (arg <= 0.0) return 0.0;  // beyond the upper endpoint when xi < 0
  return std::pow(arg, -1.0 / xi);
}

double GpdFit::return_level(double return_period) const {
  if (!(return_period > 0.0))
    throw DomainError("return_level: period must be positive");
  double p = 1.0 / return_period;  // exceedance probability per segment
  if (p >= zeta) return threshold;
  double ratio = zeta / p;
  if (std::abs(xi) < 1e-12) return threshold + sigma_gpd * std::log(ratio);
  return threshold + sigma_gpd / xi * (std::pow(ratio, xi) - 1.0);
}

GpdFit gpd_tail_fit(const std::vector<double>& maxima, double fit_threshold) {
  std::vector<double> excess;
  for (double m : maxima)
    if (m > fit_threshold) excess.push_back(m - fit_threshold);
  if (excess.size() < 30)
    throw InsufficientDataError("gpd_tail_fit: need at least 30 exceedances");
  std::sort(excess.begin(), excess.end());

  // Probability-weighted moments (Hosking & Wallis 1987):
  //   a_s = mean of z_(i) * (1 - p_i)^s with plotting position
  //   p_i = (i - 0.35)/n; then shape k = a0/(a0 - 2 a1) - 2 (xi = -k)
  //   and scale = 2 a0 a1 / (a0 - 2 a1).
  const auto n = excess.size();
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = (static_cast<double>(i) + 1.0 - 0.35) / static_cast<double>(n);
    a0 += excess[i];
    a1 += excess[i] * (1.0 - p);
  }
  a0 /= static_cast<double>(n);
  a1 /= static_cast<double>(n);
  double denom = a0 - 2.0 * a1;
  if (!(denom > 0.0))
    throw DomainError("gpd_tail_fit: degenerate probability-weighted moments");

  GpdFit fit;
  fit.threshold = fit_threshold;
  fit.n_exceedances = static_cast<int>(n);
  fit.zeta = static_cast<double>(n) / static_cast<double>(maxima.size());
  double k = a0 / denom - 2.0;
  fit.xi = -k;
  fit.sigma_gpd = 2.0 * a0 * a1 / denom;
  if (!(fit.sigma_gpd > 0.0))
    throw DomainError("gpd_tail_fit: nonpositive fitted scale");
  return fit;
}

std::pair<double, double> gpd_tail_prob_band(const std::vector<double>& maxima,
                                             double fit_quantile, double u,
                                             int n_boot, double coverage,
                                             Rng& rng) {
  if (maxima.empty()) throw InsufficientDataError("bootstrap: empty sample");
  if (!(coverage > 0.0 && coverage < 1.0))
    throw DomainError("bootstrap: coverage in (0, 1)");
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(n_boot));
  std::vector<double> resample(maxima.size());
  std::uniform_int_distribution<std::size_t> pick(0, maxima.size() - 1);
  for (int b = 0; b < n_boot; ++b) {
    for (auto& v : resample) v = maxima[pick(rng.engine())];
    std::vector<double> sorted = resample;
    std::sort(sorted.begin(), sorted.end());
    auto idx = static_cast<std::size_t>(fit_quantile *
                                        static_cast<double>(sorted.size() - 1));
    try {
      GpdFit fit = gpd_tail_fit(resample, sorted[idx]);
      probs.push_back(fit.tail_prob(u));
    } catch (const Error&) {
      // a degenerate resample contributes nothing
    }
  }
  if (probs.size() < 10)
    throw InsufficientDataError("bootstrap: too few successful refits");
  std::sort(probs.begin(), probs.end());
  double alpha = 0.5 * (1.0 - coverage);
  auto lo = static_cast<std::size_t>(alpha * static_cast<double>(probs.size() - 1));
  auto hi = static_cast<std::size_t>((1.0 - alpha) *
                                     static_cast<double>(probs.size() - 1));
  return {probs[lo], probs[hi]};
}

double pn_conventional(double p0_hat, double p1_hat) {
  return evidence::causal_probs_from_rates(p0_hat, p1_hat).pn;
}

}  // namespace dada::conventional
