#pragma once

#include <vector>

#include "dada/filters.hpp"
#include "dada/models.hpp"
#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada::evidence {

enum class FilterKind { kKalman, kEnkf };

// Per-step log-evidence increments and their running sum for one model.
// All arithmetic stays in log space; the total is never exponentiated here.
struct EvidenceTrace {
  std::vector<double> increments;  // l_t, t = 0..T
  std::vector<double> cumulative;  // prefix sums in the same order
  WorldTag label = WorldTag::kFactual;

  double total() const { return cumulative.back(); }
  int steps() const { return static_cast<int>(increments.size()) - 1; }
};

// log N(y; H x^f, H P^f H' + R) for one forecast belief.
double evidence_increment(const filters::GaussianBelief& forecast, const Vec& y,
                          const Mat& H, const Mat& R);

// Runs the chosen filter and evaluates the increment on each forecast belief
// before its observation is assimilated; t = 0 uses the prior itself, which
// makes the product over t = 0..T equal the prior-predictive recursion.
EvidenceTrace evidence_trace(const models::HmmSpec& spec,
                             const filters::GaussianBelief& prior,
                             const models::ObservationSequence& y,
                             FilterKind filter, Rng& rng,
                             const filters::EnkfOptions& options = {},
                             WorldTag label = WorldTag::kFactual);

// Same, reusing an existing filter run.
EvidenceTrace evidence_from_run(const filters::FilterRun& run,
                                const models::HmmSpec& spec,
                                const models::ObservationSequence& y,
                                WorldTag label = WorldTag::kFactual);

enum class CausalSource { kFromProbabilities, kFromDensities };

// Probabilities of necessary / sufficient / necessary-and-sufficient
// causation. PN doubles as the fraction of attributable risk and is kept
// unclipped so it can serve as a ranking score; pn_clipped() is the
// presentation value.
struct CausalProbs {
  double pn = 0.0;
  double ps = 0.0;
  double pns = 0.0;
  CausalSource source = CausalSource::kFromProbabilities;

  double far() const { return pn; }
  double pn_clipped() const;
};

// PN = 1 - p0/p1, PS = 1 - (1-p1)/(1-p0), PNS = p1 - p0.
CausalProbs causal_probs_from_rates(double p0, double p1);

// Singleton-event limit: PN = 1 - f0(y)/f1(y) from log evidences, PS = 0,
// PNS = 0. Computed as -expm1(logf0 - logf1); may be negative.
CausalProbs causal_probs_from_evidence(double log_f0, double log_f1);

// Evaluates log p(y|x) + log p(x) - log p(x|y) at an arbitrary trajectory x
// (linear-Gaussian models only, where the trajectory posterior is available
// in closed form) and returns the difference from the filter evidence total.
// The identity holds for every x, so the residual should vanish.
double bayes_ratio_check(const models::HmmSpec& spec,
                         const filters::GaussianBelief& prior,
                         const models::ObservationSequence& y,
                         const models::Trajectory& x);

}  // namespace dada::evidence
