#pragma once

#include <variant>
#include <vector>

#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada::models {

// Lorenz-63 with a constant extra force of intensity `lambda` applied in the
// (x, y) plane along direction `theta_deg`. The counterfactual world is
// exactly lambda = 0, whatever theta says. The time unit is days; one
// discrete step advances dt days.
struct L63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double lambda = 0.0;     // forcing intensity, >= 0
  double theta_deg = 0.0;  // forcing direction, degrees
  double dt = 0.01;        // days per step, > 0
  double sigma_q = 0.0;    // model-noise std per step, >= 0

  void validate() const;
  L63Params counterfactual() const {
    L63Params p = *this;
    p.lambda = 0.0;
    return p;
  }
};

// Deterministic right-hand side of the forced system.
Vec3 l63_drift(const Vec3& state, const L63Params& p);

// Content hash of the dynamics parameters (see HmmSpec::params_hash).
std::uint64_t content_hash(const L63Params& p);

struct LinearDynamics {
  Mat M;  // per-step transition
};
struct L63Dynamics {
  L63Params params;
};

// State-space model: dynamics plus linear observation operator H with model
// noise Q (per discrete step) and observation noise R. Immutable after
// construction; noise square roots are precomputed for sampling.
class HmmSpec {
 public:
  static HmmSpec linear(Mat M, Mat H, Mat Q, Mat R);
  static HmmSpec lorenz(const L63Params& params, double sigma_r);
  static HmmSpec lorenz(const L63Params& params, Mat H, Mat R);

  int state_dim() const { return static_cast<int>(Q_.rows()); }
  int obs_dim() const { return static_cast<int>(R_.rows()); }
  bool is_linear() const {
    return std::holds_alternative<LinearDynamics>(dynamics_);
  }
  const Mat& transition() const;    // linear dynamics only
  const L63Params& l63() const;     // Lorenz dynamics only
  const Mat& H() const { return H_; }
  const Mat& Q() const { return Q_; }
  const Mat& R() const { return R_; }
  const Mat& model_noise_sqrt() const { return q_sqrt_; }
  const Mat& obs_noise_sqrt() const { return r_sqrt_; }
  double dt_per_step() const;

  // Deterministic part of one step: M x, or the Euler step of the L63 drift.
  Vec propagate_mean(const Vec& state) const;

  // Content hash of dynamics and noise parameters. Two worlds with equal
  // parameters share derived random streams, so their assimilations agree
  // bitwise and the evidence ratio is exactly one.
  std::uint64_t params_hash() const;

 private:
  HmmSpec(std::variant<LinearDynamics, L63Dynamics> dyn, Mat H, Mat Q, Mat R);

  std::variant<LinearDynamics, L63Dynamics> dynamics_;
  Mat H_, Q_, R_;
  Mat q_sqrt_, r_sqrt_;
};

struct Trajectory {
  std::vector<Vec> states;  // indexed t = 0..T
  double dt_per_step = 1.0;
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

struct ObservationSequence {
  std::vector<Vec> obs;  // indexed t = 0..T
  int steps() const { return static_cast<int>(obs.size()) - 1; }
};

// One stochastic step: propagate_mean(state) + v, v ~ N(0, Q), one draw per
// discrete step. `step_index` only labels the divergence error.
Vec step_stochastic(const Vec& state, const HmmSpec& spec, Rng& rng,
                    long step_index = -1);

// Applies step_stochastic `steps` times; deterministic given the seed.
Trajectory simulate(const HmmSpec& spec, const Vec& x0, int steps, Rng& rng);

// y_t = H x_t + w_t with w_t ~ N(0, R), independent across t.
ObservationSequence observe(const Trajectory& traj, const HmmSpec& spec,
                            Rng& rng);

// d-variate AR(1) process y_t = A y_{t-1} + e_t with isotropic Gaussian
// innovations and an isotropic Gaussian prior on y_0.
struct Ar1Spec {
  Mat A;
  double noise_std = 1.0;
  Vec prior_mean;
  double prior_std = 1.0;

  static Ar1Spec scalar(double a, double noise_std);  // stationary prior
  void validate() const;
  int dim() const { return static_cast<int>(A.rows()); }
  double stationary_sd() const;  // scalar case
};

// Closed-form log density of the whole sequence: log prior of y_0 plus the
// sum of log innovation densities.
double ar1_loglik(const ObservationSequence& y, const Ar1Spec& spec);

ObservationSequence ar1_simulate(const Ar1Spec& spec, int steps, Rng& rng);

}  // namespace dada::models
