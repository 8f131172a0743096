#include "dada/models.hpp"

#include <cmath>
#include <cstring>

#include "dada/numerics.hpp"

namespace dada::models {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
// Anything beyond this is treated as a blown-up trajectory; the attractor
// of the forced system stays within a few tens in every coordinate.
constexpr double kDivergenceBound = 1e8;

std::uint64_t hash_doubles(std::uint64_t h, const double* p, std::size_t n) {
  return fnv1a_bytes(p, n * sizeof(double), h);
}

std::uint64_t hash_matrix(std::uint64_t h, const Mat& m) {
  std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                           static_cast<std::uint64_t>(m.cols())};
  h = fnv1a_bytes(dims, sizeof dims, h);
  return hash_doubles(h, m.data(), static_cast<std::size_t>(m.size()));
}

void check_covariance(const Mat& c, const char* name) {
  if (c.rows() != c.cols()) throw DimensionError(std::string(name) + " must be square");
  if (!c.isApprox(c.transpose(), 1e-12))
    throw DomainError(std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  double tol = -1e-10 * std::max(c.trace(), 0.0);
  if (es.eigenvalues().minCoeff() < tol)
    throw DomainError(std::string(name) + " must be positive semidefinite");
}

}  // namespace

void L63Params::validate() const {
  if (!(dt > 0.0)) throw DomainError("l63: dt must be positive");
  if (!(sigma_q >= 0.0)) throw DomainError("l63: sigma_q must be nonnegative");
  if (!(lambda >= 0.0)) throw DomainError("l63: lambda must be nonnegative");
  if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta) ||
      !std::isfinite(theta_deg))
    throw DomainError("l63: parameters must be finite");
}

std::uint64_t content_hash(const L63Params& p) {
  double vals[7] = {p.sigma,     p.rho, p.beta,   p.lambda,
                    p.theta_deg, p.dt,  p.sigma_q};
  return hash_doubles(fnv1a("l63-params"), vals, 7);
}

Vec3 l63_drift(const Vec3& state, const L63Params& p) {
  if (!state.allFinite()) throw DomainError("l63_drift: non-finite state");
  const double x = state(0), y = state(1), z = state(2);
  const double th = p.theta_deg * kDegToRad;
  Vec3 d;
  d(0) = p.sigma * (y - x) + p.lambda * std::cos(th);
  d(1) = p.rho * x - y - x * z + p.lambda * std::sin(th);
  d(2) = x * y - p.beta * z;
  return d;
}

HmmSpec::HmmSpec(std::variant<LinearDynamics, L63Dynamics> dyn, Mat H, Mat Q,
                 Mat R)
    : dynamics_(std::move(dyn)),
      H_(std::move(H)),
      Q_(std::move(Q)),
      R_(std::move(R)) {
  check_covariance(Q_, "Q");
  check_covariance(R_, "R");
  if (H_.rows() != R_.rows() || H_.cols() != Q_.rows())
    throw DimensionError("H must map state_dim to obs_dim");
  if (is_linear()) {
    const Mat& m = std::get<LinearDynamics>(dynamics_).M;
    if (m.rows() != m.cols() || m.rows() != Q_.rows())
      throw DimensionError("M must be square with Q's dimension");
  } else {
    std::get<L63Dynamics>(dynamics_).params.validate();
    if (Q_.rows() != 3) throw DimensionError("Lorenz dynamics need a 3x3 Q");
  }
  q_sqrt_ = psd_sqrt(Q_);
  r_sqrt_ = psd_sqrt(R_);
}

HmmSpec HmmSpec::linear(Mat M, Mat H, Mat Q, Mat R) {
  return HmmSpec(LinearDynamics{std::move(M)}, std::move(H), std::move(Q),
                 std::move(R));
}

HmmSpec HmmSpec::lorenz(const L63Params& params, double sigma_r) {
  if (!(sigma_r >= 0.0)) throw DomainError("lorenz: sigma_r must be nonnegative");
  return lorenz(params, Mat::Identity(3, 3),
                sigma_r * sigma_r * Mat::Identity(3, 3));
}

HmmSpec HmmSpec::lorenz(const L63Params& params, Mat H, Mat R) {
  params.validate();
  Mat q = params.sigma_q * params.sigma_q * Mat::Identity(3, 3);
  return HmmSpec(L63Dynamics{params}, std::move(H), std::move(q), std::move(R));
}

const Mat& HmmSpec::transition() const {
  if (!is_linear()) throw DomainError("transition(): dynamics are nonlinear");
  return std::get<LinearDynamics>(dynamics_).M;
}

const L63Params& HmmSpec::l63() const {
  if (is_linear()) throw DomainError("l63(): dynamics are linear");
  return std::get<L63Dynamics>(dynamics_).params;
}

double HmmSpec::dt_per_step() const {
  return is_linear() ? 1.0 : l63().dt;
}

Vec HmmSpec::propagate_mean(const Vec& state) const {
  if (state.size() != state_dim())
    throw DimensionError("propagate_mean: state dimension mismatch");
  if (is_linear()) return transition() * state;
  const L63Params& p = l63();
  Vec3 s = state;
  return s + p.dt * l63_drift(s, p);
}

std::uint64_t HmmSpec::params_hash() const {
  std::uint64_t h = fnv1a("hmm-spec");
  if (is_linear()) {
    h = fnv1a("linear", h);
    h = hash_matrix(h, transition());
  } else {
    const L63Params& p = l63();
    double vals[7] = {p.sigma, p.rho, p.beta, p.lambda,
                      p.theta_deg, p.dt, p.sigma_q};
    h = fnv1a("lorenz", h);
    h = hash_doubles(h, vals, 7);
  }
  h = hash_matrix(h, H_);
  h = hash_matrix(h, Q_);
  h = hash_matrix(h, R_);
  return h;
}

Vec step_stochastic(const Vec& state, const HmmSpec& spec, Rng& rng,
                    long step_index) {
  Vec next = spec.propagate_mean(state);
  if (spec.Q().trace() > 0.0) {
    next = mvn_sample(next, spec.model_noise_sqrt(), rng);
  }
  if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceBound)
    throw DivergedError("trajectory diverged", step_index);
  return next;
}

Trajectory simulate(const HmmSpec& spec, const Vec& x0, int steps, Rng& rng) {
  if (steps < 0) throw DomainError("simulate: steps must be nonnegative");
  if (x0.size() != spec.state_dim())
    throw DimensionError("simulate: x0 dimension mismatch");
  Trajectory traj;
  traj.dt_per_step = spec.dt_per_step();
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(x0);
  Vec x = x0;
  for (int t = 0; t < steps; ++t) {
    x = step_stochastic(x, spec, rng, t + 1);
    traj.states.push_back(x);
  }
  return traj;
}

ObservationSequence observe(const Trajectory& traj, const HmmSpec& spec,
                            Rng& rng) {
  if (traj.states.empty()) throw DomainError("observe: empty trajectory");
  ObservationSequence seq;
  seq.obs.reserve(traj.states.size());
  const bool noisy = spec.R().trace() > 0.0;
  for (const Vec& x : traj.states) {
    if (x.size() != spec.H().cols())
      throw DimensionError("observe: H incompatible with state dimension");
    Vec y = spec.H() * x;
    if (noisy) y = mvn_sample(y, spec.obs_noise_sqrt(), rng);
    seq.obs.push_back(std::move(y));
  }
  return seq;
}

Ar1Spec Ar1Spec::scalar(double a, double noise_std) {
  Ar1Spec s;
  s.A = Mat::Constant(1, 1, a);
  s.noise_std = noise_std;
  s.prior_mean = Vec::Zero(1);
  s.prior_std = noise_std / std::sqrt(1.0 - a * a);
  s.validate();
  return s;
}

void Ar1Spec::validate() const {
  if (A.rows() != A.cols()) throw DimensionError("ar1: A must be square");
  if (!(noise_std > 0.0)) throw DomainError("ar1: noise_std must be positive");
  if (!(prior_std > 0.0)) throw DomainError("ar1: prior_std must be positive");
  if (prior_mean.size() != A.rows())
    throw DimensionError("ar1: prior mean dimension mismatch");
  double radius = A.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0))
    throw DomainError("ar1: spectral radius must be below 1 for stationarity");
}

double Ar1Spec::stationary_sd() const {
  if (dim() != 1) throw DomainError("stationary_sd: scalar process only");
  double a = A(0, 0);
  return noise_std / std::sqrt(1.0 - a * a);
}

double ar1_loglik(const ObservationSequence& y, const Ar1Spec& spec) {
  if (y.obs.empty()) throw DomainError("ar1_loglik: empty sequence");
  const int d = spec.dim();
  for (const Vec& v : y.obs)
    if (v.size() != d) throw DimensionError("ar1_loglik: dimension mismatch");

  const Mat prior_cov = spec.prior_std * spec.prior_std * Mat::Identity(d, d);
  double ll = log_mvn_pdf(y.obs[0], spec.prior_mean, prior_cov);
  const Mat noise_cov = spec.noise_std * spec.noise_std * Mat::Identity(d, d);
  for (std::size_t t = 1; t < y.obs.size(); ++t) {
    ll += log_mvn_pdf(y.obs[t], spec.A * y.obs[t - 1], noise_cov);
  }
  return ll;
}

ObservationSequence ar1_simulate(const Ar1Spec& spec, int steps, Rng& rng) {
  if (steps < 0) throw DomainError("ar1_simulate: steps must be nonnegative");
  const int d = spec.dim();
  ObservationSequence seq;
  seq.obs.reserve(static_cast<std::size_t>(steps) + 1);
  Vec y(d);
  for (int i = 0; i < d; ++i)
    y(i) = spec.prior_mean(i) + spec.prior_std * rng.gaussian();
  seq.obs.push_back(y);
  for (int t = 0; t < steps; ++t) {
    Vec next = spec.A * y;
    for (int i = 0; i < d; ++i) next(i) += spec.noise_std * rng.gaussian();
    y = std::move(next);
    seq.obs.push_back(y);
  }
  return seq;
}

}  // namespace dada::models
