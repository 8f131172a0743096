// Independent reference implementations used only by tests. Nothing here may
// call the filter/evidence code paths it is checking.
#pragma once

#include <cmath>
#include <random>

#include "dada/models.hpp"
#include "dada/types.hpp"

namespace oracles {

using dada::Mat;
using dada::Vec;

// Dense Gaussian log density straight from the textbook formula, with an
// explicit inverse and determinant. Deliberately naive.
inline double naive_log_mvn(const Vec& x, const Vec& mean, const Mat& cov) {
  const double d = static_cast<double>(x.size());
  Vec r = x - mean;
  return -0.5 * (d * std::log(2.0 * M_PI) + std::log(cov.determinant()) +
                 r.dot(cov.inverse() * r));
}

// Gaussian log density via an eigendecomposition (works for larger stacked
// systems; numerically different route from any Cholesky-based code).
inline double eig_log_mvn(const Vec& x, const Vec& mean, const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const Vec& ev = es.eigenvalues();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) log_det += std::log(ev(i));
  Vec w = es.eigenvectors().transpose() * (x - mean);
  double quad = (w.array().square() / ev.array()).sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * M_PI) +
                 log_det + quad);
}

// Log density of the stacked observation vector (y_0..y_T) of a
// linear-Gaussian state-space model, built from the explicit joint Gaussian:
//   x_0 ~ N(m0, P0), x_{t+1} = M x_t + v, y_t = H x_t + w.
inline double joint_gaussian_log_evidence(const Mat& m, const Mat& h,
                                          const Mat& q, const Mat& r,
                                          const Vec& m0, const Mat& p0,
                                          const std::vector<Vec>& y) {
  const int last = static_cast<int>(y.size()) - 1;
  const auto d = h.rows();

  std::vector<Vec> mean_x(y.size());
  std::vector<Mat> var_x(y.size());
  mean_x[0] = m0;
  var_x[0] = p0;
  for (int t = 1; t <= last; ++t) {
    mean_x[t] = m * mean_x[t - 1];
    var_x[t] = m * var_x[t - 1] * m.transpose() + q;
  }

  const auto dim = d * (last + 1);
  Vec mu(dim);
  Mat cov = Mat::Zero(dim, dim);
  Vec stacked(dim);
  for (int t = 0; t <= last; ++t) {
    mu.segment(t * d, d) = h * mean_x[t];
    stacked.segment(t * d, d) = y[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t <= last; ++t) {
    // Cov(x_s, x_t) = M^(s-t) Var(x_t) for s >= t
    Mat cxx = var_x[t];
    cov.block(t * d, t * d, d, d) = h * cxx * h.transpose() + r;
    for (int s = t + 1; s <= last; ++s) {
      cxx = (m * cxx).eval();
      Mat cyy = h * cxx * h.transpose();
      cov.block(s * d, t * d, d, d) = cyy;
      cov.block(t * d, s * d, d, d) = cyy.transpose();
    }
  }
  cov = 0.5 * (cov + cov.transpose());
  return eig_log_mvn(stacked, mu, cov);
}

// Joint Gaussian of a scalar AR(1) path from the autocovariance recursion:
// Var(y_0) = prior sd^2, Var(y_{t+1}) = a^2 Var(y_t) + s^2, and
// Cov(y_s, y_t) = a^(s-t) Var(y_t).
inline double ar1_joint_log_density(double a, double noise_std,
                                    double prior_mean, double prior_std,
                                    const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  Vec mu(n);
  Vec v(n);
  mu(0) = prior_mean;
  v(0) = prior_std * prior_std;
  for (int t = 1; t < n; ++t) {
    mu(t) = a * mu(t - 1);
    v(t) = a * a * v(t - 1) + noise_std * noise_std;
  }
  Mat cov(n, n);
  for (int t = 0; t < n; ++t)
    for (int s = t; s < n; ++s) {
      double c = std::pow(a, s - t) * v(t);
      cov(s, t) = c;
      cov(t, s) = c;
    }
  Vec x(n);
  for (int t = 0; t < n; ++t) x(t) = y[static_cast<std::size_t>(t)];
  return eig_log_mvn(x, mu, cov);
}

// Random linear-Gaussian model pieces, reproducible from the engine.
struct RandomLinearModel {
  Mat m, h, q, r, p0;
  Vec m0;
};

inline Mat random_matrix(std::mt19937_64& eng, Eigen::Index rows,
                         Eigen::Index cols) {
  std::normal_distribution<double> g;
  Mat a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = g(eng);
  return a;
}

inline Mat random_spd(std::mt19937_64& eng, Eigen::Index n, double jitter) {
  Mat a = random_matrix(eng, n, n);
  return a * a.transpose() + jitter * Mat::Identity(n, n);
}

inline RandomLinearModel random_linear_model(std::mt19937_64& eng, int n,
                                             int d) {
  RandomLinearModel mod;
  mod.m = random_matrix(eng, n, n);
  double radius = mod.m.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) mod.m *= 0.9 / radius;
  mod.h = random_matrix(eng, d, n);
  mod.q = random_spd(eng, n, 0.2);
  mod.r = random_spd(eng, d, 0.2);
  mod.p0 = random_spd(eng, n, 0.3);
  mod.m0 = random_matrix(eng, n, 1).col(0);
  return mod;
}

// Second, independent Euler step of the forced Lorenz system; kept free of
// the production types on purpose.
inline std::array<double, 3> independent_l63_step(
    const std::array<double, 3>& s, double sigma, double rho, double beta,
    double lambda, double theta_deg, double dt) {
  const double th = theta_deg * M_PI / 180.0;
  return {s[0] + dt * (sigma * (s[1] - s[0]) + lambda * std::cos(th)),
          s[1] + dt * (rho * s[0] - s[1] - s[0] * s[2] + lambda * std::sin(th)),
          s[2] + dt * (s[0] * s[1] - beta * s[2])};
}

}  // namespace oracles
