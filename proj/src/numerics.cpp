#include "dada/numerics.hpp"

#include <cmath>
#include <limits>

namespace dada {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
}

double condition_number_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  const Vec& ev = es.eigenvalues();
  double lo = ev.cwiseAbs().minCoeff();
  double hi = ev.cwiseAbs().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double log_mvn_pdf(const Vec& x, const Vec& mean, const Mat& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() ||
      cov.cols() != x.size()) {
    throw DimensionError("log_mvn_pdf: inconsistent dimensions");
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError("covariance not positive definite",
                              condition_number_sym(cov));
  }
  const Mat& l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  Vec r = x - mean;
  // quadratic form via one triangular solve: ||L^-1 r||^2
  Vec w = llt.matrixL().solve(r);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det +
                 w.squaredNorm());
}

double log_normal_pdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw DomainError("log_normal_pdf: sd must be positive");
  double z = (x - mean) / sd;
  return -0.5 * (kLog2Pi + z * z) - std::log(sd);
}

Vec mvn_sample(const Vec& mean, const Mat& sqrt_cov, Rng& rng) {
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.gaussian();
  return mean + sqrt_cov * z;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("normal_quantile: p must lie in (0, 1)");

  // Acklam's approximation, |relative error| < 1.15e-9 before polishing.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace dada
