#pragma once

#include "dada/rng.hpp"
#include "dada/types.hpp"

namespace dada {

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

// Condition number of a symmetric matrix from its eigenvalue spread.
double condition_number_sym(const Mat& a);

// Symmetric square root of a PSD matrix; eigenvalues are clamped at zero so
// that semidefinite inputs (zero covariances included) are accepted.
Mat psd_sqrt(const Mat& a);

// log N(x; mean, cov) through a Cholesky factorization of cov.
// Throws IllConditionedError when cov is not positive definite.
double log_mvn_pdf(const Vec& x, const Vec& mean, const Mat& cov);

// Scalar Gaussian log density.
double log_normal_pdf(double x, double mean, double sd);

// Draws x = mean + sqrt_cov * z with z standard normal, coordinates in order.
Vec mvn_sample(const Vec& mean, const Mat& sqrt_cov, Rng& rng);

// Standard normal CDF and its inverse (Acklam's rational approximation
// polished with one Halley step).
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace dada
