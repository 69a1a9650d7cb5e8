#pragma once

#include <cstddef>
#include <vector>

namespace fkpam {

/// Fourier transform of the Gaussian-damped power spectral factor,
///     g(x) = \int e^{i x xi} e^{-eps xi^2} |xi|^{a-1} dxi,
/// for a in (0,2), eps > 0. Evaluated through the confluent hypergeometric
/// representation g = Gamma(a/2) eps^{-a/2} M(a/2, 1/2, -x^2/(4 eps)),
/// with the Kummer-transformed series at moderate argument and the large-z
/// asymptotic series beyond. Relative accuracy ~1e-13 away from zeros.
double damped_power_transform(double a, double eps, double x);

/// M(c, 1/2, -z) for z >= 0 as used above; exposed for tests.
double kummer_m_half(double c, double z);

/// Riesz normalization k(a0) in the exact Fourier pair
///   |t|^{-a0} = k(a0) * \int e^{i eta t} |eta|^{a0-1} deta,
/// i.e. k(a0) = 1 / (2 Gamma(a0) cos(pi a0 / 2)), a0 in (0,1).
double riesz_spectral_norm(double alpha0);

/// d-dimensional heat kernel p_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / 2t).
double heat_kernel(double t, const double* x, std::size_t d);
double log_heat_kernel(double t, const double* x, std::size_t d);

/// log(sum(exp(v))) without overflow; -inf for an empty input.
double log_sum_exp(const std::vector<double>& v);

/// Sample-mean estimate of E[exp(X)] from log-domain samples.
/// Returns {log_mean, rel_se} where rel_se = sd(exp X)/(mean * sqrt(n)).
struct LogMeanResult {
    double log_mean;
    double rel_se;
};
LogMeanResult log_domain_mean(const std::vector<double>& log_samples);

/// Ordinary least squares of ys on xs.
struct LineFit {
    double slope;
    double intercept;
    double r_squared;
    double slope_se;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace fkpam
