#include "fkpam/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fkpam/errors.hpp"

namespace fkpam {

namespace {

// Kummer-transformed series: M(c,1/2,-z) = e^{-z} M(1/2-c, 1/2, z).
// For c in (-1/2,1/2) at most the leading Pochhammer factor is negative, so
// the series has no catastrophic cancellation.
double kummer_series(double c, double z) {
    const double cc = 0.5 - c;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 100000; ++k) {
        term *= (cc + k) / ((0.5 + k) * (k + 1.0)) * z;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(-z) * sum;
}

// Large-z asymptotics through the Kummer transform:
//   M(c,1/2,-z) = e^{-z} M(1/2-c,1/2,z)
//               ~ sqrt(pi)/Gamma(1/2-c) z^{-c} sum_k (c)_k (c+1/2)_k / (k! z^k),
// truncated at the smallest term.
double kummer_asymptotic(double c, double z) {
    double pre = std::sqrt(std::numbers::pi) / std::tgamma(0.5 - c) * std::pow(z, -c);
    double term = 1.0;
    double sum = 1.0;
    double smallest = std::abs(term);
    for (int k = 0; k < 60; ++k) {
        term *= (c + k) * (c + 0.5 + k) / ((k + 1.0) * z);
        if (std::abs(term) > smallest) break;
        smallest = std::abs(term);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return pre * sum;
}

}  // namespace

double kummer_m_half(double c, double z) {
    if (z < 0.0) throw DomainError("kummer_m_half expects z >= 0");
    return z <= 100.0 ? kummer_series(c, z) : kummer_asymptotic(c, z);
}

double damped_power_transform(double a, double eps, double x) {
    if (!(a > 0.0 && a < 2.0)) throw DomainError("damped_power_transform: a must lie in (0,2)");
    if (!(eps > 0.0)) throw DomainError("damped_power_transform: eps must be positive");
    const double z = x * x / (4.0 * eps);
    return std::tgamma(0.5 * a) * std::pow(eps, -0.5 * a) * kummer_m_half(0.5 * a, z);
}

double riesz_spectral_norm(double alpha0) {
    if (!(alpha0 > 0.0 && alpha0 < 1.0))
        throw DomainError("riesz_spectral_norm: alpha0 must lie in (0,1)");
    return 1.0 / (2.0 * std::tgamma(alpha0) * std::cos(0.5 * std::numbers::pi * alpha0));
}

double heat_kernel(double t, const double* x, std::size_t d) {
    return std::exp(log_heat_kernel(t, x, d));
}

double log_heat_kernel(double t, const double* x, std::size_t d) {
    if (!(t > 0.0)) throw DomainError("heat_kernel: t must be positive");
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += x[j] * x[j];
    return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * t) - 0.5 * sq / t;
}

double log_sum_exp(const std::vector<double>& v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

LogMeanResult log_domain_mean(const std::vector<double>& log_samples) {
    const std::size_t n = log_samples.size();
    if (n == 0) return {-std::numeric_limits<double>::infinity(), 0.0};
    double m = *std::max_element(log_samples.begin(), log_samples.end());
    if (!std::isfinite(m)) return {m, 0.0};
    double s1 = 0.0, s2 = 0.0;
    for (double x : log_samples) {
        double e = std::exp(x - m);
        s1 += e;
        s2 += e * e;
    }
    double mean = s1 / n;
    double var = std::max(0.0, s2 / n - mean * mean) * n / std::max<std::size_t>(n - 1, 1);
    double rel_se = n > 1 ? std::sqrt(var / n) / mean : 0.0;
    return {m + std::log(mean), rel_se};
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DomainError("fit_line: size mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw DomainError("fit_line: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_line: degenerate abscissae (zero variance)");
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = ys[i] - (intercept + slope * xs[i]);
        ss_res += r * r;
    }
    double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    r2 = std::clamp(r2, 0.0, 1.0);
    double slope_se = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
    return {slope, intercept, r2, slope_se};
}

}  // namespace fkpam
