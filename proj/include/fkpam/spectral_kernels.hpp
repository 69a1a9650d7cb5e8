#pragma once

#include <cstddef>
#include <vector>

#include "fkpam/interp.hpp"

namespace fkpam {

/// Exact mass of the power density |v|^{a-1} over [l, r], a > 0.
double power_cell_mass(double a, double l, double r);

/// Product power-law spectral density q(xi) = C_q prod_j |xi_j|^{alpha_j - 1}
/// with alpha_1 > 1, alpha_j > 0 and total alpha < 2.
struct SpaceSpectralDensity {
    double cq = 1.0;
    std::vector<double> alphas;
    double alpha_total = 0.0;

    SpaceSpectralDensity(double cq_in, std::vector<double> alphas_in);

    std::size_t dim() const { return alphas.size(); }
    double eval(const double* xi, std::size_t d) const;
    double eval(const std::vector<double>& xi) const { return eval(xi.data(), xi.size()); }
};

/// Nonnegative positive-definite temporal covariance: a nonnegative sum of a
/// constant part and Riesz parts c |tau|^{-alpha0}, each with an explicit
/// spectral measure (an atom at zero, resp. the density c k(alpha0)
/// |eta|^{alpha0-1}).
class TimeKernel {
public:
    struct Part {
        double c;
        double alpha0;  // 0 for constant parts
        bool riesz;
    };

    static TimeKernel constant(double c);
    static TimeKernel riesz(double c, double alpha0);
    static TimeKernel sum(std::vector<Part> parts);

    double alpha0_effective() const { return alpha0_effective_; }
    bool has_riesz() const;
    const std::vector<Part>& parts() const { return parts_; }

    /// gamma_0(tau); throws SingularEvaluation at tau = 0 when a Riesz part
    /// is present.
    double eval(double tau) const;

    /// gamma_0 convolved with the triangular kernel h_delta * h_delta(-.)
    /// (box mollifier autocorrelation); closed-form piecewise integration of
    /// the Riesz parts, constant parts unchanged.
    double smoothed(double delta, double tau) const;

    /// Spectral atom at eta = 0 (total constant mass).
    double constant_mass() const;
    /// Density of the Riesz spectral parts at eta != 0.
    double riesz_spectral_density(double eta) const;
    /// Exact Riesz spectral mass over the cell [l, r].
    double riesz_cell_mass(double l, double r) const;

private:
    explicit TimeKernel(std::vector<Part> parts);
    std::vector<Part> parts_;
    double alpha0_effective_ = 0.0;
};

/// Admissible pairing: alpha_total < 2 (1 - alpha0_effective).
struct PairedCovariance {
    SpaceSpectralDensity space;
    TimeKernel time;
    PairedCovariance(SpaceSpectralDensity space_in, TimeKernel time_in);
};

/// gamma_eps(x) = C_q prod_j g_{alpha_j, eps}(x_j) where
/// g_{a,eps}(x) = \int e^{i x xi} e^{-eps xi^2} |xi|^{a-1} dxi, held as
/// per-coordinate tables over |x| in [1e-6, x_max] (log-spaced abscissae,
/// shape-preserving cubic interpolation in log |x|).
class RegularizedSpaceKernel {
public:
    RegularizedSpaceKernel(const SpaceSpectralDensity& density, double epsilon,
                           double x_max = 1e3, int points_per_decade = 512);

    double epsilon() const { return eps_; }
    std::size_t dim() const { return alphas_.size(); }
    double x_max() const { return x_max_; }

    /// gamma_eps(x); refuses |x_j| beyond the table range.
    double eval(const double* x, std::size_t d) const;
    double eval(const std::vector<double>& x) const { return eval(x.data(), x.size()); }

    /// Per-coordinate factor g_{alpha_j, eps}(x_j).
    double factor(std::size_t j, double xj) const;

    /// gamma_eps(0) = C_q prod_j Gamma(alpha_j/2) eps^{-alpha/2}, exact.
    double at_zero() const { return value_at_zero_; }

    const std::vector<double>& alphas() const { return alphas_; }
    double cq() const { return cq_; }

private:
    double cq_;
    std::vector<double> alphas_;
    double eps_;
    double x_max_;
    double value_at_zero_;
    std::vector<EvenLogTable> tables_;
};

}  // namespace fkpam
