#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fkpam/field_synthesis.hpp"
#include "fkpam/initial_data.hpp"
#include "fkpam/path_sampling.hpp"
#include "fkpam/special.hpp"
#include "fkpam/spectral_kernels.hpp"

namespace fkpam {

/// Endpoint-induced affine shift between two paths:
///   shift(s, r) = (s/t) u - (r/t) v.
/// Zero vectors mean no shift.
struct PairShift {
    std::vector<double> u, v;

    static PairShift zero(std::size_t d) {
        return {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    }
    static PairShift endpoints(std::vector<double> u_in, std::vector<double> v_in) {
        return {std::move(u_in), std::move(v_in)};
    }
};

/// Trapezoid approximation of
///   \int_0^t \int_0^t gamma_0(s - r) K(path_j(s) - path_k(r) + shift(s,r)) ds dr.
/// The singular diagonal of a Riesz gamma_0 is replaced by its box-mollified
/// value at scale delta = t / L. K is any even spatial kernel exposing
/// eval(const double*, size_t).
template <typename Kernel>
double pair_interaction(const BrownianPath& path_j, const BrownianPath& path_k,
                        const PairShift& shift, const TimeKernel& time_kernel,
                        const Kernel& kernel) {
    if (!(path_j.grid == path_k.grid)) throw GridMismatch("pair_interaction: path grids differ");
    if (path_j.dim != path_k.dim) throw GridMismatch("pair_interaction: path dimensions differ");
    const std::size_t L = path_j.grid.steps;
    const std::size_t d = path_j.dim;
    const double dt = path_j.grid.dt();
    if (shift.u.size() != d || shift.v.size() != d)
        throw DomainError("pair_interaction: shift dimension mismatch");

    std::vector<double> gam(L + 1);
    gam[0] = time_kernel.has_riesz() ? time_kernel.smoothed(dt, 0.0) : time_kernel.eval(0.0);
    for (std::size_t k = 1; k <= L; ++k) gam[k] = time_kernel.eval(static_cast<double>(k) * dt);

    std::vector<double> w(L + 1, dt);
    w[0] *= 0.5;
    w[L] *= 0.5;

    double diff[8];
    if (d > 8) throw DomainError("pair_interaction: dimension too large");
    double acc = 0.0;
    for (std::size_t l = 0; l <= L; ++l) {
        const double* pj = path_j.at(l);
        const double frac_l = path_j.grid.fraction(l);
        for (std::size_t m = 0; m <= L; ++m) {
            const double* pk = path_k.at(m);
            const double frac_m = path_k.grid.fraction(m);
            for (std::size_t c = 0; c < d; ++c)
                diff[c] = pj[c] - pk[c] + frac_l * shift.u[c] - frac_m * shift.v[c];
            std::size_t lag = l > m ? l - m : m - l;
            acc += w[l] * w[m] * gam[lag] * kernel.eval(diff, d);
        }
    }
    return acc;
}

/// Shared fixtures for the path-space estimators.
struct FkContext {
    PairedCovariance cov;
    RegularizedSpaceKernel kernel;  // gamma_eps tables
    std::size_t path_steps = 64;
    unsigned workers = 1;

    FkContext(PairedCovariance cov_in, double epsilon, std::size_t path_steps_in = 64,
              unsigned workers_in = 1, double kernel_x_max = 1e3)
        : cov(std::move(cov_in)), kernel(cov.space, epsilon, kernel_x_max),
          path_steps(path_steps_in), workers(workers_in) {}
};

struct MomentEstimate {
    int order = 1;
    double log_value = 0.0;
    double value = 0.0;
    double rel_se = 0.0;  // relative standard error of the value
    std::size_t n_samples = 0;
    double epsilon = 0.0;
};

/// Monte Carlo N-th moment through the conditional-Gaussian closed form: the
/// field is never sampled. Unit-constant data uses free Brownian motions
/// (the endpoint integral is exactly the Gaussian endpoint law); atom data
/// sums pinned-bridge terms over all atom tuples with endpoint shifts.
/// Guards: N <= 8 and at most 4 atoms.
MomentEstimate moment_mc(const FkContext& ctx, int order, double t, const std::vector<double>& x,
                         const InitialMeasure& u0, double theta, std::size_t n_samples,
                         std::uint64_t seed);

struct FkPointEstimate {
    double value = 0.0;
    double log_value = 0.0;
    double standard_error = 0.0;  // absolute SE of the value
    double rel_se = 0.0;
    std::size_t n_paths = 0;
    double exit_fraction = 0.0;  // fraction of paths that left the noise box
    double normalizer = 0.0;     // p_t * u0(x)
};

/// Feynman-Kac point value under one noise realization. Endpoints are drawn
/// from the normalized law p_t(y-x) u0(dy); the exponent integrates the
/// time-reversed field along the bridge with trapezoid weights. Paths leaving
/// the box are clamped to it and counted; a fraction above 5% refuses.
FkPointEstimate pointwise_fk(const NoiseRealization& noise, double t, const std::vector<double>& x,
                             const InitialMeasure& u0, double theta, std::size_t n_paths,
                             std::uint64_t seed, std::size_t path_steps, unsigned workers = 1);

struct GirsanovCheck {
    double log_bridge = 0.0;
    double bridge_rel_se = 0.0;
    double log_free = 0.0;
    double free_rel_se = 0.0;
    double paired_diff = 0.0;     // mean of exp(Q_free) - exp(Q_bridge), common paths
    double paired_diff_se = 0.0;
    // Half-horizon comparison: the bridge restricted to [0, t/2] is
    // absolutely continuous with respect to free motion with density at most
    // 2^{d/2} per path, so
    //   E exp(Q_n(bridge|[0,t/2])) <= 2^{n d / 2} E exp(Q_n(free|[0,t/2])).
    double log_bridge_half = 0.0;
    double bridge_half_rel_se = 0.0;
    double log_free_half = 0.0;
    double free_half_rel_se = 0.0;
    double half_density_log_bound = 0.0;  // (n d / 2) log 2
};

/// Estimates E exp(Q_n) with pinned bridges and with the free motions they
/// were built from (common random numbers), Q_n the zero-shift exponent.
/// Also evaluates both exponents restricted to the first half of the horizon,
/// where the change-of-measure bound gives a rigorous one-sided comparison.
GirsanovCheck girsanov_bridge_check(const FkContext& ctx, int n, double t, double theta,
                                    std::size_t n_samples, std::uint64_t seed);

struct LatticeEstimate {
    std::vector<double> x;
    double log_value = 0.0;
    double rel_se = 0.0;
    double exit_fraction = 0.0;
};

/// Pointwise estimates on an explicit lattice under one shared realization;
/// bridge substreams are derived from (seed, point index) so results do not
/// depend on the worker count.
std::vector<LatticeEstimate> fk_lattice(const NoiseRealization& noise, double t,
                                        const std::vector<std::vector<double>>& points,
                                        const InitialMeasure& u0, double theta,
                                        std::size_t n_paths, std::uint64_t seed,
                                        std::size_t path_steps, unsigned workers = 1);

struct MaxProfilePoint {
    double radius = 0.0;
    double log_max = 0.0;
    std::vector<double> argmax;
};

/// Running maxima of pointwise estimates over nested balls (inner_fraction =
/// 0) or annuli inner_fraction * R <= |x| <= R, on a uniform lattice of the
/// given density.
std::vector<MaxProfilePoint> spatial_max_profile(const NoiseRealization& noise, double t,
                                                 double theta, const InitialMeasure& u0,
                                                 const std::vector<double>& radii,
                                                 double grid_density, std::size_t n_paths,
                                                 std::uint64_t seed, std::size_t path_steps,
                                                 unsigned workers = 1,
                                                 double inner_fraction = 0.0);

/// Ordinary least squares of ys on xs; needs >= 3 points.
inline LineFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 3) throw DomainError("slope_fit: need at least three points");
    return fit_line(xs, ys);
}

}  // namespace fkpam
