#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "fkpam/spectral_kernels.hpp"

namespace fkpam {

/// Uniform nodes over [0, t] x box.
struct SpaceTimeGrid {
    double t = 1.0;
    std::size_t time_count = 2;  // nodes including both endpoints
    std::vector<double> lo, hi;
    std::vector<std::size_t> space_counts;  // nodes per coordinate, >= 2

    SpaceTimeGrid(double t_in, std::size_t time_count_in, std::vector<double> lo_in,
                  std::vector<double> hi_in, std::vector<std::size_t> space_counts_in);

    std::size_t dim() const { return lo.size(); }
    double dt() const { return t / static_cast<double>(time_count - 1); }
    double dx(std::size_t j) const {
        return (hi[j] - lo[j]) / static_cast<double>(space_counts[j] - 1);
    }
    std::size_t space_nodes() const;
    std::size_t total_nodes() const { return time_count * space_nodes(); }

    bool operator==(const SpaceTimeGrid& other) const {
        return t == other.t && time_count == other.time_count && lo == other.lo &&
               hi == other.hi && space_counts == other.space_counts;
    }
};

/// Symmetric frequency boxes: eta cells over [-eta_cutoff, eta_cutoff] and
/// per-coordinate xi cells over [-xi_cutoff_j, xi_cutoff_j]. Counts are even
/// so a cell edge falls on zero.
struct FrequencyGrid {
    double eta_cutoff = 1.0;
    std::size_t eta_count = 2;
    std::vector<double> xi_cutoff;
    std::vector<std::size_t> xi_count;

    FrequencyGrid(double eta_cutoff_in, std::size_t eta_count_in, std::vector<double> xi_cutoff_in,
                  std::vector<std::size_t> xi_count_in);

    /// Cutoffs and counts sized from the mollification scales and the target
    /// box so that the captured spectral mass reaches target_fraction and
    /// midpoint phases stay accurate across the box.
    static FrequencyGrid suggest(const PairedCovariance& cov, double epsilon, double delta,
                                 const SpaceTimeGrid& grid, double target_fraction = 0.95,
                                 std::size_t max_cells_per_axis = 8192);
};

/// One realization of the mollified field on a space-time grid, synthesized
/// as a Hermitian random-phase sum over frequency cells. Values are exactly
/// Gaussian and stationary; their covariance is the truncated mode sum.
struct NoiseRealization {
    SpaceTimeGrid grid;
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    double captured_fraction = 0.0;  // truncated mass / full mollified mass
    std::vector<double> values;      // time-major, then row-major space

    NoiseRealization(SpaceTimeGrid grid_in) : grid(std::move(grid_in)) {}

    double value_at(std::size_t time_index, std::size_t space_flat) const {
        return values[time_index * grid.space_nodes() + space_flat];
    }

    /// Multilinear interpolation, exact at nodes; throws OutOfRange outside
    /// [0,t] x box.
    double evaluate(double s, const double* x, std::size_t d) const;
    double evaluate(double s, const std::vector<double>& x) const {
        return evaluate(s, x.data(), x.size());
    }
};

/// Synthesizes one realization with target covariance
/// gamma_{0,delta}(dt) gamma_eps(dx), truncated to the frequency boxes.
/// Mode weights combine exact power-law cell masses with the sinc^2 and
/// Gaussian attenuations evaluated at cell midpoints. Throws DomainError on
/// Nyquist violations (cutoff * grid spacing must stay below pi).
NoiseRealization synthesize_noise(std::uint64_t seed, const PairedCovariance& cov, double epsilon,
                                  double delta, const SpaceTimeGrid& grid,
                                  const FrequencyGrid& freq, unsigned workers = 1);

/// The exact covariance of synthesized fields at the given lags: the mode sum
/// sum_k w_k cos(eta_k tau + xi_k . h).
double truncated_covariance(const PairedCovariance& cov, double epsilon, double delta,
                            const FrequencyGrid& freq, double time_lag,
                            const std::vector<double>& space_lag);

/// Captured spectral mass fraction of the frequency boxes.
double captured_mass_fraction(const PairedCovariance& cov, double epsilon, double delta,
                              const FrequencyGrid& freq);

/// Unbiased cross-realization covariance estimator at node-aligned lags.
/// Returns {estimate, standard_error}; the scatter is taken across
/// realizations. Lags must be integer multiples of the grid spacings.
std::pair<double, double> empirical_covariance(const std::vector<NoiseRealization>& realizations,
                                               double time_lag,
                                               const std::vector<double>& space_lag);

}  // namespace fkpam
