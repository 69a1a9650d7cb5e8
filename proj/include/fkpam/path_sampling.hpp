#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fkpam/errors.hpp"

namespace fkpam {

/// Uniform grid s_l = l t / L on [0, t].
struct PathGrid {
    double t = 1.0;
    std::size_t steps = 1;

    PathGrid(double t_in, std::size_t steps_in) : t(t_in), steps(steps_in) {
        if (!(t > 0.0)) throw DomainError("PathGrid: horizon must be positive");
        if (steps < 1) throw DomainError("PathGrid: need at least one step");
    }

    /// Fraction l / L, exact at the endpoints.
    double fraction(std::size_t l) const { return static_cast<double>(l) / static_cast<double>(steps); }
    double time_at(std::size_t l) const { return t * fraction(l); }
    double dt() const { return t / static_cast<double>(steps); }

    bool operator==(const PathGrid& other) const { return t == other.t && steps == other.steps; }
};

/// Discretized d-dimensional path; positions are row-major (L+1) x d.
struct BrownianPath {
    PathGrid grid;
    std::size_t dim;
    std::vector<double> positions;

    BrownianPath(PathGrid grid_in, std::size_t dim_in)
        : grid(grid_in), dim(dim_in), positions((grid_in.steps + 1) * dim_in, 0.0) {}

    double* at(std::size_t l) { return positions.data() + l * dim; }
    const double* at(std::size_t l) const { return positions.data() + l * dim; }

    /// Keeps every `factor`-th node; restriction of Brownian data to a
    /// coarser grid is exact in law.
    BrownianPath restrict_to(std::size_t factor) const;

    /// Keeps the first `new_steps` steps as a path over [0, t new_steps / L].
    BrownianPath prefix(std::size_t new_steps) const;
};

/// Pinning data for the bridge from x to y over [0, t].
struct BridgeSpec {
    double t;
    std::vector<double> x;
    std::vector<double> y;

    BridgeSpec(double t_in, std::vector<double> x_in, std::vector<double> y_in);
};

/// Standard Brownian motion started at x0; increments are independent
/// N(0, (t/L) I). Deterministic in (seed, grid, x0).
BrownianPath sample_bm(std::uint64_t seed, const PathGrid& grid, const std::vector<double>& x0);

/// B_{0,t}(s) = B(s) - (s/t) B(t); requires a path started at the origin.
/// Both endpoints are exactly zero.
BrownianPath bridge_from_bm(const BrownianPath& path);

/// Pinned bridge x -> y: bridge_from_bm plus the linear interpolant.
BrownianPath sample_bridge(std::uint64_t seed, const PathGrid& grid, const BridgeSpec& spec);

}  // namespace fkpam
