#include "fkpam/path_sampling.hpp"

#include <cmath>

#include "fkpam/rng.hpp"

namespace fkpam {

BrownianPath BrownianPath::restrict_to(std::size_t factor) const {
    if (factor == 0 || grid.steps % factor != 0)
        throw DomainError("BrownianPath::restrict_to: factor must divide the step count");
    BrownianPath out(PathGrid(grid.t, grid.steps / factor), dim);
    for (std::size_t l = 0; l <= out.grid.steps; ++l)
        for (std::size_t j = 0; j < dim; ++j) out.at(l)[j] = at(l * factor)[j];
    return out;
}

BrownianPath BrownianPath::prefix(std::size_t new_steps) const {
    if (new_steps == 0 || new_steps > grid.steps)
        throw DomainError("BrownianPath::prefix: bad step count");
    BrownianPath out(PathGrid(grid.t * static_cast<double>(new_steps) /
                                  static_cast<double>(grid.steps),
                              new_steps),
                     dim);
    for (std::size_t l = 0; l <= new_steps; ++l)
        for (std::size_t j = 0; j < dim; ++j) out.at(l)[j] = at(l)[j];
    return out;
}

BridgeSpec::BridgeSpec(double t_in, std::vector<double> x_in, std::vector<double> y_in)
    : t(t_in), x(std::move(x_in)), y(std::move(y_in)) {
    if (!(t > 0.0)) throw DomainError("BridgeSpec: horizon must be positive");
    if (x.size() != y.size() || x.empty()) throw DomainError("BridgeSpec: endpoint dimension mismatch");
}

BrownianPath sample_bm(std::uint64_t seed, const PathGrid& grid, const std::vector<double>& x0) {
    const std::size_t d = x0.size();
    if (d == 0) throw DomainError("sample_bm: dimension must be >= 1");
    BrownianPath path(grid, d);
    RngStream rng(seed);
    const double step_sd = std::sqrt(grid.dt());
    for (std::size_t j = 0; j < d; ++j) path.at(0)[j] = x0[j];
    for (std::size_t l = 1; l <= grid.steps; ++l)
        for (std::size_t j = 0; j < d; ++j)
            path.at(l)[j] = path.at(l - 1)[j] + step_sd * rng.next_normal();
    return path;
}

BrownianPath bridge_from_bm(const BrownianPath& path) {
    for (std::size_t j = 0; j < path.dim; ++j)
        if (path.at(0)[j] != 0.0)
            throw DomainError("bridge_from_bm: path must start at the origin");
    BrownianPath out(path.grid, path.dim);
    const double* end = path.at(path.grid.steps);
    for (std::size_t l = 0; l <= path.grid.steps; ++l) {
        double frac = path.grid.fraction(l);
        for (std::size_t j = 0; j < path.dim; ++j) out.at(l)[j] = path.at(l)[j] - frac * end[j];
    }
    return out;
}

BrownianPath sample_bridge(std::uint64_t seed, const PathGrid& grid, const BridgeSpec& spec) {
    if (grid.t != spec.t) throw GridMismatch("sample_bridge: grid horizon differs from spec");
    BrownianPath free_path = sample_bm(seed, grid, std::vector<double>(spec.x.size(), 0.0));
    BrownianPath out = bridge_from_bm(free_path);
    for (std::size_t l = 0; l <= grid.steps; ++l) {
        double frac = grid.fraction(l);
        for (std::size_t j = 0; j < out.dim; ++j)
            out.at(l)[j] += frac * spec.y[j] + (1.0 - frac) * spec.x[j];
    }
    return out;
}

}  // namespace fkpam
