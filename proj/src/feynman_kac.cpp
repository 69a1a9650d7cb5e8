#include "fkpam/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkpam/parallel.hpp"
#include "fkpam/rng.hpp"

namespace fkpam {

namespace {

constexpr std::uint64_t kMomentTag = 0x6d6f6d656e74ULL;
constexpr std::uint64_t kPointTag = 0x706f696e74ULL;
constexpr std::uint64_t kGirsanovTag = 0x676972ULL;

}  // namespace

MomentEstimate moment_mc(const FkContext& ctx, int order, double t, const std::vector<double>& x,
                         const InitialMeasure& u0, double theta, std::size_t n_samples,
                         std::uint64_t seed) {
    if (order < 1 || order > 8) throw DomainError("moment_mc: order must lie in 1..8");
    const std::size_t d = ctx.cov.space.dim();
    if (x.size() != d || u0.dim() != d) throw DomainError("moment_mc: dimension mismatch");
    const bool unit = u0.kind() == InitialMeasure::Kind::UnitConstant;
    const bool atoms = u0.kind() == InitialMeasure::Kind::Atoms;
    if (!unit && !atoms)
        throw DomainError("moment_mc: supported initial data are unit constant and atoms");
    if (atoms && u0.atom_list().size() > 4)
        throw DomainError("moment_mc: at most 4 atoms");

    MomentEstimate out;
    out.order = order;
    out.n_samples = n_samples;
    out.epsilon = ctx.kernel.epsilon();

    const double log_z = log_heat_convolve(u0, t, x);
    if (theta == 0.0) {
        out.log_value = order * log_z;
        out.value = std::exp(out.log_value);
        out.rel_se = 0.0;
        out.n_samples = 0;
        return out;
    }

    const PathGrid grid(t, ctx.path_steps);
    const std::size_t N = static_cast<std::size_t>(order);
    const double half_theta_sq = 0.5 * theta * theta;
    std::vector<double> log_samples(n_samples);

    if (unit) {
        parallel_for(n_samples, ctx.workers, [&](std::size_t i) {
            std::vector<BrownianPath> paths;
            paths.reserve(N);
            for (std::size_t j = 0; j < N; ++j)
                paths.push_back(sample_bm(derive_seed(seed, {kMomentTag, i, j}), grid,
                                          std::vector<double>(d, 0.0)));
            PairShift zero = PairShift::zero(d);
            double expo = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                expo += pair_interaction(paths[j], paths[j], zero, ctx.cov.time, ctx.kernel);
                for (std::size_t k = j + 1; k < N; ++k)
                    expo += 2.0 * pair_interaction(paths[j], paths[k], zero, ctx.cov.time,
                                                   ctx.kernel);
            }
            log_samples[i] = half_theta_sq * expo;
        });
        LogMeanResult m = log_domain_mean(log_samples);
        out.log_value = m.log_mean + order * log_z;  // log_z = 0 here
        out.rel_se = m.rel_se;
    } else {
        const auto& atom_list = u0.atom_list();
        const std::size_t n_at = atom_list.size();
        // Endpoint shifts relative to x.
        std::vector<std::vector<double>> z(n_at, std::vector<double>(d));
        std::vector<double> log_w(n_at);
        for (std::size_t a = 0; a < n_at; ++a) {
            std::vector<double> diff(d);
            for (std::size_t c = 0; c < d; ++c) {
                z[a][c] = atom_list[a].y[c] - x[c];
                diff[c] = x[c] - atom_list[a].y[c];
            }
            log_w[a] = std::log(atom_list[a].w) + log_heat_kernel(t, diff.data(), d);
        }
        // All atom tuples, row-major.
        std::size_t tuple_count = 1;
        for (std::size_t j = 0; j < N; ++j) tuple_count *= n_at;

        parallel_for(n_samples, ctx.workers, [&](std::size_t i) {
            std::vector<BrownianPath> bridges;
            bridges.reserve(N);
            BridgeSpec pinned(t, std::vector<double>(d, 0.0), std::vector<double>(d, 0.0));
            for (std::size_t j = 0; j < N; ++j)
                bridges.push_back(
                    sample_bridge(derive_seed(seed, {kMomentTag, i, j}), grid, pinned));

            // V[j][k][a][b] for the exponent of every tuple.
            std::vector<double> V(N * N * n_at * n_at, 0.0);
            auto vat = [&](std::size_t j, std::size_t k, std::size_t a, std::size_t b) -> double& {
                return V[((j * N + k) * n_at + a) * n_at + b];
            };
            for (std::size_t j = 0; j < N; ++j) {
                for (std::size_t k = j; k < N; ++k) {
                    for (std::size_t a = 0; a < n_at; ++a) {
                        std::size_t b0 = j == k ? a : 0;  // only matched atoms on the diagonal
                        std::size_t b1 = j == k ? a + 1 : n_at;
                        for (std::size_t b = b0; b < b1; ++b) {
                            double v = pair_interaction(bridges[j], bridges[k],
                                                        PairShift::endpoints(z[a], z[b]),
                                                        ctx.cov.time, ctx.kernel);
                            vat(j, k, a, b) = v;
                            vat(k, j, b, a) = v;
                        }
                    }
                }
            }
            std::vector<double> tuple_logs(tuple_count);
            std::vector<std::size_t> assign(N, 0);
            for (std::size_t tpl = 0; tpl < tuple_count; ++tpl) {
                std::size_t rem = tpl;
                for (std::size_t j = N; j-- > 0;) {
                    assign[j] = rem % n_at;
                    rem /= n_at;
                }
                double lw = 0.0;
                double expo = 0.0;
                for (std::size_t j = 0; j < N; ++j) {
                    lw += log_w[assign[j]];
                    for (std::size_t k = 0; k < N; ++k) expo += vat(j, k, assign[j], assign[k]);
                }
                tuple_logs[tpl] = lw + half_theta_sq * expo;
            }
            log_samples[i] = log_sum_exp(tuple_logs);
        });
        LogMeanResult m = log_domain_mean(log_samples);
        out.log_value = m.log_mean;
        out.rel_se = m.rel_se;
    }
    out.value = std::exp(out.log_value);
    return out;
}

namespace {

struct PathExponent {
    double log_weight = 0.0;  // endpoint importance weight (densities)
    double exponent = 0.0;    // theta * integral of the field along the path
    bool exited = false;
};

PathExponent fk_path_exponent(const NoiseRealization& noise, double t,
                              const std::vector<double>& x, const InitialMeasure& u0, double theta,
                              std::uint64_t path_seed, const PathGrid& grid) {
    const std::size_t d = x.size();
    RngStream rng(path_seed);
    PathExponent out;

    // Endpoint draw.
    std::vector<double> y(d);
    switch (u0.kind()) {
        case InitialMeasure::Kind::UnitConstant:
            for (std::size_t c = 0; c < d; ++c) y[c] = x[c] + std::sqrt(t) * rng.next_normal();
            break;
        case InitialMeasure::Kind::Atoms: {
            const auto& atoms = u0.atom_list();
            std::vector<double> logs(atoms.size());
            std::vector<double> diff(d);
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                for (std::size_t c = 0; c < d; ++c) diff[c] = x[c] - atoms[a].y[c];
                logs[a] = std::log(atoms[a].w) + log_heat_kernel(t, diff.data(), d);
            }
            double norm = log_sum_exp(logs);
            double u = rng.next_double();
            double cum = 0.0;
            std::size_t pick = atoms.size() - 1;
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                cum += std::exp(logs[a] - norm);
                if (u <= cum) {
                    pick = a;
                    break;
                }
            }
            y = atoms[pick].y;
            break;
        }
        case InitialMeasure::Kind::Density:
        case InitialMeasure::Kind::LogGrowth: {
            for (std::size_t c = 0; c < d; ++c) y[c] = x[c] + std::sqrt(t) * rng.next_normal();
            out.log_weight = std::log(u0.density_value(y.data()));
            break;
        }
    }

    // Bridge x -> y sampled from the same stream.
    BrownianPath free_path = sample_bm(rng.next_u64(), grid, std::vector<double>(d, 0.0));
    BrownianPath bridge = bridge_from_bm(free_path);
    double acc = 0.0;
    std::vector<double> pos(d);
    for (std::size_t l = 0; l <= grid.steps; ++l) {
        double frac = grid.fraction(l);
        bool clamped = false;
        for (std::size_t c = 0; c < d; ++c) {
            pos[c] = bridge.at(l)[c] + frac * y[c] + (1.0 - frac) * x[c];
            if (pos[c] < noise.grid.lo[c]) {
                pos[c] = noise.grid.lo[c];
                clamped = true;
            } else if (pos[c] > noise.grid.hi[c]) {
                pos[c] = noise.grid.hi[c];
                clamped = true;
            }
        }
        if (clamped) out.exited = true;
        double w = grid.dt() * (l == 0 || l == grid.steps ? 0.5 : 1.0);
        acc += w * noise.evaluate(t - grid.time_at(l), pos.data(), d);
    }
    out.exponent = theta * acc;
    return out;
}

}  // namespace

FkPointEstimate pointwise_fk(const NoiseRealization& noise, double t, const std::vector<double>& x,
                             const InitialMeasure& u0, double theta, std::size_t n_paths,
                             std::uint64_t seed, std::size_t path_steps, unsigned workers) {
    const std::size_t d = x.size();
    if (noise.grid.dim() != d || u0.dim() != d) throw DomainError("pointwise_fk: dimension mismatch");
    if (noise.grid.t != t) throw GridMismatch("pointwise_fk: horizon differs from the noise grid");

    FkPointEstimate out;
    out.normalizer = heat_convolve(u0, t, x);
    const bool weighted = u0.kind() == InitialMeasure::Kind::Density ||
                          u0.kind() == InitialMeasure::Kind::LogGrowth;
    if (theta == 0.0) {
        // Every estimator collapses to the heat convolution with zero
        // variance when the potential is off.
        out.value = out.normalizer;
        out.log_value = log_heat_convolve(u0, t, x);
        out.n_paths = 0;
        return out;
    }

    const PathGrid grid(t, path_steps);
    std::vector<double> log_samples(n_paths);
    std::vector<char> exited(n_paths, 0);
    parallel_for(n_paths, workers, [&](std::size_t i) {
        PathExponent pe = fk_path_exponent(noise, t, x, u0, theta, derive_seed(seed, {kPointTag, i}),
                                           grid);
        log_samples[i] = pe.log_weight + pe.exponent;
        exited[i] = pe.exited ? 1 : 0;
    });
    std::size_t exits = 0;
    for (char e : exited) exits += e;
    out.exit_fraction = static_cast<double>(exits) / static_cast<double>(n_paths);
    if (out.exit_fraction > 0.05)
        throw OutOfRange("pointwise_fk: excursion-exit fraction above 5%, enlarge the noise box");

    LogMeanResult m = log_domain_mean(log_samples);
    out.log_value = m.log_mean + (weighted ? 0.0 : log_heat_convolve(u0, t, x));
    out.value = std::exp(out.log_value);
    out.rel_se = m.rel_se;
    out.standard_error = out.value * m.rel_se;
    out.n_paths = n_paths;
    return out;
}

GirsanovCheck girsanov_bridge_check(const FkContext& ctx, int n, double t, double theta,
                                    std::size_t n_samples, std::uint64_t seed) {
    if (n < 1 || n > 4) throw DomainError("girsanov_bridge_check: n must lie in 1..4");
    if (ctx.path_steps % 2 != 0)
        throw DomainError("girsanov_bridge_check: needs an even step count");
    const std::size_t d = ctx.cov.space.dim();
    const PathGrid grid(t, ctx.path_steps);
    const double half_theta_sq = 0.5 * theta * theta;
    const std::size_t N = static_cast<std::size_t>(n);

    std::vector<double> log_bridge(n_samples), log_free(n_samples);
    std::vector<double> log_bridge_half(n_samples), log_free_half(n_samples);
    parallel_for(n_samples, ctx.workers, [&](std::size_t i) {
        std::vector<BrownianPath> free_paths, bridges;
        free_paths.reserve(N);
        bridges.reserve(N);
        for (std::size_t j = 0; j < N; ++j) {
            free_paths.push_back(sample_bm(derive_seed(seed, {kGirsanovTag, i, j}), grid,
                                           std::vector<double>(d, 0.0)));
            bridges.push_back(bridge_from_bm(free_paths.back()));
        }
        PairShift zero = PairShift::zero(d);
        auto exponent = [&](const std::vector<BrownianPath>& paths, bool half) {
            std::vector<BrownianPath> work;
            const std::vector<BrownianPath>* used = &paths;
            if (half) {
                work.reserve(N);
                for (const auto& p : paths) work.push_back(p.prefix(grid.steps / 2));
                used = &work;
            }
            double q = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                q += pair_interaction((*used)[j], (*used)[j], zero, ctx.cov.time, ctx.kernel);
                for (std::size_t k = j + 1; k < N; ++k)
                    q += 2.0 * pair_interaction((*used)[j], (*used)[k], zero, ctx.cov.time,
                                                ctx.kernel);
            }
            return half_theta_sq * q;
        };
        log_bridge[i] = exponent(bridges, false);
        log_free[i] = exponent(free_paths, false);
        log_bridge_half[i] = exponent(bridges, true);
        log_free_half[i] = exponent(free_paths, true);
    });

    GirsanovCheck out;
    LogMeanResult mb = log_domain_mean(log_bridge);
    LogMeanResult mf = log_domain_mean(log_free);
    out.log_bridge = mb.log_mean;
    out.bridge_rel_se = mb.rel_se;
    out.log_free = mf.log_mean;
    out.free_rel_se = mf.rel_se;
    LogMeanResult mbh = log_domain_mean(log_bridge_half);
    LogMeanResult mfh = log_domain_mean(log_free_half);
    out.log_bridge_half = mbh.log_mean;
    out.bridge_half_rel_se = mbh.rel_se;
    out.log_free_half = mfh.log_mean;
    out.free_half_rel_se = mfh.rel_se;
    out.half_density_log_bound = 0.5 * static_cast<double>(N) * static_cast<double>(d) *
                                 std::log(2.0);

    // Paired difference with the max-shift trick.
    double shift = std::max(mb.log_mean, mf.log_mean);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double diff = std::exp(log_free[i] - shift) - std::exp(log_bridge[i] - shift);
        s1 += diff;
        s2 += diff * diff;
    }
    double mean = s1 / static_cast<double>(n_samples);
    double var = std::max(0.0, s2 / static_cast<double>(n_samples) - mean * mean);
    out.paired_diff = mean * std::exp(shift);
    out.paired_diff_se = std::sqrt(var / static_cast<double>(n_samples)) * std::exp(shift);
    return out;
}

std::vector<LatticeEstimate> fk_lattice(const NoiseRealization& noise, double t,
                                        const std::vector<std::vector<double>>& points,
                                        const InitialMeasure& u0, double theta,
                                        std::size_t n_paths, std::uint64_t seed,
                                        std::size_t path_steps, unsigned workers) {
    std::vector<LatticeEstimate> out(points.size());
    parallel_for(points.size(), workers, [&](std::size_t p) {
        // Substreams key on the quantized point coordinates, not the lattice
        // index: a refined lattice reproduces the coarse points bit for bit
        // and only adds fresh ones, so refinement studies compare cleanly.
        std::uint64_t point_key = 0x6c617474ULL;
        for (double c : points[p]) {
            auto q = static_cast<std::int64_t>(std::llround(c * 1048576.0));
            point_key = derive_seed(point_key, {static_cast<std::uint64_t>(q)});
        }
        FkPointEstimate est = pointwise_fk(noise, t, points[p], u0, theta, n_paths,
                                           derive_seed(seed, {point_key}), path_steps, 1);
        out[p] = {points[p], est.log_value, est.rel_se, est.exit_fraction};
    });
    return out;
}

std::vector<MaxProfilePoint> spatial_max_profile(const NoiseRealization& noise, double t,
                                                 double theta, const InitialMeasure& u0,
                                                 const std::vector<double>& radii,
                                                 double grid_density, std::size_t n_paths,
                                                 std::uint64_t seed, std::size_t path_steps,
                                                 unsigned workers, double inner_fraction) {
    if (radii.empty()) throw DomainError("spatial_max_profile: empty radius list");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]))
            throw DomainError("spatial_max_profile: radii must increase");
    if (!(grid_density > 0.0)) throw DomainError("spatial_max_profile: density must be positive");
    if (!(inner_fraction >= 0.0 && inner_fraction < 1.0))
        throw DomainError("spatial_max_profile: inner fraction must lie in [0,1)");
    const std::size_t d = noise.grid.dim();
    if (d > 2) throw DomainError("spatial_max_profile: lattice scan supports d <= 2");

    const double r_max = radii.back();
    const double h = 1.0 / grid_density;
    std::vector<std::vector<double>> points;
    if (d == 1) {
        points.push_back({0.0});
        for (double v = h; v <= r_max + 1e-12; v += h) {
            points.push_back({v});
            points.push_back({-v});
        }
    } else {
        for (double a = -r_max; a <= r_max + 1e-12; a += h)
            for (double b = -r_max; b <= r_max + 1e-12; b += h)
                if (a * a + b * b <= r_max * r_max * (1.0 + 1e-12)) points.push_back({a, b});
    }

    std::vector<LatticeEstimate> est = fk_lattice(noise, t, points, u0, theta, n_paths, seed,
                                                  path_steps, workers);
    std::vector<MaxProfilePoint> out;
    out.reserve(radii.size());
    for (double R : radii) {
        MaxProfilePoint mp;
        mp.radius = R;
        mp.log_max = -std::numeric_limits<double>::infinity();
        for (const auto& e : est) {
            double sq = 0.0;
            for (double c : e.x) sq += c * c;
            double r = std::sqrt(sq);
            if (r <= R * (1.0 + 1e-12) && r >= inner_fraction * R * (1.0 - 1e-12)) {
                if (e.log_value > mp.log_max) {
                    mp.log_max = e.log_value;
                    mp.argmax = e.x;
                }
            }
        }
        out.push_back(std::move(mp));
    }
    return out;
}

}  // namespace fkpam
