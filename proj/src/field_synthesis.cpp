#include "fkpam/field_synthesis.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "fkpam/errors.hpp"
#include "fkpam/parallel.hpp"
#include "fkpam/quadrature.hpp"
#include "fkpam/rng.hpp"
#include "fkpam/special.hpp"

namespace fkpam {

SpaceTimeGrid::SpaceTimeGrid(double t_in, std::size_t time_count_in, std::vector<double> lo_in,
                             std::vector<double> hi_in, std::vector<std::size_t> space_counts_in)
    : t(t_in), time_count(time_count_in), lo(std::move(lo_in)), hi(std::move(hi_in)),
      space_counts(std::move(space_counts_in)) {
    if (!(t > 0.0)) throw DomainError("SpaceTimeGrid: horizon must be positive");
    if (time_count < 2) throw DomainError("SpaceTimeGrid: need at least two time nodes");
    if (lo.empty() || lo.size() != hi.size() || lo.size() != space_counts.size())
        throw DomainError("SpaceTimeGrid: box specification mismatch");
    for (std::size_t j = 0; j < lo.size(); ++j) {
        if (!(hi[j] > lo[j])) throw DomainError("SpaceTimeGrid: empty box");
        if (space_counts[j] < 2) throw DomainError("SpaceTimeGrid: need >= 2 nodes per axis");
    }
}

std::size_t SpaceTimeGrid::space_nodes() const {
    std::size_t n = 1;
    for (std::size_t c : space_counts) n *= c;
    return n;
}

FrequencyGrid::FrequencyGrid(double eta_cutoff_in, std::size_t eta_count_in,
                             std::vector<double> xi_cutoff_in, std::vector<std::size_t> xi_count_in)
    : eta_cutoff(eta_cutoff_in), eta_count(eta_count_in), xi_cutoff(std::move(xi_cutoff_in)),
      xi_count(std::move(xi_count_in)) {
    if (!(eta_cutoff > 0.0)) throw DomainError("FrequencyGrid: eta cutoff must be positive");
    if (eta_count < 2) throw DomainError("FrequencyGrid: eta count must be >= 2");
    if (eta_count % 2 == 1) ++eta_count;
    if (xi_cutoff.empty() || xi_cutoff.size() != xi_count.size())
        throw DomainError("FrequencyGrid: xi specification mismatch");
    for (std::size_t j = 0; j < xi_cutoff.size(); ++j) {
        if (!(xi_cutoff[j] > 0.0)) throw DomainError("FrequencyGrid: xi cutoff must be positive");
        if (xi_count[j] < 2) throw DomainError("FrequencyGrid: xi count must be >= 2");
        if (xi_count[j] % 2 == 1) ++xi_count[j];
    }
}

namespace {

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

// Per-cell integral of density(xi) * attenuation(xi): 4-point Gauss nodes on
// regular cells; cells touching zero are subdivided log-uniformly with exact
// power masses (the attenuation is flat there), so integrable singularities
// carry their true mass and the captured fraction stays below one.
double attenuated_cell_mass(double power, double lo, double hi,
                            const std::function<double(double)>& attenuation) {
    if (lo >= 0.0 && lo < 1e-12 * (hi - lo)) lo = 0.0;
    if (hi <= 0.0 && -hi < 1e-12 * (hi - lo)) hi = 0.0;
    if (lo == 0.0 || hi == 0.0) {
        double edge = std::max(std::abs(lo), std::abs(hi));
        double core = edge * 1e-10;
        double acc = power_cell_mass(power, 0.0, core) * attenuation(0.0);
        const int sub = 32;
        for (int s = 0; s < sub; ++s) {
            double c_lo = core * std::pow(edge / core, static_cast<double>(s) / sub);
            double c_hi = core * std::pow(edge / core, static_cast<double>(s + 1) / sub);
            // evaluating the even attenuation at the power-weighted rms point
            // integrates its quadratic term exactly over the subcell
            double rms = std::sqrt(power_cell_mass(power + 2.0, c_lo, c_hi) /
                                   power_cell_mass(power, c_lo, c_hi));
            acc += power_cell_mass(power, c_lo, c_hi) * attenuation(rms);
        }
        return acc;
    }
    static const double gl_nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                       0.3399810435848563, 0.8611363115940526};
    static const double gl_weights[4] = {0.3478548451374538, 0.6521451548625461,
                                         0.6521451548625461, 0.3478548451374538};
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        double xi = mid + half * gl_nodes[k];
        acc += gl_weights[k] * half * std::pow(std::abs(xi), power - 1.0) * attenuation(xi);
    }
    return acc;
}

struct AxisCells {
    std::vector<double> mid;
    std::vector<double> mass;
};

AxisCells spatial_axis_cells(double a, double cutoff, std::size_t count, double eps) {
    AxisCells out;
    out.mid.reserve(count);
    out.mass.reserve(count);
    const double width = 2.0 * cutoff / static_cast<double>(count);
    auto attenuation = [eps](double xi) { return std::exp(-eps * xi * xi); };
    for (std::size_t c = 0; c < count; ++c) {
        double lo = -cutoff + width * static_cast<double>(c);
        double hi = lo + width;
        out.mid.push_back(0.5 * (lo + hi));
        out.mass.push_back(attenuated_cell_mass(a, lo, hi, attenuation));
    }
    return out;
}

// Temporal cells: a point atom at eta = 0 for the constant part plus Riesz
// density cells under the exact sinc^2 transform of the box mollifier.
struct TimeCells {
    std::vector<double> eta;
    std::vector<double> mass;
};

TimeCells temporal_cells(const TimeKernel& kernel, double cutoff, std::size_t count, double delta) {
    TimeCells out;
    double atom = kernel.constant_mass();
    if (atom > 0.0) {
        out.eta.push_back(0.0);
        out.mass.push_back(atom);
    }
    if (kernel.has_riesz()) {
        const double width = 2.0 * cutoff / static_cast<double>(count);
        auto attenuation = [delta](double eta) {
            double s = sinc(0.5 * eta * delta);
            return s * s;
        };
        for (std::size_t c = 0; c < count; ++c) {
            double lo = -cutoff + width * static_cast<double>(c);
            double hi = lo + width;
            out.eta.push_back(0.5 * (lo + hi));
            double mass = 0.0;
            for (const auto& part : kernel.parts())
                if (part.riesz)
                    mass += part.c * riesz_spectral_norm(part.alpha0) *
                            attenuated_cell_mass(part.alpha0, lo, hi, attenuation);
            out.mass.push_back(mass);
        }
    }
    return out;
}

double gamma_eps_at_zero(const SpaceSpectralDensity& q, double eps) {
    double v = q.cq;
    for (double a : q.alphas) v *= std::tgamma(0.5 * a) * std::pow(eps, -0.5 * a);
    return v;
}

}  // namespace

double captured_mass_fraction(const PairedCovariance& cov, double epsilon, double delta,
                              const FrequencyGrid& freq) {
    TimeCells tc = temporal_cells(cov.time, freq.eta_cutoff, freq.eta_count, delta);
    double time_mass = 0.0;
    for (double m : tc.mass) time_mass += m;
    double space_mass = cov.space.cq;
    for (std::size_t j = 0; j < cov.space.dim(); ++j) {
        AxisCells ax = spatial_axis_cells(cov.space.alphas[j], freq.xi_cutoff[j], freq.xi_count[j],
                                          epsilon);
        double s = 0.0;
        for (double m : ax.mass) s += m;
        space_mass *= s;
    }
    double total = cov.time.smoothed(delta, 0.0) * gamma_eps_at_zero(cov.space, epsilon);
    return time_mass * space_mass / total;
}

FrequencyGrid FrequencyGrid::suggest(const PairedCovariance& cov, double epsilon, double delta,
                                     const SpaceTimeGrid& grid, double target_fraction,
                                     std::size_t max_cells_per_axis) {
    const std::size_t d = cov.space.dim();
    if (grid.dim() != d) throw DomainError("FrequencyGrid::suggest: dimension mismatch");
    // Per-factor target so the product reaches target_fraction.
    double per_factor = std::pow(target_fraction, 1.0 / static_cast<double>(d + 1));

    std::vector<double> xi_cut(d);
    std::vector<std::size_t> xi_cnt(d);
    for (std::size_t j = 0; j < d; ++j) {
        double a = cov.space.alphas[j];
        double full = std::tgamma(0.5 * a) * std::pow(epsilon, -0.5 * a);
        double cut = 2.0 / std::sqrt(epsilon);
        for (int it = 0; it < 40; ++it) {
            double got = 2.0 * integrate(
                                 [&](double xi) {
                                     return std::pow(xi, a - 1.0) * std::exp(-epsilon * xi * xi);
                                 },
                                 1e-12 * cut, cut, 1e-9, 0.0);
            if (got / full >= per_factor) break;
            cut *= 1.5;
        }
        // Nyquist bound against the sampling grid.
        double nyquist = std::numbers::pi / grid.dx(j);
        cut = std::min(cut, nyquist);
        double box_span = grid.hi[j] - grid.lo[j];
        std::size_t count = static_cast<std::size_t>(std::ceil(2.0 * cut * box_span / 0.5));
        count = std::min(std::max<std::size_t>(count, 128), max_cells_per_axis);
        if (count % 2 == 1) ++count;
        xi_cut[j] = cut;
        xi_cnt[j] = count;
    }

    double eta_cut = 1.0;
    std::size_t eta_cnt = 2;
    if (cov.time.has_riesz()) {
        double full = cov.time.smoothed(delta, 0.0) - cov.time.constant_mass();
        eta_cut = 2.0 / delta;
        for (int it = 0; it < 60; ++it) {
            double got = 2.0 * integrate(
                                 [&](double eta) {
                                     double s = sinc(0.5 * eta * delta);
                                     return cov.time.riesz_spectral_density(eta) * s * s;
                                 },
                                 1e-12 * eta_cut, eta_cut, 1e-9, 0.0);
            if (got / full >= per_factor) break;
            eta_cut *= 1.5;
        }
        eta_cut = std::min(eta_cut, std::numbers::pi / grid.dt());
        eta_cnt = static_cast<std::size_t>(std::ceil(2.0 * eta_cut * grid.t / 0.5));
        eta_cnt = std::min(std::max<std::size_t>(eta_cnt, 64), max_cells_per_axis);
        if (eta_cnt % 2 == 1) ++eta_cnt;
    }
    return FrequencyGrid(eta_cut, eta_cnt, std::move(xi_cut), std::move(xi_cnt));
}

double truncated_covariance(const PairedCovariance& cov, double epsilon, double delta,
                            const FrequencyGrid& freq, double time_lag,
                            const std::vector<double>& space_lag) {
    const std::size_t d = cov.space.dim();
    if (space_lag.size() != d) throw DomainError("truncated_covariance: lag dimension mismatch");
    TimeCells tc = temporal_cells(cov.time, freq.eta_cutoff, freq.eta_count, delta);
    double time_part = 0.0;
    for (std::size_t k = 0; k < tc.eta.size(); ++k)
        time_part += tc.mass[k] * std::cos(tc.eta[k] * time_lag);
    double space_part = cov.space.cq;
    for (std::size_t j = 0; j < d; ++j) {
        AxisCells ax = spatial_axis_cells(cov.space.alphas[j], freq.xi_cutoff[j], freq.xi_count[j],
                                          epsilon);
        double s = 0.0;
        for (std::size_t k = 0; k < ax.mid.size(); ++k)
            s += ax.mass[k] * std::cos(ax.mid[k] * space_lag[j]);
        space_part *= s;
    }
    return time_part * space_part;
}

NoiseRealization synthesize_noise(std::uint64_t seed, const PairedCovariance& cov, double epsilon,
                                  double delta, const SpaceTimeGrid& grid,
                                  const FrequencyGrid& freq, unsigned workers) {
    const std::size_t d = cov.space.dim();
    if (grid.dim() != d || freq.xi_cutoff.size() != d)
        throw DomainError("synthesize_noise: dimension mismatch");
    if (!(epsilon > 0.0 && delta > 0.0))
        throw DomainError("synthesize_noise: mollification scales must be positive");
    for (std::size_t j = 0; j < d; ++j)
        if (freq.xi_cutoff[j] * grid.dx(j) > std::numbers::pi * (1.0 + 1e-12))
            throw DomainError("synthesize_noise: Nyquist violation on a spatial axis");
    if (cov.time.has_riesz() && freq.eta_cutoff * grid.dt() > std::numbers::pi * (1.0 + 1e-12))
        throw DomainError("synthesize_noise: Nyquist violation on the time axis");

    TimeCells tc = temporal_cells(cov.time, freq.eta_cutoff, freq.eta_count, delta);
    std::vector<AxisCells> axes;
    axes.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
        axes.push_back(spatial_axis_cells(cov.space.alphas[j], freq.xi_cutoff[j], freq.xi_count[j],
                                          epsilon));

    // Flattened spatial cell enumeration (row-major over axes).
    std::size_t n_xi = 1;
    for (const auto& ax : axes) n_xi *= ax.mid.size();
    const std::size_t n_eta = tc.eta.size();

    // Gaussian coefficients drawn mode-by-mode in a fixed order.
    std::vector<std::complex<double>> coeff(n_eta * n_xi);
    {
        RngStream rng(derive_seed(seed, {0x6e6f697365ULL}));  // "noise" tag
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t kx = 0; kx < n_xi; ++kx) {
            double space_mass = cov.space.cq;
            std::size_t rem = kx;
            for (std::size_t j = d; j-- > 0;) {
                idx[j] = rem % axes[j].mid.size();
                rem /= axes[j].mid.size();
            }
            for (std::size_t j = 0; j < d; ++j) space_mass *= axes[j].mass[idx[j]];
            for (std::size_t ke = 0; ke < n_eta; ++ke) {
                double w = tc.mass[ke] * space_mass;
                double amp = std::sqrt(std::max(0.0, w));
                double re = rng.next_normal();
                double im = rng.next_normal();
                coeff[ke * n_xi + kx] = std::complex<double>(amp * re, amp * im);
            }
        }
    }

    NoiseRealization out(grid);
    out.epsilon = epsilon;
    out.delta = delta;
    out.seed = seed;
    out.captured_fraction = captured_mass_fraction(cov, epsilon, delta, freq);
    const std::size_t n_space = grid.space_nodes();
    out.values.assign(grid.time_count * n_space, 0.0);

    // Stage 1: collapse the eta sum per (time node, xi cell).
    std::vector<std::complex<double>> stage1(grid.time_count * n_xi);
    parallel_for(grid.time_count, workers, [&](std::size_t it) {
        double s = grid.dt() * static_cast<double>(it);
        for (std::size_t kx = 0; kx < n_xi; ++kx) {
            std::complex<double> acc(0.0, 0.0);
            for (std::size_t ke = 0; ke < n_eta; ++ke) {
                double phase = tc.eta[ke] * s;
                acc += coeff[ke * n_xi + kx] * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            stage1[it * n_xi + kx] = acc;
        }
    });

    // Precompute per-axis node phasors for every xi cell.
    std::vector<std::vector<std::complex<double>>> phasors(d);
    for (std::size_t j = 0; j < d; ++j) {
        const auto& ax = axes[j];
        phasors[j].resize(ax.mid.size() * grid.space_counts[j]);
        for (std::size_t k = 0; k < ax.mid.size(); ++k) {
            std::complex<double> step(std::cos(ax.mid[k] * grid.dx(j)),
                                      std::sin(ax.mid[k] * grid.dx(j)));
            std::complex<double> cur(std::cos(ax.mid[k] * grid.lo[j]),
                                     std::sin(ax.mid[k] * grid.lo[j]));
            for (std::size_t m = 0; m < grid.space_counts[j]; ++m) {
                phasors[j][k * grid.space_counts[j] + m] = cur;
                cur *= step;
            }
        }
    }

    // Stage 2: field(s, x) = Re sum_kx stage1(s, kx) prod_j phasor_j.
    parallel_for(grid.time_count, workers, [&](std::size_t it) {
        double* slice = out.values.data() + it * n_space;
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t kx = 0; kx < n_xi; ++kx) {
            std::size_t rem = kx;
            for (std::size_t j = d; j-- > 0;) {
                idx[j] = rem % axes[j].mid.size();
                rem /= axes[j].mid.size();
            }
            const std::complex<double> amp = stage1[it * n_xi + kx];
            if (amp == std::complex<double>(0.0, 0.0)) continue;
            if (d == 1) {
                const std::complex<double>* px = phasors[0].data() + idx[0] * grid.space_counts[0];
                for (std::size_t m = 0; m < n_space; ++m) {
                    const std::complex<double>& p = px[m];
                    slice[m] += amp.real() * p.real() - amp.imag() * p.imag();
                }
            } else {
                // generic multi-axis product, row-major space enumeration
                std::vector<std::size_t> sidx(d, 0);
                for (std::size_t m = 0; m < n_space; ++m) {
                    std::complex<double> p(1.0, 0.0);
                    std::size_t srem = m;
                    for (std::size_t j = d; j-- > 0;) {
                        sidx[j] = srem % grid.space_counts[j];
                        srem /= grid.space_counts[j];
                    }
                    for (std::size_t j = 0; j < d; ++j)
                        p *= phasors[j][idx[j] * grid.space_counts[j] + sidx[j]];
                    slice[m] += amp.real() * p.real() - amp.imag() * p.imag();
                }
            }
        }
    });

    return out;
}

double NoiseRealization::evaluate(double s, const double* x, std::size_t d) const {
    if (d != grid.dim()) throw DomainError("evaluate_noise: dimension mismatch");
    const double tol = 1e-9;
    if (s < -tol * grid.t || s > grid.t * (1.0 + tol))
        throw OutOfRange("evaluate_noise: time outside [0, t]");
    double ts = std::min(std::max(s / grid.dt(), 0.0), static_cast<double>(grid.time_count - 1));
    std::size_t i0 = static_cast<std::size_t>(ts);
    if (i0 >= grid.time_count - 1) i0 = grid.time_count - 2;
    double fw_t = ts - static_cast<double>(i0);

    std::vector<std::size_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t j = 0; j < d; ++j) {
        double span = grid.hi[j] - grid.lo[j];
        if (x[j] < grid.lo[j] - tol * span || x[j] > grid.hi[j] + tol * span)
            throw OutOfRange("evaluate_noise: point outside the grid box");
        double u = std::min(std::max((x[j] - grid.lo[j]) / grid.dx(j), 0.0),
                            static_cast<double>(grid.space_counts[j] - 1));
        std::size_t b = static_cast<std::size_t>(u);
        if (b >= grid.space_counts[j] - 1) b = grid.space_counts[j] - 2;
        base[j] = b;
        frac[j] = u - static_cast<double>(b);
    }

    // multilinear over the 2^(d+1) cell corners
    double acc = 0.0;
    const std::size_t corners = static_cast<std::size_t>(1) << (d + 1);
    for (std::size_t mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        std::size_t ti = i0;
        if (mask & 1u) {
            ti += 1;
            w *= fw_t;
        } else {
            w *= 1.0 - fw_t;
        }
        std::size_t flat = 0;
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t bj = base[j];
            if (mask & (static_cast<std::size_t>(1) << (j + 1))) {
                bj += 1;
                w *= frac[j];
            } else {
                w *= 1.0 - frac[j];
            }
            flat = flat * grid.space_counts[j] + bj;
        }
        acc += w * value_at(ti, flat);
    }
    return acc;
}

std::pair<double, double> empirical_covariance(const std::vector<NoiseRealization>& realizations,
                                               double time_lag,
                                               const std::vector<double>& space_lag) {
    if (realizations.size() < 2)
        throw DomainError("empirical_covariance: need at least two realizations");
    const auto& grid = realizations.front().grid;
    for (const auto& r : realizations)
        if (!(r.grid == grid)) throw GridMismatch("empirical_covariance: grids differ");
    const std::size_t d = grid.dim();
    if (space_lag.size() != d) throw DomainError("empirical_covariance: lag dimension mismatch");

    auto snap = [](double lag, double step, std::size_t count, const char* what) {
        double u = lag / step;
        double r = std::round(u);
        if (std::abs(u - r) > 1e-6)
            throw DomainError(std::string("empirical_covariance: lag not node-aligned on ") + what);
        auto offset = static_cast<long long>(r);
        if (offset < 0 || offset >= static_cast<long long>(count))
            throw DomainError(std::string("empirical_covariance: lag beyond box on ") + what);
        return static_cast<std::size_t>(offset);
    };
    std::size_t dt_steps = snap(time_lag, grid.dt(), grid.time_count, "time");
    std::vector<std::size_t> dx_steps(d);
    for (std::size_t j = 0; j < d; ++j)
        dx_steps[j] = snap(space_lag[j], grid.dx(j), grid.space_counts[j], "space");

    // Per-realization average over all translated node pairs, then scatter
    // across realizations.
    std::vector<double> per_real;
    per_real.reserve(realizations.size());
    for (const auto& r : realizations) {
        double acc = 0.0;
        std::size_t pairs = 0;
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t it = 0; it + dt_steps < grid.time_count; ++it) {
            // enumerate base spatial nodes with room for the lag
            std::size_t n_space = grid.space_nodes();
            for (std::size_t m = 0; m < n_space; ++m) {
                std::size_t rem = m;
                bool ok = true;
                std::size_t shifted = 0;
                for (std::size_t j = d; j-- > 0;) {
                    idx[j] = rem % grid.space_counts[j];
                    rem /= grid.space_counts[j];
                }
                for (std::size_t j = 0; j < d; ++j) {
                    std::size_t sj = idx[j] + dx_steps[j];
                    if (sj >= grid.space_counts[j]) {
                        ok = false;
                        break;
                    }
                    shifted = shifted * grid.space_counts[j] + sj;
                }
                if (!ok) continue;
                acc += r.value_at(it, m) * r.value_at(it + dt_steps, shifted);
                ++pairs;
            }
        }
        if (pairs == 0) throw DomainError("empirical_covariance: no admissible node pairs");
        per_real.push_back(acc / static_cast<double>(pairs));
    }
    double mean = 0.0;
    for (double v : per_real) mean += v;
    mean /= static_cast<double>(per_real.size());
    double var = 0.0;
    for (double v : per_real) var += (v - mean) * (v - mean);
    var /= static_cast<double>(per_real.size() - 1);
    double se = std::sqrt(var / static_cast<double>(per_real.size()));
    return {mean, se};
}

}  // namespace fkpam
