#include "fkpam/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fkpam/errors.hpp"
#include "fkpam/quadrature.hpp"

namespace fkpam {

ProfileGrid::ProfileGrid(std::size_t dim_in, std::size_t slices_in, std::size_t points_in,
                         double extent_in)
    : dim(dim_in), slices(slices_in), points(points_in), extent(extent_in) {
    if (dim < 1 || dim > 2) throw DomainError("ProfileGrid: dim must be 1 or 2");
    if (slices < 2) throw DomainError("ProfileGrid: need at least two time slices");
    if (points < 8) throw DomainError("ProfileGrid: need at least eight points per axis");
    if (!(extent > 0.0)) throw DomainError("ProfileGrid: extent must be positive");
    values.assign(slices * nodes_per_slice(), 0.0);
}

std::size_t ProfileGrid::nodes_per_slice() const {
    std::size_t n = 1;
    for (std::size_t j = 0; j < dim; ++j) n *= points;
    return n;
}

void ProfileGrid::project() {
    const std::size_t m = nodes_per_slice();
    const double cell = std::pow(spacing(), static_cast<double>(dim));
    for (std::size_t i = 0; i < slices; ++i) {
        double* s = slice(i);
        double mass = 0.0;
        for (std::size_t j = 0; j < m; ++j) mass += s[j] * s[j];
        mass *= cell;
        if (!(mass > 0.0)) throw DomainError("ProfileGrid: cannot normalize a zero slice");
        double scale = 1.0 / std::sqrt(mass);
        for (std::size_t j = 0; j < m; ++j) s[j] *= scale;
    }
}

double ProfileGrid::normalization_error() const {
    const std::size_t m = nodes_per_slice();
    const double cell = std::pow(spacing(), static_cast<double>(dim));
    double worst = 0.0;
    for (std::size_t i = 0; i < slices; ++i) {
        const double* s = slice(i);
        double mass = 0.0;
        for (std::size_t j = 0; j < m; ++j) mass += s[j] * s[j];
        worst = std::max(worst, std::abs(mass * cell - 1.0));
    }
    return worst;
}

namespace {

// K_a(D) = \int_{|xi| <= cutoff} |xi|^{a-1} cos(xi D) dxi for each grid lag
// D = m h. Cells carry 4-point Gauss nodes; the symmetric pair touching zero
// is subdivided log-uniformly with exact power masses so integrable
// singularities (a < 1) cost no accuracy. The cell count is kept even, which
// puts an edge exactly at xi = 0.
std::vector<double> toeplitz_factor(double a, double cutoff, std::size_t cells, double h,
                                    std::size_t lags) {
    std::vector<double> gl_nodes, gl_weights;
    gauss_legendre(4, gl_nodes, gl_weights);
    std::vector<double> out(lags, 0.0);

    const double width = 2.0 * cutoff / static_cast<double>(cells);
    const int sub = 64;
    for (std::size_t m = 0; m < lags; ++m) {
        double lag = static_cast<double>(m) * h;
        double acc = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            double lo = -cutoff + width * static_cast<double>(c);
            double hi = lo + width;
            if (lo >= -width * 1e-9 && lo <= width * 1e-9) continue;   // [0, width]
            if (hi >= -width * 1e-9 && hi <= width * 1e-9) continue;   // [-width, 0]
            double mid = 0.5 * (lo + hi);
            double half = 0.5 * (hi - lo);
            for (int k = 0; k < 4; ++k) {
                double xi = mid + half * gl_nodes[k];
                acc += gl_weights[k] * half * std::pow(std::abs(xi), a - 1.0) * std::cos(xi * lag);
            }
        }
        // Central pair, even integrand: 2 \int_0^width with exact subcell
        // masses and midpoint cosines.
        double core = width * 1e-10;
        double central = power_cell_mass(a, 0.0, core);
        for (int s = 0; s < sub; ++s) {
            double c_lo = core * std::pow(width / core, static_cast<double>(s) / sub);
            double c_hi = core * std::pow(width / core, static_cast<double>(s + 1) / sub);
            central += power_cell_mass(a, c_lo, c_hi) * std::cos(0.5 * (c_lo + c_hi) * lag);
        }
        out[m] = acc + 2.0 * central;
    }
    return out;
}

}  // namespace

VariationalProblem::VariationalProblem(double t, double theta, const PairedCovariance& cov,
                                       std::size_t dim, std::size_t slices, std::size_t points,
                                       double extent, double xi_cutoff,
                                       std::size_t xi_cells_per_axis)
    : t_(t), theta_(theta), dim_(dim), slices_(slices), points_(points), extent_(extent),
      cq_(cov.space.cq) {
    if (!(t > 0.0)) throw DomainError("VariationalProblem: t must be positive");
    if (cov.space.dim() != dim) throw DomainError("VariationalProblem: dimension mismatch");
    if (dim < 1 || dim > 2) throw DomainError("VariationalProblem: dim must be 1 or 2");

    ProfileGrid shape(dim, slices, points, extent);
    const double h = shape.spacing();
    const double nyquist = std::numbers::pi / h;
    const double cutoff = std::min(nyquist, xi_cutoff > 0.0 ? xi_cutoff : 128.0);
    xi_cutoff_ = cutoff;
    std::size_t cells = xi_cells_per_axis == 0 ? 4 * points : xi_cells_per_axis;
    if (cells % 2 == 1) ++cells;

    toeplitz_.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j)
        toeplitz_.push_back(toeplitz_factor(cov.space.alphas[j], cutoff, cells, h, points));

    // trapezoid weights on [0,1]
    time_weights_.assign(slices, 1.0 / static_cast<double>(slices - 1));
    time_weights_.front() *= 0.5;
    time_weights_.back() *= 0.5;

    // gamma_0((s_i - s_r) t); the singular diagonal is replaced by the
    // box-mollified value at scale delta = t / S.
    time_kernel_matrix_.assign(slices * slices, 0.0);
    const double delta = t / static_cast<double>(slices);
    for (std::size_t i = 0; i < slices; ++i) {
        for (std::size_t r = 0; r < slices; ++r) {
            double lag = (static_cast<double>(i) - static_cast<double>(r)) /
                         static_cast<double>(slices - 1) * t;
            time_kernel_matrix_[i * slices + r] =
                i == r && cov.time.has_riesz() ? cov.time.smoothed(delta, 0.0) : cov.time.eval(lag);
        }
    }
}

void VariationalProblem::apply_space_kernel(const double* u, double* out) const {
    const std::size_t n = points_;
    if (dim_ == 1) {
        const auto& K = toeplitz_[0];
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += K[j > k ? j - k : k - j] * u[k];
            out[j] = acc;
        }
        return;
    }
    // d = 2: separable application K = K0 (x) K1.
    const auto& K0 = toeplitz_[0];
    const auto& K1 = toeplitz_[1];
    std::vector<double> tmp(n * n, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += K1[j > k ? j - k : k - j] * u[row * n + k];
            tmp[row * n + j] = acc;
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += K0[i > k ? i - k : k - i] * tmp[k * n + col];
            out[i * n + col] = acc;
        }
    }
}

void VariationalProblem::interaction_fields(const ProfileGrid& g, std::vector<double>& fields) const {
    // fields[i] = sum_r w_i w_r gamma0((s_i - s_r) t) (K * g^2(r, .)), scaled
    // by the spectral normalization cq.
    const std::size_t m = g.nodes_per_slice();
    std::vector<double> u(slices_ * m);
    for (std::size_t i = 0; i < slices_; ++i) {
        const double* s = g.slice(i);
        for (std::size_t j = 0; j < m; ++j) u[i * m + j] = s[j] * s[j];
    }
    std::vector<double> conv(slices_ * m);
    for (std::size_t i = 0; i < slices_; ++i)
        apply_space_kernel(u.data() + i * m, conv.data() + i * m);

    fields.assign(slices_ * m, 0.0);
    for (std::size_t i = 0; i < slices_; ++i) {
        for (std::size_t r = 0; r < slices_; ++r) {
            double w = time_weights_[i] * time_weights_[r] * time_kernel_matrix_[i * slices_ + r];
            if (w == 0.0) continue;
            const double* src = conv.data() + r * m;
            double* dst = fields.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += w * src[j];
        }
    }
    for (double& v : fields) v *= cq_;
}

double VariationalProblem::objective(const ProfileGrid& g) const {
    if (g.normalization_error() > 1e-8)
        throw DomainError("objective: slice normalization violated");
    return objective_raw(g);
}

double VariationalProblem::objective_raw(const ProfileGrid& g) const {
    if (g.dim != dim_ || g.slices != slices_ || g.points != points_ || g.extent != extent_)
        throw GridMismatch("objective: profile grid mismatch");

    const std::size_t m = g.nodes_per_slice();
    const double h = g.spacing();
    const double cell = std::pow(h, static_cast<double>(dim_));

    std::vector<double> fields;
    interaction_fields(g, fields);
    double interaction = 0.0;
    for (std::size_t i = 0; i < slices_; ++i) {
        const double* s = g.slice(i);
        const double* f = fields.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) interaction += s[j] * s[j] * f[j];
    }
    interaction *= cell * cell;  // two Riemann sums

    // Dirichlet energy, centered differences with zero extension.
    double dirichlet = 0.0;
    const std::size_t n = points_;
    for (std::size_t i = 0; i < slices_; ++i) {
        const double* s = g.slice(i);
        double slice_sum = 0.0;
        if (dim_ == 1) {
            for (std::size_t j = 0; j < n; ++j) {
                double right = j + 1 < n ? s[j + 1] : 0.0;
                double left = j >= 1 ? s[j - 1] : 0.0;
                double dg = (right - left) / (2.0 * h);
                slice_sum += dg * dg;
            }
        } else {
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    double right = a + 1 < n ? s[(a + 1) * n + b] : 0.0;
                    double left = a >= 1 ? s[(a - 1) * n + b] : 0.0;
                    double up = b + 1 < n ? s[a * n + b + 1] : 0.0;
                    double down = b >= 1 ? s[a * n + b - 1] : 0.0;
                    double dga = (right - left) / (2.0 * h);
                    double dgb = (up - down) / (2.0 * h);
                    slice_sum += dga * dga + dgb * dgb;
                }
            }
        }
        dirichlet += time_weights_[i] * slice_sum * cell;
    }

    return theta_ * interaction - 0.5 * dirichlet;
}

void VariationalProblem::gradient(const ProfileGrid& g, std::vector<double>& grad) const {
    const std::size_t m = g.nodes_per_slice();
    const double h = g.spacing();
    const double cell = std::pow(h, static_cast<double>(dim_));
    grad.assign(slices_ * m, 0.0);

    std::vector<double> fields;
    interaction_fields(g, fields);
    for (std::size_t i = 0; i < slices_; ++i) {
        const double* s = g.slice(i);
        const double* f = fields.data() + i * m;
        double* gr = grad.data() + i * m;
        for (std::size_t j = 0; j < m; ++j)
            gr[j] += theta_ * 4.0 * cell * cell * s[j] * f[j];
    }

    // Centered differences see g_m through dg_{m-1} and dg_{m+1}; at the two
    // outermost nodes only one of those difference stencils exists.
    const std::size_t n = points_;
    auto axis_term = [n](const double* s, std::size_t j, std::size_t stride) {
        double acc = 0.0;
        if (j >= 1) acc += s[j * stride] - (j >= 2 ? s[(j - 2) * stride] : 0.0);
        if (j + 1 < n) acc += s[j * stride] - (j + 2 < n ? s[(j + 2) * stride] : 0.0);
        return acc;
    };
    for (std::size_t i = 0; i < slices_; ++i) {
        const double* s = g.slice(i);
        double* gr = grad.data() + i * m;
        double scale = time_weights_[i] * cell / (4.0 * h * h);
        if (dim_ == 1) {
            for (std::size_t j = 0; j < n; ++j) gr[j] -= scale * axis_term(s, j, 1);
        } else {
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    double acc = axis_term(s + b, a, n) + axis_term(s + a * n, b, 1);
                    gr[a * n + b] -= scale * acc;
                }
            }
        }
    }
}

ProfileGrid VariationalProblem::initial_profile(double* chosen_width) const {
    ProfileGrid g(dim_, slices_, points_, extent_);
    const std::size_t n = points_;
    const double h = g.spacing();

    auto fill_gaussian = [&](ProfileGrid& grid, double sigma) {
        for (std::size_t i = 0; i < slices_; ++i) {
            double* s = grid.slice(i);
            if (dim_ == 1) {
                for (std::size_t j = 0; j < n; ++j) {
                    double x = -extent_ + h * static_cast<double>(j);
                    s[j] = std::exp(-0.5 * x * x / (sigma * sigma));
                }
            } else {
                for (std::size_t a = 0; a < n; ++a) {
                    double x = -extent_ + h * static_cast<double>(a);
                    for (std::size_t b = 0; b < n; ++b) {
                        double y = -extent_ + h * static_cast<double>(b);
                        s[a * n + b] = std::exp(-0.5 * (x * x + y * y) / (sigma * sigma));
                    }
                }
            }
        }
        grid.project();
    };

    // 1-parameter pre-scan over widths.
    double best_sigma = extent_ / 4.0;
    double best_value = -std::numeric_limits<double>::infinity();
    const int scan = 33;
    for (int k = 0; k < scan; ++k) {
        double sigma = 1.5 * h * std::pow(extent_ / (3.0 * 1.5 * h), static_cast<double>(k) / (scan - 1));
        ProfileGrid candidate(dim_, slices_, points_, extent_);
        fill_gaussian(candidate, sigma);
        double value = objective(candidate);
        if (value > best_value) {
            best_value = value;
            best_sigma = sigma;
        }
    }
    fill_gaussian(g, best_sigma);
    if (chosen_width) *chosen_width = best_sigma;
    return g;
}

VariationalResult VariationalProblem::maximize(const ProfileGrid& initial,
                                               const SolverSchedule& schedule) const {
    ProfileGrid g = initial;
    g.project();
    const std::size_t m = g.nodes_per_slice();
    const double cell = std::pow(g.spacing(), static_cast<double>(dim_));

    VariationalResult result{0.0, g, 0.0, 0, {}, 0.0, 0.0};
    double current = objective(g);
    result.trace.push_back(current);

    std::vector<double> grad, tangent(slices_ * m);
    double step = schedule.initial_step;
    std::size_t iter = 0;
    for (; iter < schedule.max_iterations; ++iter) {
        gradient(g, grad);
        // Project onto the tangent of the per-slice spheres.
        for (std::size_t i = 0; i < slices_; ++i) {
            const double* s = g.slice(i);
            const double* gr = grad.data() + i * m;
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += gr[j] * s[j];
            dot *= cell;
            double* tg = tangent.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) tg[j] = gr[j] - dot * s[j];
        }
        double gnorm = 0.0;
        for (double v : tangent) gnorm += v * v;
        gnorm = std::sqrt(gnorm * cell);
        result.gradient_norm = gnorm;
        if (gnorm < schedule.gradient_tolerance) break;

        bool accepted = false;
        for (std::size_t bt = 0; bt < schedule.max_backtracks; ++bt) {
            ProfileGrid trial = g;
            for (std::size_t j = 0; j < trial.values.size(); ++j)
                trial.values[j] += step * tangent[j];
            trial.project();
            double value = objective(trial);
            if (std::isfinite(value) && value > current) {
                g = std::move(trial);
                current = value;
                result.trace.push_back(current);
                step *= 1.3;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no ascent direction at line-search resolution
    }

    result.iterations = iter;
    result.value = current;
    result.profile = g;

    // Drift of the optimum away from the time-independent initialization.
    double drift = 0.0;
    for (std::size_t i = 1; i < slices_; ++i) {
        double dist = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double diff = g.slice(i)[j] - g.slice(0)[j];
            dist += diff * diff;
        }
        drift = std::max(drift, std::sqrt(dist * cell));
    }
    result.time_drift = drift;
    return result;
}

VariationalResult VariationalProblem::solve(const SolverSchedule& schedule) const {
    double width = 0.0;
    ProfileGrid init = initial_profile(&width);
    VariationalResult result = maximize(init, schedule);
    result.best_init_width = width;
    return result;
}

ScalingCheck scaling_check(double t, double theta_a, double theta_b, const PairedCovariance& cov,
                           std::size_t dim, std::size_t slices, std::size_t points, double extent,
                           const SolverSchedule& schedule) {
    if (!(theta_a > 0.0 && theta_b > 0.0)) throw DomainError("scaling_check: thetas must be positive");
    VariationalProblem pa(t, theta_a, cov, dim, slices, points, extent);
    VariationalProblem pb(t, theta_b, cov, dim, slices, points, extent);
    VariationalResult ra = pa.solve(schedule);
    VariationalResult rb = pb.solve(schedule);
    double alpha = cov.space.alpha_total;
    ScalingCheck out{theta_a, theta_b, ra.value, rb.value, 0.0, 0.0};
    out.measured_ratio = ra.value / rb.value;
    out.predicted_ratio = std::pow(theta_a / theta_b, 2.0 / (2.0 - alpha));
    return out;
}

double kappa(double theta, double t, double alpha_total, std::size_t d, double energy) {
    if (!(alpha_total > 0.0 && alpha_total < 2.0)) throw DomainError("kappa: alpha must lie in (0,2)");
    if (!(energy > 0.0)) throw DomainError("kappa: energy must be positive");
    if (!(t > 0.0)) throw DomainError("kappa: t must be positive");
    const double a = alpha_total;
    return std::pow(2.0, -4.0 / (4.0 - a)) * std::pow(std::abs(theta), 4.0 / (4.0 - a)) * t *
           std::pow(energy, (2.0 - a) / (4.0 - a)) *
           std::pow(2.0 - a, -(2.0 - a) / (4.0 - a)) * (4.0 - a) *
           std::pow(static_cast<double>(d), 2.0 / (4.0 - a));
}

LegendreConsistency legendre_consistency(double theta, double t, double alpha_total, double energy) {
    if (!(alpha_total > 0.0 && alpha_total < 2.0))
        throw DomainError("legendre_consistency: alpha must lie in (0,2)");
    if (!(theta > 0.0 && t > 0.0 && energy > 0.0))
        throw DomainError("legendre_consistency: positive parameters required");
    const double a = alpha_total;
    const double rate_coeff = 0.5 * a * std::pow(0.5 * (2.0 - a), (2.0 - a) / a) *
                              std::pow(theta, -4.0 / a) * std::pow(t, -(4.0 - a) / a) *
                              std::pow(energy, -(2.0 - a) / a);
    auto phi = [&](double beta) { return beta - rate_coeff * std::pow(beta, 4.0 / a); };

    // Analytic stationary point fixes the bracket.
    const double p = 4.0 / a;
    double beta_star = std::pow(p * rate_coeff, -1.0 / (p - 1.0));
    double lo = 0.0, hi = 10.0 * beta_star;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo);
    double d2 = lo + gr * (hi - lo);
    double fc = phi(c), fd = phi(d2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * beta_star; ++it) {
        if (fc > fd) {
            hi = d2;
            d2 = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = phi(c);
        } else {
            lo = c;
            c = d2;
            fc = fd;
            d2 = lo + gr * (hi - lo);
            fd = phi(d2);
        }
    }
    double numeric = phi(0.5 * (lo + hi));

    double closed = std::pow(2.0, -6.0 / (4.0 - a)) * (4.0 - a) *
                    std::pow(2.0 - a, -(2.0 - a) / (4.0 - a)) * std::pow(theta, 4.0 / (4.0 - a)) *
                    t * std::pow(energy, (2.0 - a) / (4.0 - a));
    double gap = std::abs(numeric - closed) / std::abs(closed);
    return {numeric, closed, gap};
}

}  // namespace fkpam
