#include "fkpam/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fkpam/quadrature.hpp"
#include "fkpam/special.hpp"

namespace fkpam {

InitialMeasure InitialMeasure::unit_constant(std::size_t dim) {
    InitialMeasure m;
    m.kind_ = Kind::UnitConstant;
    m.dim_ = dim;
    if (dim == 0) throw DomainError("InitialMeasure: dimension must be >= 1");
    return m;
}

InitialMeasure InitialMeasure::atoms(std::vector<Atom> atom_list) {
    InitialMeasure m;
    m.kind_ = Kind::Atoms;
    if (atom_list.empty()) throw DomainError("InitialMeasure: atom list must be nonempty");
    m.dim_ = atom_list.front().y.size();
    for (const Atom& a : atom_list) {
        if (a.y.size() != m.dim_) throw DomainError("InitialMeasure: atom dimension mismatch");
        if (!(a.w > 0.0)) throw DomainError("InitialMeasure: atom weights must be positive");
    }
    m.atoms_ = std::move(atom_list);
    return m;
}

InitialMeasure InitialMeasure::density(std::size_t dim, std::function<double(const double*)> f,
                                       double sup_bound, bool radial) {
    InitialMeasure m;
    m.kind_ = Kind::Density;
    m.dim_ = dim;
    if (dim == 0) throw DomainError("InitialMeasure: dimension must be >= 1");
    if (!f) throw DomainError("InitialMeasure: density callable required");
    if (!(sup_bound > 0.0)) throw DomainError("InitialMeasure: sup bound must be positive");
    m.density_ = std::move(f);
    m.sup_bound_ = sup_bound;
    m.radial_flag_ = radial;
    return m;
}

InitialMeasure InitialMeasure::log_growth(std::size_t dim) {
    InitialMeasure m;
    m.kind_ = Kind::LogGrowth;
    m.dim_ = dim;
    if (dim == 0) throw DomainError("InitialMeasure: dimension must be >= 1");
    return m;
}

double InitialMeasure::density_value(const double* y) const {
    if (kind_ == Kind::LogGrowth) {
        double sq = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) sq += y[j] * y[j];
        return std::sqrt(std::abs(std::log1p(std::sqrt(sq))));
    }
    if (kind_ == Kind::Density) return density_(y);
    throw DomainError("density_value: not a density measure");
}

bool InitialMeasure::radial() const {
    switch (kind_) {
        case Kind::UnitConstant:
        case Kind::LogGrowth:
            return true;
        case Kind::Density:
            return radial_flag_;
        case Kind::Atoms: {
            if (atoms_.size() != 1) return false;
            for (double c : atoms_.front().y)
                if (c != 0.0) return false;
            return true;
        }
    }
    return false;
}

namespace {

double density_convolve(const InitialMeasure& u0, double t, const std::vector<double>& x) {
    const std::size_t d = x.size();
    if (d == 1) {
        // Adaptive quadrature in the kernel variable z = x - y, which stays
        // well scaled even when |x| is astronomically large. A split at
        // z = x absorbs profile cusps at the origin (log-growth has one).
        const double w = 40.0 * std::sqrt(t);
        auto integrand = [&](double z) {
            double y = x[0] - z;
            return heat_kernel(t, &z, 1) * u0.density_value(&y);
        };
        double value;
        if (x[0] > -w && x[0] < w) {
            value = integrate(integrand, -w, x[0], 1e-8, 1e-300) +
                    integrate(integrand, x[0], w, 1e-8, 1e-300);
        } else {
            value = integrate(integrand, -w, w, 1e-8, 1e-300);
        }
        return value;
    }
    // p_t * f(x) = pi^{-d/2} \int f(x + sqrt(2t) u) e^{-|u|^2} du.
    if (d > 3) throw DomainError("heat_convolve: density quadrature supports d <= 3");
    const double scale = std::sqrt(2.0 * t);
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (int order : {16, 32, 64, 128}) {
        std::vector<double> nodes, weights;
        gauss_hermite(order, nodes, weights);
        double sum = 0.0;
        std::vector<double> y(d);
        std::vector<int> idx(d, 0);
        for (;;) {
            double w = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                y[j] = x[j] + scale * nodes[idx[j]];
                w *= weights[idx[j]];
            }
            sum += w * u0.density_value(y.data());
            std::size_t j = 0;
            for (; j < d; ++j) {
                if (++idx[j] < order) break;
                idx[j] = 0;
            }
            if (j == d) break;
        }
        double value = sum * std::pow(std::numbers::pi, -0.5 * static_cast<double>(d));
        if (std::isfinite(previous) && std::abs(value - previous) <= 1e-8 * std::abs(value))
            return value;
        previous = value;
    }
    throw QuadratureError("heat_convolve: Gauss-Hermite refinement did not converge");
}

}  // namespace

double heat_convolve(const InitialMeasure& u0, double t, const std::vector<double>& x) {
    if (!(t > 0.0)) throw DomainError("heat_convolve: t must be positive");
    if (x.size() != u0.dim()) throw DomainError("heat_convolve: dimension mismatch");
    switch (u0.kind()) {
        case InitialMeasure::Kind::UnitConstant:
            return 1.0;
        case InitialMeasure::Kind::Atoms: {
            double sum = 0.0;
            std::vector<double> diff(x.size());
            for (const auto& atom : u0.atom_list()) {
                for (std::size_t j = 0; j < x.size(); ++j) diff[j] = x[j] - atom.y[j];
                sum += atom.w * heat_kernel(t, diff.data(), diff.size());
            }
            return sum;
        }
        case InitialMeasure::Kind::Density:
        case InitialMeasure::Kind::LogGrowth:
            return density_convolve(u0, t, x);
    }
    throw DomainError("heat_convolve: unknown measure kind");
}

double log_heat_convolve(const InitialMeasure& u0, double t, const std::vector<double>& x) {
    if (u0.kind() == InitialMeasure::Kind::UnitConstant) return 0.0;
    if (u0.kind() == InitialMeasure::Kind::Atoms) {
        std::vector<double> logs;
        logs.reserve(u0.atom_list().size());
        std::vector<double> diff(x.size());
        for (const auto& atom : u0.atom_list()) {
            for (std::size_t j = 0; j < x.size(); ++j) diff[j] = x[j] - atom.y[j];
            logs.push_back(std::log(atom.w) + log_heat_kernel(t, diff.data(), diff.size()));
        }
        return log_sum_exp(logs);
    }
    return std::log(heat_convolve(u0, t, x));
}

namespace {

// Direction sets for annulus scans. d = 1 uses the two signs; d = 2 a
// uniform circle; d = 3 a Fibonacci sphere.
std::vector<std::vector<double>> direction_set(std::size_t d, int angular_nodes) {
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
        dirs.push_back({1.0});
        dirs.push_back({-1.0});
    } else if (d == 2) {
        for (int k = 0; k < angular_nodes; ++k) {
            double phi = 2.0 * std::numbers::pi * k / angular_nodes;
            dirs.push_back({std::cos(phi), std::sin(phi)});
        }
    } else if (d == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < 2 * angular_nodes; ++k) {
            double z = 1.0 - 2.0 * (k + 0.5) / (2.0 * angular_nodes);
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = golden * k;
            dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
        }
    } else {
        throw DomainError("annulus scan: supported for d <= 3");
    }
    return dirs;
}

}  // namespace

namespace {

struct LogExtrema {
    double hi;
    double lo;
};

LogExtrema annulus_log_extrema(const InitialMeasure& u0, double t, double r_lo, double r_hi,
                               int radial_nodes, int angular_nodes) {
    if (!(r_hi >= r_lo && r_lo >= 0.0)) throw DomainError("annulus scan: bad radii");
    auto dirs = direction_set(u0.dim(), u0.radial() ? 1 : angular_nodes);
    if (u0.radial()) dirs.resize(1);
    LogExtrema out{-std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
    std::vector<double> x(u0.dim());
    int nr = std::max(radial_nodes, 2);
    for (int i = 0; i < nr; ++i) {
        double r = r_lo + (r_hi - r_lo) * static_cast<double>(i) / (nr - 1);
        for (const auto& dir : dirs) {
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = r * dir[j];
            double v = log_heat_convolve(u0, t, x);
            out.hi = std::max(out.hi, v);
            out.lo = std::min(out.lo, v);
        }
    }
    return out;
}

}  // namespace

double annulus_log_max(const InitialMeasure& u0, double t, double r_lo, double r_hi,
                       int radial_nodes, int angular_nodes) {
    return annulus_log_extrema(u0, t, r_lo, r_hi, radial_nodes, angular_nodes).hi;
}

CaseDiagnostics classify_case(const InitialMeasure& u0, double t, double alpha_total,
                              const std::vector<double>& radii,
                              const ClassifierThresholds& thresholds) {
    if (radii.size() < 4) throw DomainError("classify_case: need at least four radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1] && radii[0] > 1.0))
            throw DomainError("classify_case: radii must be increasing and exceed 1");
    if (!(radii.back() / radii.front() >= 1e3))
        throw DomainError("classify_case: radii must span at least three decades");
    if (!(alpha_total > 0.0 && alpha_total < 2.0))
        throw DomainError("classify_case: alpha_total must lie in (0,2)");

    CaseDiagnostics diag;
    diag.radii = radii;
    const double expo = 2.0 / (4.0 - alpha_total);

    // m_in(R) = max_{|x| <= R} |log p_t*u0|: accumulate annulus extrema of
    // log over the growing ball and take the larger absolute value.
    double running_in = std::abs(log_heat_convolve(u0, t, std::vector<double>(u0.dim(), 0.0)));
    double prev_r = 0.0;
    for (double R : radii) {
        auto ext = annulus_log_extrema(u0, t, prev_r, R, 64, 32);
        running_in = std::max({running_in, std::abs(ext.hi), std::abs(ext.lo)});
        prev_r = R;
        double denom = std::pow(std::log(R), expo);
        diag.in_ratio.push_back(running_in / denom);

        // m_out(R) = max_{|x| >= R} log p_t*u0, truncated at outer_factor R;
        // justified when the convolution decays at the rim (checked below).
        double m_out = annulus_log_max(u0, t, R, R * thresholds.outer_factor);
        diag.out_ratio.push_back(m_out / denom);
    }

    auto last_decade_ok = [&](const std::vector<double>& ratio, double limit, bool below) {
        // "last decade": the trailing points with R >= R_max / 10.
        double r_cut = radii.back() / 10.0;
        std::vector<double> tail;
        for (std::size_t i = 0; i < radii.size(); ++i)
            if (radii[i] >= r_cut) tail.push_back(ratio[i]);
        if (tail.size() < 2) tail.assign(ratio.end() - 2, ratio.end());
        bool decreasing = true;
        for (std::size_t i = 1; i < tail.size(); ++i)
            if (tail[i] > tail[i - 1] + 1e-12) decreasing = false;
        bool level = below ? tail.back() < limit : tail.back() > limit;
        return level && decreasing;
    };

    if (last_decade_ok(diag.in_ratio, thresholds.case1_limit, true)) {
        diag.verdict = CaseVerdict::CaseI;
        diag.note = "in-ratio below threshold and decreasing over the last decade";
    } else if (last_decade_ok(diag.out_ratio, thresholds.case2_limit, true)) {
        diag.verdict = CaseVerdict::CaseII;
        diag.note = "out-ratio diverging negative over the last decade";
    } else {
        diag.verdict = CaseVerdict::Undetermined;
        bool in_diverges = diag.in_ratio.back() > diag.in_ratio.front() && diag.in_ratio.back() > 1.0;
        bool out_grows = diag.out_ratio.back() > 0.0;
        if (in_diverges && out_grows)
            diag.note = "case-A-like: ball log-max ratio diverging positive";
        else if (diag.in_ratio.back() > thresholds.case1_limit)
            diag.note = "case-B-like: ball log-max ratio bounded away from zero";
        else
            diag.note = "no threshold met";
    }
    return diag;
}

double nu_k(const InitialMeasure& u0, double t, double R, double k) {
    if (!(R > 0.0)) throw DomainError("nu_k: R must be positive");
    if (!(k >= 1.0)) throw DomainError("nu_k: k must be >= 1");
    double m = annulus_log_max(u0, t, R, k * R);
    return std::max(0.0, -m);
}

double nu(const InitialMeasure& u0, double t, double R, double outer_factor) {
    if (!(R > 0.0)) throw DomainError("nu: R must be positive");
    if (u0.kind() == InitialMeasure::Kind::Density && !u0.radial())
        throw DomainError("nu: non-radial density needs a radial structure or truncation");
    double extent = 0.0;
    for (const auto& atom : u0.atom_list()) {
        double sq = 0.0;
        for (double c : atom.y) sq += c * c;
        extent = std::max(extent, std::sqrt(sq));
    }
    double r_out = outer_factor * R + extent + 10.0 * std::sqrt(t);
    double m = annulus_log_max(u0, t, R, r_out);
    return std::max(0.0, -m);
}

}  // namespace fkpam
