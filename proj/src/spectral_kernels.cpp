#include "fkpam/spectral_kernels.hpp"

#include <cmath>

#include "fkpam/errors.hpp"
#include "fkpam/special.hpp"

namespace fkpam {

double power_cell_mass(double a, double l, double r) {
    if (!(a > 0.0)) throw DomainError("power_cell_mass: a must be positive");
    auto anti = [a](double v) {
        return (v >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v), a) / a;
    };
    return anti(r) - anti(l);
}

SpaceSpectralDensity::SpaceSpectralDensity(double cq_in, std::vector<double> alphas_in)
    : cq(cq_in), alphas(std::move(alphas_in)) {
    if (!(cq > 0.0)) throw DomainError("SpaceSpectralDensity: C_q must be positive");
    if (alphas.empty()) throw DomainError("SpaceSpectralDensity: need d >= 1");
    if (!(alphas[0] > 1.0)) throw DomainError("SpaceSpectralDensity: alpha_1 must exceed 1");
    alpha_total = 0.0;
    for (double a : alphas) {
        if (!(a > 0.0)) throw DomainError("SpaceSpectralDensity: every alpha_j must be positive");
        alpha_total += a;
    }
    if (!(alpha_total < 2.0))
        throw DomainError("SpaceSpectralDensity: alpha_total must be below 2");
}

double SpaceSpectralDensity::eval(const double* xi, std::size_t d) const {
    if (d != alphas.size()) throw DomainError("eval_space_density: dimension mismatch");
    double out = cq;
    for (std::size_t j = 0; j < d; ++j) {
        double a = alphas[j];
        double v = std::abs(xi[j]);
        if (v == 0.0) {
            if (a < 1.0)
                throw SingularEvaluation("eval_space_density: xi_j = 0 with alpha_j < 1");
            if (a > 1.0) return 0.0;
            continue;  // alpha_j == 1: unit factor
        }
        out *= std::pow(v, a - 1.0);
    }
    return out;
}

TimeKernel::TimeKernel(std::vector<Part> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw DomainError("TimeKernel: empty sum");
    for (const Part& p : parts_) {
        if (p.riesz) {
            if (!(p.c > 0.0)) throw DomainError("TimeKernel: Riesz weight must be positive");
            if (!(p.alpha0 > 0.0 && p.alpha0 < 1.0))
                throw DomainError("TimeKernel: Riesz alpha0 must lie in (0,1)");
            alpha0_effective_ = std::max(alpha0_effective_, p.alpha0);
        } else {
            if (!(p.c >= 0.0)) throw DomainError("TimeKernel: constant part must be nonnegative");
        }
    }
}

TimeKernel TimeKernel::constant(double c) { return TimeKernel({Part{c, 0.0, false}}); }

TimeKernel TimeKernel::riesz(double c, double alpha0) {
    return TimeKernel({Part{c, alpha0, true}});
}

TimeKernel TimeKernel::sum(std::vector<Part> parts) { return TimeKernel(std::move(parts)); }

bool TimeKernel::has_riesz() const {
    for (const Part& p : parts_)
        if (p.riesz) return true;
    return false;
}

double TimeKernel::eval(double tau) const {
    double out = 0.0;
    for (const Part& p : parts_) {
        if (!p.riesz) {
            out += p.c;
        } else {
            if (tau == 0.0)
                throw SingularEvaluation("eval_time_kernel: Riesz part singular at tau = 0");
            out += p.c * std::pow(std::abs(tau), -p.alpha0);
        }
    }
    return out;
}

namespace {

// \int_{u1}^{u2} (A + B u) |tau - u|^{-a0} du via the antiderivatives
// P(v) = sign(v)|v|^{1-a0}/(1-a0) and S(v) = |v|^{2-a0}/(2-a0), both
// continuous through v = 0 for a0 in (0,1).
double triangle_piece(double a0, double tau, double u1, double u2, double A, double B) {
    auto P = [a0](double v) {
        return (v >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v), 1.0 - a0) / (1.0 - a0);
    };
    auto S = [a0](double v) { return std::pow(std::abs(v), 2.0 - a0) / (2.0 - a0); };
    double w1 = tau - u1;
    double w2 = tau - u2;
    return (A + B * tau) * (P(w1) - P(w2)) - B * (S(w1) - S(w2));
}

}  // namespace

double TimeKernel::smoothed(double delta, double tau) const {
    if (!(delta > 0.0)) throw DomainError("smoothed_time_kernel: delta must be positive");
    double out = 0.0;
    for (const Part& p : parts_) {
        if (!p.riesz) {
            out += p.c;  // unit-mass mollifier leaves constants unchanged
        } else {
            double inv = 1.0 / (delta * delta);
            double left = triangle_piece(p.alpha0, tau, -delta, 0.0, delta, 1.0);
            double right = triangle_piece(p.alpha0, tau, 0.0, delta, delta, -1.0);
            out += p.c * inv * (left + right);
        }
    }
    return out;
}

double TimeKernel::constant_mass() const {
    double out = 0.0;
    for (const Part& p : parts_)
        if (!p.riesz) out += p.c;
    return out;
}

double TimeKernel::riesz_spectral_density(double eta) const {
    double out = 0.0;
    for (const Part& p : parts_)
        if (p.riesz)
            out += p.c * riesz_spectral_norm(p.alpha0) * std::pow(std::abs(eta), p.alpha0 - 1.0);
    return out;
}

double TimeKernel::riesz_cell_mass(double l, double r) const {
    double out = 0.0;
    for (const Part& p : parts_)
        if (p.riesz)
            out += p.c * riesz_spectral_norm(p.alpha0) * power_cell_mass(p.alpha0, l, r);
    return out;
}

PairedCovariance::PairedCovariance(SpaceSpectralDensity space_in, TimeKernel time_in)
    : space(std::move(space_in)), time(std::move(time_in)) {
    if (!(space.alpha_total < 2.0 * (1.0 - time.alpha0_effective())))
        throw DomainError("PairedCovariance: requires alpha_total < 2 (1 - alpha0)");
}

RegularizedSpaceKernel::RegularizedSpaceKernel(const SpaceSpectralDensity& density, double epsilon,
                                               double x_max, int points_per_decade)
    : cq_(density.cq), alphas_(density.alphas), eps_(epsilon), x_max_(x_max) {
    if (!(epsilon > 0.0)) throw DomainError("RegularizedSpaceKernel: epsilon must be positive");
    value_at_zero_ = cq_;
    tables_.reserve(alphas_.size());
    for (double a : alphas_) {
        double g0 = std::tgamma(0.5 * a) * std::pow(eps_, -0.5 * a);
        value_at_zero_ *= g0;
        tables_.emplace_back([a, epsilon](double x) { return damped_power_transform(a, epsilon, x); },
                             g0, 1e-6, x_max, points_per_decade);
    }
}

double RegularizedSpaceKernel::factor(std::size_t j, double xj) const {
    return tables_[j].eval(xj);
}

double RegularizedSpaceKernel::eval(const double* x, std::size_t d) const {
    if (d != alphas_.size()) throw DomainError("eval_regularized_kernel: dimension mismatch");
    double out = cq_;
    for (std::size_t j = 0; j < d; ++j) out *= tables_[j].eval(x[j]);
    return out;
}

}  // namespace fkpam
