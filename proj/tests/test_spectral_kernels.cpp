#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fkpam/quadrature.hpp"
#include "fkpam/rng.hpp"
#include "fkpam/special.hpp"
#include "fkpam/spectral_kernels.hpp"

using namespace fkpam;

TEST_CASE("space spectral density evaluation") {
    SpaceSpectralDensity q1(1.0, {1.5});
    CHECK(q1.eval({4.0}) == doctest::Approx(2.0));
    CHECK(q1.eval({1.0}) == doctest::Approx(1.0));

    SpaceSpectralDensity q2(2.0, {1.2, 0.5});
    double expected = 2.0 * std::pow(2.0, 0.2) * std::pow(4.0, -0.5);
    CHECK(q2.eval({2.0, 4.0}) == doctest::Approx(expected).epsilon(1e-12));

    CHECK(q1.eval({0.0}) == 0.0);  // alpha_1 > 1 vanishes at zero
    CHECK_THROWS_AS(q2.eval({1.0, 0.0}), SingularEvaluation);
    CHECK_THROWS_AS(q2.eval({1.0}), DomainError);

    CHECK_THROWS_AS(SpaceSpectralDensity(1.0, {0.9}), DomainError);       // alpha_1 <= 1
    CHECK_THROWS_AS(SpaceSpectralDensity(1.0, {1.2, 0.9}), DomainError);  // total >= 2
    CHECK_THROWS_AS(SpaceSpectralDensity(1.0, {1.2, -0.1}), DomainError);
}

TEST_CASE("time kernel evaluation and spectral measure") {
    TimeKernel c = TimeKernel::constant(1.0);
    CHECK(c.eval(7.3) == doctest::Approx(1.0));
    CHECK(c.eval(0.0) == doctest::Approx(1.0));
    CHECK(c.constant_mass() == doctest::Approx(1.0));
    CHECK_FALSE(c.has_riesz());
}

TEST_CASE("time kernel riesz and sums") {
    TimeKernel r = TimeKernel::riesz(1.0, 0.5);
    CHECK(r.eval(4.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(r.eval(0.0), SingularEvaluation);

    TimeKernel s = TimeKernel::sum({{1.0, 0.0, false}, {2.0, 0.25, true}});
    CHECK(s.eval(16.0) == doctest::Approx(1.0 + 2.0 * std::pow(16.0, -0.25)).epsilon(1e-14));
    CHECK(s.eval(16.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.alpha0_effective() == doctest::Approx(0.25));

    CHECK_THROWS_AS(TimeKernel::riesz(1.0, 1.2), DomainError);
    CHECK_THROWS_AS(TimeKernel::constant(-1.0), DomainError);
}

TEST_CASE("smoothed time kernel matches quadrature") {
    TimeKernel c = TimeKernel::constant(2.5);
    CHECK(c.smoothed(0.1, 0.7) == doctest::Approx(2.5));

    TimeKernel r = TimeKernel::riesz(1.0, 0.5);
    for (double tau : {0.0, 0.05, 0.3, 1.0}) {
        double delta = 0.1;
        // triangular-kernel convolution oracle
        double oracle = integrate(
            [&](double u) {
                double w = (delta - std::abs(u)) / (delta * delta);
                double arg = std::abs(tau - u);
                return arg == 0.0 ? 0.0 : w * std::pow(arg, -0.5);
            },
            -delta + 1e-15, delta - 1e-15, 1e-9, 1e-12);
        CHECK(r.smoothed(delta, tau) == doctest::Approx(oracle).epsilon(1e-6));
    }
    // approximate identity at a continuity point
    CHECK(r.smoothed(1e-4, 1.0) == doctest::Approx(1.0).epsilon(1e-3));
    // closed form at zero: (8/3) delta^{-1/2}
    CHECK(r.smoothed(0.09, 0.0) ==
          doctest::Approx(8.0 / 3.0 * std::pow(0.09, -0.5)).epsilon(1e-12));
}

TEST_CASE("smoothed kernel is positive definite on random time sets") {
    TimeKernel s = TimeKernel::sum({{0.3, 0.0, false}, {1.0, 0.4, true}});
    RngStream rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        int n = 2 + static_cast<int>(rng.next_double() * 6.0);
        std::vector<double> ts(n), cs(n);
        for (int i = 0; i < n; ++i) {
            ts[i] = 3.0 * rng.next_double();
            cs[i] = 2.0 * rng.next_normal();
        }
        double quad = 0.0, csq = 0.0;
        for (int i = 0; i < n; ++i) {
            csq += cs[i] * cs[i];
            for (int j = 0; j < n; ++j)
                quad += cs[i] * cs[j] * s.smoothed(0.05, ts[i] - ts[j]);
        }
        CHECK(quad >= -1e-9 * csq);
    }
}

TEST_CASE("paired covariance admissibility is a pure threshold") {
    SpaceSpectralDensity q(1.0, {1.3});
    CHECK_NOTHROW(PairedCovariance(q, TimeKernel::riesz(1.0, 0.3)));   // 1.3 < 1.4
    CHECK_THROWS_AS(PairedCovariance(q, TimeKernel::riesz(1.0, 0.4)),  // 1.3 >= 1.2
                    DomainError);
    CHECK_NOTHROW(PairedCovariance(q, TimeKernel::constant(1.0)));
    SpaceSpectralDensity wide(1.0, {1.9});
    CHECK_NOTHROW(PairedCovariance(wide, TimeKernel::constant(1.0)));
    CHECK_THROWS_AS(PairedCovariance(wide, TimeKernel::riesz(1.0, 0.06)), DomainError);
}

TEST_CASE("regularized kernel tables") {
    SpaceSpectralDensity q(1.0, {1.5});
    RegularizedSpaceKernel k(q, 0.01);
    // closed form at zero
    double expected0 = std::tgamma(0.75) * std::pow(0.01, -0.75);
    CHECK(k.at_zero() == doctest::Approx(expected0).epsilon(1e-12));
    CHECK(k.eval({0.0}) == doctest::Approx(expected0).epsilon(1e-12));

    // quadrature oracle at interior points (xi = u^2 substitution)
    for (double x : {0.05, 0.31, 1.7}) {
        double oracle = 4.0 * integrate(
                                  [&](double u) {
                                      double xi = u * u;
                                      return u * u * std::cos(x * xi) *
                                             std::exp(-0.01 * xi * xi);
                                  },
                                  0.0, std::sqrt(std::sqrt(45.0 / 0.01)), 1e-11, 1e-12);
        CHECK(k.eval({x}) == doctest::Approx(oracle).epsilon(2e-5));
    }

    // evenness
    CHECK(k.eval({0.37}) == doctest::Approx(k.eval({-0.37})));
    // extrapolation refused
    CHECK_THROWS_AS(k.eval({2e3}), OutOfRange);

    // 2-d product of per-coordinate oracles
    SpaceSpectralDensity q2(1.0, {1.2, 0.5});
    RegularizedSpaceKernel k2(q2, 0.05);
    double f0 = damped_power_transform(1.2, 0.05, 0.3);
    double f1 = damped_power_transform(0.5, 0.05, 0.7);
    CHECK(k2.eval({0.3, 0.7}) == doctest::Approx(f0 * f1).epsilon(1e-5));

    // gamma_eps(0) closed-form product and monotone decrease in eps
    SpaceSpectralDensity q3(2.0, {1.3, 0.4});
    for (double eps : {0.02, 0.08}) {
        RegularizedSpaceKernel k3(q3, eps);
        double closed = 2.0 * std::tgamma(0.65) * std::tgamma(0.2) * std::pow(eps, -0.5 * 1.7);
        CHECK(k3.at_zero() == doctest::Approx(closed).epsilon(1e-4));
    }
    CHECK(RegularizedSpaceKernel(q3, 0.08).at_zero() < RegularizedSpaceKernel(q3, 0.02).at_zero());
}

TEST_CASE("table refinement stability") {
    SpaceSpectralDensity q(1.0, {1.3});
    RegularizedSpaceKernel coarse(q, 0.05, 1e3, 512);
    RegularizedSpaceKernel fine(q, 0.05, 1e3, 1024);
    double scale = coarse.at_zero();
    for (double x : {1e-5, 1e-3, 0.07, 0.9, 1.4, 14.0, 800.0}) {
        double c = coarse.eval({x});
        double f = fine.eval({x});
        CHECK(std::abs(c - f) < 1e-5 * (std::abs(f) + 1e-6 * scale));
    }
}
