// Acceptance suite: one pass/fail line per criterion, each at its stated
// tolerance. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "fkpam/experiments.hpp"
#include "fkpam/quadrature.hpp"
#include "fkpam/rng.hpp"

using namespace fkpam;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, const std::string& label, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %2d: %-34s %s  (%.1f s)\n", pass ? "PASS" : "FAIL", criterion,
                label.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const unsigned kWorkers = 2;

// --- criterion 1: bridge law -------------------------------------------------
void criterion_bridge_law() {
    Timer timer;
    const std::size_t n = 100000;
    PathGrid grid(1.0, 20);
    const std::vector<std::size_t> nodes{2, 6, 10, 14, 18};
    std::vector<std::vector<double>> acc(nodes.size(), std::vector<double>(nodes.size(), 0.0));
    double endpoint_worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto br = bridge_from_bm(sample_bm(derive_seed(101, {i}), grid, {0.0}));
        endpoint_worst = std::max({endpoint_worst, std::abs(br.at(0)[0]), std::abs(br.at(20)[0])});
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = 0; b < nodes.size(); ++b)
                acc[a][b] += br.at(nodes[a])[0] * br.at(nodes[b])[0];
    }
    double worst_z = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = 0; b < nodes.size(); ++b) {
            double s = grid.time_at(nodes[a]), r = grid.time_at(nodes[b]);
            double expected = std::min(s, r) - s * r;
            double got = acc[a][b] / static_cast<double>(n);
            // var of the product of jointly gaussian marginals
            double var = s * (1.0 - s) * r * (1.0 - r) + expected * expected;
            double se = std::sqrt(var / static_cast<double>(n));
            worst_z = std::max(worst_z, std::abs(got - expected) / se);
        }
    }
    bool pass = worst_z < 3.0 && endpoint_worst == 0.0 && timer.seconds() < 30.0;
    report(1, "bridge law", pass,
           "max |z| = " + fmt(worst_z) + " (< 3), endpoints exact = " +
               (endpoint_worst == 0.0 ? "yes" : "no"),
           timer.seconds());
}

// --- criterion 2: kernel closed forms -----------------------------------------
void criterion_kernel_closed_forms() {
    Timer timer;
    RngStream rng(202);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        std::size_t d = rep % 2 == 0 ? 1 : 2;
        std::vector<double> alphas{1.05 + 0.6 * rng.next_double()};
        if (d == 2) alphas.push_back(0.1 + (1.9 - alphas[0] - 0.1) * rng.next_double());
        double cq = 0.5 + 2.0 * rng.next_double();
        double eps = 0.02 + 0.2 * rng.next_double();
        SpaceSpectralDensity q(cq, alphas);
        RegularizedSpaceKernel kernel(q, eps, 64.0);
        double closed = cq;
        for (double a : alphas) closed *= std::tgamma(0.5 * a) * std::pow(eps, -0.5 * a);
        // route through the tabulated interpolant near zero
        std::vector<double> tiny(d, 1e-6);
        worst = std::max(worst, std::abs(kernel.eval(tiny) - closed) / closed);
    }
    bool window_exact = fejer_hat(1.0) == 0.0 && fejer_hat(-1.0) == 0.0 &&
                        fejer_hat(1.0 + 1e-12) == 0.0 && fejer_hat(0.999999) > 0.0;
    double fejer_zero_err = std::abs(fejer(0.0) - 1.0 / (2.0 * std::numbers::pi));
    bool pass = worst < 1e-4 && window_exact && fejer_zero_err < 1e-10 && timer.seconds() < 10.0;
    report(2, "kernel closed forms", pass,
           "max rel dev = " + fmt(worst) + " (< 1e-4), window support exact = " +
               (window_exact ? "yes" : "no") + ", fejer(0) err = " + fmt(fejer_zero_err),
           timer.seconds());
}

// --- criterion 3: noise synthesis ----------------------------------------------
void criterion_noise_synthesis() {
    Timer timer;
    double worst_z = 0.0;
    int checked = 0;
    for (int family = 0; family < 2; ++family) {
        PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}),
                             family == 0 ? TimeKernel::constant(1.0)
                                         : TimeKernel::riesz(1.0, 0.3));
        const double eps = 0.05, delta = 0.125;
        SpaceTimeGrid grid(1.0, 9, {-3.0}, {3.0}, {49});
        FrequencyGrid freq = FrequencyGrid::suggest(cov, eps, delta, grid);
        std::vector<NoiseRealization> rs;
        rs.reserve(200);
        for (std::size_t i = 0; i < 200; ++i)
            rs.push_back(synthesize_noise(derive_seed(303, {static_cast<std::uint64_t>(family), i}),
                                          cov, eps, delta, grid, freq, kWorkers));
        RngStream rng(derive_seed(304, {static_cast<std::uint64_t>(family)}));
        for (int lag_case = 0; lag_case < 10; ++lag_case) {
            std::size_t ts = static_cast<std::size_t>(rng.next_double() * 4.0);
            std::size_t xs = static_cast<std::size_t>(rng.next_double() * 12.0);
            double tl = static_cast<double>(ts) * grid.dt();
            std::vector<double> sl{static_cast<double>(xs) * grid.dx(0)};
            auto [est, se] = empirical_covariance(rs, tl, sl);
            double target = truncated_covariance(cov, eps, delta, freq, tl, sl);
            worst_z = std::max(worst_z, std::abs(est - target) / se);
            ++checked;
        }
    }
    bool pass = worst_z < 3.0 && timer.seconds() < 300.0;
    report(3, "noise synthesis covariance", pass,
           "max |z| over " + std::to_string(checked) + " lags = " + fmt(worst_z) + " (< 3)",
           timer.seconds());
}

// --- criterion 4: moment identities ----------------------------------------------
void criterion_moment_identities() {
    Timer timer;
    PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}), TimeKernel::constant(1.0));
    FkContext ctx(cov, 0.1, 24, kWorkers, 128.0);
    const double t = 1.0, theta = 0.4;
    const std::size_t n_samples = 10000;
    auto unit = InitialMeasure::unit_constant(1);
    auto dirac = InitialMeasure::atoms({{{0.0}, 1.0}});

    // theta = 0 exactness
    double exact_err = 0.0;
    for (int n = 1; n <= 4; ++n) {
        auto est = moment_mc(ctx, n, t, {0.4}, dirac, 0.0, 8, 404);
        exact_err = std::max(exact_err,
                             std::abs(est.log_value - n * log_heat_convolve(dirac, t, {0.4})));
    }

    // jensen monotonicity of (E u^N)^{1/N}
    double worst_jensen_z = 1e9;
    double prev = -1e9, prev_se = 0.0;
    for (int n = 1; n <= 4; ++n) {
        auto est = moment_mc(ctx, n, t, {0.0}, unit, theta, n_samples,
                             derive_seed(405, {static_cast<std::uint64_t>(n)}));
        double norm = est.log_value / n;
        double se = est.rel_se / n;
        if (n > 1)
            worst_jensen_z = std::min(worst_jensen_z,
                                      (norm - prev) / std::sqrt(se * se + prev_se * prev_se));
        prev = norm;
        prev_se = se;
    }

    // shift comparison against the unit-constant bound
    auto atom = InitialMeasure::atoms({{{1.5}, 1.0}});
    auto shifted = moment_mc(ctx, 2, t, {0.0}, atom, theta, n_samples, 406);
    auto unshifted = moment_mc(ctx, 2, t, {0.0}, unit, theta, n_samples, 407);
    double bound = unshifted.log_value + 2.0 * log_heat_convolve(atom, t, {0.0});
    double shift_z = (bound - shifted.log_value) / (shifted.rel_se + unshifted.rel_se);

    bool pass = exact_err < 1e-12 && worst_jensen_z > -3.0 && shift_z > -3.0 &&
                timer.seconds() < 300.0;
    report(4, "moment identities", pass,
           "theta0 err = " + fmt(exact_err) + ", jensen z = " + fmt(worst_jensen_z) +
               " (> -3), shift z = " + fmt(shift_z) + " (> -3)",
           timer.seconds());
}

// --- criterion 5: girsanov direction ----------------------------------------------
void criterion_girsanov() {
    Timer timer;
    struct Params {
        TimeKernel kernel;
        double theta;
    };
    std::vector<Params> sets{{TimeKernel::constant(1.0), 0.5},
                             {TimeKernel::constant(0.5), 0.8},
                             {TimeKernel::riesz(1.0, 0.3), 0.5}};
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}), sets[i].kernel);
        FkContext ctx(cov, 0.1, 24, kWorkers, 128.0);
        auto chk = girsanov_bridge_check(ctx, 1, 1.0, sets[i].theta, 10000,
                                         derive_seed(505, {i}));
        // stated direction: E exp(Q1 bridge) <= E exp(Q1 free) within 3 SE,
        // evaluated on the paired estimator
        bool ok = chk.paired_diff > -3.0 * chk.paired_diff_se;
        pass = pass && ok;
        detail += (i ? ", " : "") + std::string("set") + std::to_string(i + 1) +
                  " diff = " + fmt(chk.paired_diff) + " +- " + fmt(chk.paired_diff_se);
    }
    if (!pass)
        detail += "  [expected: the matched-parameter direction is reversed; see the half-horizon "
                  "bound in the validation suite]";
    report(5, "girsanov direction", pass && timer.seconds() < 180.0, detail, timer.seconds());
}

// --- criterion 6: variational solver --------------------------------------------
void criterion_variational() {
    Timer timer;
    PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}), TimeKernel::constant(1.0));
    const std::size_t slices = 16, points = 128;
    const double extent = 0.5;
    VariationalProblem prob(1.0, 1.0, cov, 1, slices, points, extent);

    // gradient vs central differences at a random feasible profile
    ProfileGrid g = prob.initial_profile();
    RngStream rng(606);
    for (double& v : g.values) v += 0.1 * rng.next_normal();
    g.project();
    std::vector<double> grad;
    prob.gradient(g, grad);
    double worst_fd = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t idx = static_cast<std::size_t>(rng.next_double() * g.values.size());
        ProfileGrid gp = g, gm = g;
        gp.values[idx] += 1e-5;
        gm.values[idx] -= 1e-5;
        double fd = (prob.objective_raw(gp) - prob.objective_raw(gm)) / 2e-5;
        double scale = std::max({std::abs(fd), std::abs(grad[idx]), 1e-6});
        worst_fd = std::max(worst_fd, std::abs(fd - grad[idx]) / scale);
    }

    SolverSchedule schedule;
    schedule.max_iterations = 400;
    auto sc = scaling_check(1.0, 1.5, 1.0, cov, 1, slices, points, extent, schedule);
    double ratio_dev = std::abs(sc.measured_ratio / sc.predicted_ratio - 1.0);

    // small-t product decreasing over t in {1, 0.5, 0.25}
    const double alpha = 1.3;
    const double p = (4.0 - alpha) / (2.0 - alpha);
    std::vector<double> products;
    for (double t : {1.0, 0.5, 0.25}) {
        VariationalProblem pt(t, 1.0, cov, 1, slices, points, extent);
        products.push_back(std::pow(t, p) * pt.solve(schedule).value);
    }
    bool decreasing = products[1] < products[0] && products[2] < products[1];

    bool pass = worst_fd < 1e-4 && ratio_dev < 0.10 && decreasing && timer.seconds() < 600.0;
    report(6, "variational solver", pass,
           "fd dev = " + fmt(worst_fd) + " (< 1e-4), scaling dev = " + fmt(ratio_dev) +
               " (< 0.1), small-t decreasing = " + (decreasing ? "yes" : "no"),
           timer.seconds());
}

// --- criterion 7: closed-form consistency ----------------------------------------
void criterion_legendre() {
    Timer timer;
    RngStream rng(707);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        double theta = 0.5 + 2.0 * rng.next_double();
        double t = 0.3 + 2.0 * rng.next_double();
        double alpha = 0.3 + 1.5 * rng.next_double();
        double energy = 0.2 + 5.0 * rng.next_double();
        worst = std::max(worst, legendre_consistency(theta, t, alpha, energy).relative_gap);
    }
    bool pass = worst < 1e-8 && timer.seconds() < 1.0;
    report(7, "legendre closed form", pass, "max gap = " + fmt(worst) + " (< 1e-8)",
           timer.seconds());
}

// --- criterion 8: localization decay ----------------------------------------------
void criterion_localization() {
    Timer timer;
    PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}), TimeKernel::constant(1.0));
    std::vector<double> spectral;
    bool spectral_decreasing = true;
    {
        std::vector<double> bs{2.0, 8.0, 32.0, 128.0}, lx, ly;
        for (double b : bs) {
            LocalizedDensity loc(cov.space, LocalizerSpec(b));
            double e = localization_error_spectrum(cov, loc, 1.0);
            if (!spectral.empty()) spectral_decreasing = spectral_decreasing && e < spectral.back();
            spectral.push_back(e);
            lx.push_back(std::log(b));
            ly.push_back(std::log(e));
        }
    }
    std::vector<double> bs_fk{8.0, 64.0, 512.0}, fx, fy, sx, sy;
    bool fk_decreasing = true;
    double prev_gap = 1e300;
    for (double b : bs_fk) {
        LocalizedDensity loc(cov.space, LocalizerSpec(b));
        auto study = localized_fk_study(cov, loc, 0.05, 1.0, {0.0}, 0.5, 32, 4000,
                                        derive_seed(808, {static_cast<std::uint64_t>(b)}),
                                        kWorkers);
        fk_decreasing = fk_decreasing && study.gap < prev_gap;
        prev_gap = study.gap;
        fx.push_back(std::log(b));
        fy.push_back(std::log(study.gap));
        sx.push_back(std::log(b));
        sy.push_back(std::log(localization_error_spectrum(cov, loc, 1.0)));
    }
    double spectral_slope_wide = fit_line(
        {std::log(2.0), std::log(8.0), std::log(32.0), std::log(128.0)},
        {std::log(spectral[0]), std::log(spectral[1]), std::log(spectral[2]), std::log(spectral[3])})
        .slope;
    double fk_slope = fit_line(fx, fy).slope;
    double sp_slope = fit_line(sx, sy).slope;
    double slope_diff = std::abs(fk_slope - sp_slope);
    bool pass = spectral_decreasing && spectral_slope_wide < 0.0 && fk_decreasing &&
                slope_diff < 0.2 && timer.seconds() < 600.0;
    report(8, "localization decay", pass,
           "spectral slope = " + fmt(spectral_slope_wide) + " (< 0), fk slope = " + fmt(fk_slope) +
               ", diff = " + fmt(slope_diff) + " (< 0.2)",
           timer.seconds());
}

// --- criterion 9: case-(II) decay surrogate ------------------------------------------
ExperimentConfig decay_config(double theta) {
    ExperimentConfig cfg;
    cfg.alphas = {1.3};
    cfg.time_parts = {{1.0, 0.0, false}};
    cfg.epsilon = 0.05;
    cfg.measure_kind = "atoms";
    cfg.atoms = {{{0.0}, 1.0}};
    cfg.t = 1.0;
    cfg.theta = theta;
    cfg.radii = {4, 5, 6, 7, 8, 9, 10, 11, 12};
    cfg.n_paths = 300;
    cfg.grid_density = 2.0;
    cfg.seed = 777;
    cfg.workers = kWorkers;
    return cfg;
}

void criterion_decay() {
    Timer timer;
    auto exact = run_decay_experiment(decay_config(0.0));
    double exact_dev = std::abs(exact.vs_nu.fit.slope + 1.0);
    auto mc = run_decay_experiment(decay_config(0.1));
    double mc_dev = std::abs(mc.vs_nu.fit.slope + 1.0);
    bool pass = exact_dev < 1e-3 && mc_dev < 0.15 && timer.seconds() < 600.0;
    report(9, "case-(II) decay surrogate", pass,
           "theta0 slope dev = " + fmt(exact_dev) + " (< 1e-3), theta=0.1 dev = " + fmt(mc_dev) +
               " (< 0.15)",
           timer.seconds());
}

// --- criterion 10: case-(I) growth surrogate ------------------------------------------
void criterion_growth() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.alphas = {1.3};
    cfg.time_parts = {{1.0, 0.0, false}};
    cfg.epsilon = 0.05;
    cfg.measure_kind = "unit";
    cfg.t = 1.0;
    cfg.theta = 1.0;
    cfg.radii = {4, 8, 16, 32, 64, 128, 256};
    cfg.n_paths = 400;
    cfg.grid_density = 2.0;
    cfg.seed = 20240901;
    cfg.workers = kWorkers;

    auto base = run_growth_experiment(cfg);
    ExperimentConfig fine = cfg;
    fine.grid_density *= 2.0;
    auto refined = run_growth_experiment(fine);
    double change = std::abs(refined.report.fit.slope - base.report.fit.slope);
    bool stable = change < base.report.fit.slope_se;
    bool positive = base.report.fit.slope > 0.0;
    double factor = base.report.fit.slope / base.kappa_value;
    bool pass = positive && stable && timer.seconds() < 600.0;
    report(10, "case-(I) growth surrogate", pass,
           "slope = " + fmt(base.report.fit.slope) + " (> 0), refine change = " + fmt(change) +
               " (< se " + fmt(base.report.fit.slope_se) + "); informational slope/kappa = " +
               fmt(factor) + " (kappa = " + fmt(base.kappa_value) + ")",
           timer.seconds());
}

// --- criterion 11: determinism -----------------------------------------------------
void criterion_determinism() {
    Timer timer;
    auto cfg1 = decay_config(0.1);
    cfg1.workers = 1;
    auto cfg2 = decay_config(0.1);
    cfg2.workers = 3;
    auto r1 = run_decay_experiment(cfg1);
    auto r2 = run_decay_experiment(cfg2);
    std::string j1 = r1.vs_nu.to_json(cfg1).dump();
    std::string j2 = r2.vs_nu.to_json(cfg2).dump();
    std::string c1, c2;
    for (std::size_t i = 0; i < r1.radii.size(); ++i)
        c1 += format_double(r1.radii[i]) + "," + format_double(r1.log_max[i]) + "," +
              format_double(r1.nu_values[i]) + "\n";
    for (std::size_t i = 0; i < r2.radii.size(); ++i)
        c2 += format_double(r2.radii[i]) + "," + format_double(r2.log_max[i]) + "," +
              format_double(r2.nu_values[i]) + "\n";
    bool pass = j1 == j2 && c1 == c2;
    report(11, "worker-count determinism", pass,
           std::string("json identical = ") + (j1 == j2 ? "yes" : "no") + ", csv identical = " +
               (c1 == c2 ? "yes" : "no"),
           timer.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_bridge_law();
    criterion_kernel_closed_forms();
    criterion_noise_synthesis();
    criterion_moment_identities();
    criterion_girsanov();
    criterion_variational();
    criterion_legendre();
    criterion_localization();
    criterion_decay();
    criterion_growth();
    criterion_determinism();
    std::printf("%d of 11 criteria failed\n", g_failures);
    return g_failures;
}
