// Command-line front end: configuration, seeds, parallel execution and all
// result emission for the Feynman-Kac / rough-noise laboratory.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fkpam/experiments.hpp"
#include "fkpam/rng.hpp"

using namespace fkpam;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;  // 0: hardware
    bool refine = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--workers", args.workers, "worker threads (0 : hardware)");
    cmd->add_flag("--refine", args.refine, "double one resolution axis and report the change");
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg =
        args.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    cfg.workers = args.workers;
    return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    std::filesystem::create_directories(args.out_dir);
    return (std::filesystem::path(args.out_dir) / name).string();
}

void emit_json(const CommonArgs& args, const std::string& name, const Json& j) {
    write_text(out_path(args, name), j.dump(2) + "\n");
    std::cout << "wrote " << out_path(args, name) << "\n";
}

std::vector<double> parse_point(const std::string& text, std::size_t dim) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stod(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty()) out.assign(dim, 0.0);
    if (out.size() != dim) throw ConfigError("--x has the wrong dimension");
    return out;
}

// --- subcommand bodies -------------------------------------------------------

int cmd_kernel_table(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    RegularizedSpaceKernel kernel(cfg.covariance().space, cfg.epsilon);
    std::vector<std::vector<double>> rows;
    auto add_row = [&](double x) {
        std::vector<double> row{x};
        std::vector<double> p(cfg.dim(), x);
        row.push_back(kernel.eval(p));
        for (std::size_t j = 0; j < cfg.dim(); ++j) row.push_back(kernel.factor(j, x));
        rows.push_back(std::move(row));
    };
    add_row(0.0);
    for (double x = 1e-4; x <= 50.0; x *= std::pow(10.0, 1.0 / 24.0)) add_row(x);
    std::vector<std::string> header{"x", "gamma_eps"};
    for (std::size_t j = 0; j < cfg.dim(); ++j) header.push_back("factor_" + std::to_string(j));
    write_csv(out_path(args, "kernel_table.csv"), header, rows);
    std::cout << "wrote " << out_path(args, "kernel_table.csv") << "\n";
    return 0;
}

int cmd_sample_paths(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    PathGrid grid(cfg.t, cfg.path_steps);
    std::vector<std::vector<double>> rows;
    const std::size_t count = std::min<std::size_t>(cfg.n_paths, 64);
    for (std::size_t p = 0; p < count; ++p) {
        auto path = sample_bm(derive_seed(cfg.seed, {0x7061746873ULL, p}), grid,
                              std::vector<double>(cfg.dim(), 0.0));
        for (std::size_t l = 0; l <= grid.steps; ++l) {
            std::vector<double> row{static_cast<double>(p), static_cast<double>(l),
                                    grid.time_at(l)};
            for (std::size_t j = 0; j < cfg.dim(); ++j) row.push_back(path.at(l)[j]);
            rows.push_back(std::move(row));
        }
    }
    std::vector<std::string> header{"path_index", "step", "time"};
    for (std::size_t j = 0; j < cfg.dim(); ++j) header.push_back("x_" + std::to_string(j));
    write_csv(out_path(args, "paths.csv"), header, rows);
    std::cout << "wrote " << out_path(args, "paths.csv") << "\n";
    return 0;
}

int cmd_synth_noise(const CommonArgs& args, bool csv) {
    ExperimentConfig cfg = load_config(args);
    SpaceTimeGrid grid = cfg.noise_grid(cfg.radii.empty() ? 4.0 : cfg.radii.back());
    FrequencyGrid freq = cfg.frequency_grid(grid);
    auto noise = synthesize_noise(cfg.seed, cfg.covariance(), cfg.epsilon, cfg.delta_effective(),
                                  grid, freq, cfg.workers);
    dump_noise_binary(out_path(args, "noise.bin"), noise);
    Json meta{{"t", grid.t},
              {"time_count", grid.time_count},
              {"box_lo", grid.lo},
              {"box_hi", grid.hi},
              {"space_counts", grid.space_counts},
              {"epsilon", noise.epsilon},
              {"delta", noise.delta},
              {"seed", noise.seed},
              {"captured_fraction", noise.captured_fraction},
              {"config_hash", cfg.config_hash()},
              {"versions", version_block()}};
    emit_json(args, "noise_meta.json", meta);
    if (csv) {
        std::vector<std::vector<double>> rows;
        for (std::size_t it = 0; it < grid.time_count; ++it)
            for (std::size_t m = 0; m < grid.space_nodes(); ++m)
                rows.push_back({static_cast<double>(it), static_cast<double>(m),
                                noise.value_at(it, m)});
        write_csv(out_path(args, "noise.csv"), {"time_index", "space_index", "value"}, rows);
    }
    std::cout << "wrote " << out_path(args, "noise.bin") << "\n";
    return 0;
}

Json fk_point_run(ExperimentConfig cfg, const std::vector<double>& x, const std::string& noise_path,
                  unsigned workers) {
    cfg.workers = workers;
    double r = 0.0;
    for (double c : x) r = std::max(r, std::abs(c));
    NoiseRealization noise = noise_path.empty()
                                 ? synthesize_noise(derive_seed(cfg.seed, {0x6e7aULL}),
                                                    cfg.covariance(), cfg.epsilon,
                                                    cfg.delta_effective(), cfg.noise_grid(r + 1.0),
                                                    cfg.frequency_grid(cfg.noise_grid(r + 1.0)),
                                                    cfg.workers)
                                 : load_noise_binary(noise_path);
    auto est = pointwise_fk(noise, cfg.t, x, cfg.measure(), cfg.theta, cfg.n_paths, cfg.seed,
                            cfg.path_steps, cfg.workers);
    return Json{{"value", est.value},
                {"log_value", est.log_value},
                {"standard_error", est.standard_error},
                {"rel_se", est.rel_se},
                {"n", est.n_paths},
                {"exit_fraction", est.exit_fraction},
                {"normalizer", est.normalizer},
                {"seed", cfg.seed},
                {"params", cfg.to_json()},
                {"config_hash", cfg.config_hash()},
                {"versions", version_block()}};
}

int cmd_fk_point(const CommonArgs& args, const std::string& x_text, const std::string& noise_path) {
    ExperimentConfig cfg = load_config(args);
    auto x = parse_point(x_text, cfg.dim());
    Json j = fk_point_run(cfg, x, noise_path, cfg.workers);
    if (args.refine) {
        ExperimentConfig fine = cfg;
        fine.path_steps *= 2;
        Json jf = fk_point_run(fine, x, noise_path, cfg.workers);
        j["refine"] = Json{{"axis", "path_steps"},
                           {"base", j["log_value"]},
                           {"refined", jf["log_value"]},
                           {"change", jf["log_value"].get<double>() - j["log_value"].get<double>()}};
    }
    emit_json(args, "fk_point.json", j);
    return 0;
}

Json fk_moment_run(const ExperimentConfig& cfg, int order, double epsilon) {
    FkContext ctx(cfg.covariance(), epsilon, cfg.path_steps, cfg.workers, 1e3);
    std::vector<double> x(cfg.dim(), 0.0);
    auto est = moment_mc(ctx, order, cfg.t, x, cfg.measure(), cfg.theta, cfg.n_samples, cfg.seed);
    return Json{{"order", est.order},
                {"value", est.value},
                {"log_value", est.log_value},
                {"standard_error", est.value * est.rel_se},
                {"rel_se", est.rel_se},
                {"n", est.n_samples},
                {"epsilon", est.epsilon},
                {"seed", cfg.seed}};
}

int cmd_fk_moment(const CommonArgs& args, int order, bool richardson) {
    ExperimentConfig cfg = load_config(args);
    Json j = fk_moment_run(cfg, order, cfg.epsilon);
    j["params"] = cfg.to_json();
    j["config_hash"] = cfg.config_hash();
    j["versions"] = version_block();
    if (richardson) {
        // moments at eps, eps/2, eps/4 with a one-step power-law extrapolation
        double e1 = j["log_value"].get<double>();
        double e2 = fk_moment_run(cfg, order, 0.5 * cfg.epsilon)["log_value"].get<double>();
        double e3 = fk_moment_run(cfg, order, 0.25 * cfg.epsilon)["log_value"].get<double>();
        double d1 = e2 - e1, d2 = e3 - e2;
        Json rich{{"log_values", {e1, e2, e3}},
                  {"epsilons", {cfg.epsilon, 0.5 * cfg.epsilon, 0.25 * cfg.epsilon}}};
        if (d1 != 0.0 && d2 != 0.0 && d1 * d2 > 0.0 && std::abs(d2) < std::abs(d1)) {
            double p_hat = std::log(d1 / d2) / std::log(2.0);
            rich["p_hat"] = p_hat;
            if (p_hat > 0.2) {
                rich["extrapolated_log_value"] = e3 + d2 / (std::pow(2.0, p_hat) - 1.0);
            } else {
                rich["note"] = "contraction too weak for a trustworthy limit";
            }
        } else {
            rich["note"] = "non-monotone or non-contracting differences; no extrapolation";
        }
        j["richardson"] = rich;
    }
    if (args.refine) {
        ExperimentConfig fine = cfg;
        fine.path_steps *= 2;
        Json jf = fk_moment_run(fine, order, cfg.epsilon);
        j["refine"] = Json{{"axis", "path_steps"},
                           {"base", j["log_value"]},
                           {"refined", jf["log_value"]},
                           {"change", jf["log_value"].get<double>() - j["log_value"].get<double>()}};
    }
    emit_json(args, "fk_moment.json", j);
    return 0;
}

int cmd_growth(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    auto res = run_growth_experiment(cfg);
    std::vector<std::vector<double>> rows;
    const double expo = 2.0 / (4.0 - cfg.covariance().space.alpha_total);
    for (const auto& p : res.profile)
        rows.push_back({p.radius, p.log_max, std::pow(std::log(p.radius), expo)});
    write_csv(out_path(args, "growth.csv"), {"R", "log_max", "transformed_abscissa"}, rows);
    Json j = res.report.to_json(cfg);
    if (args.refine) {
        ExperimentConfig fine = cfg;
        fine.grid_density *= 2.0;
        auto rf = run_growth_experiment(fine);
        j["refine"] = Json{{"axis", "grid_density"},
                           {"base_slope", res.report.fit.slope},
                           {"refined_slope", rf.report.fit.slope},
                           {"change", rf.report.fit.slope - res.report.fit.slope},
                           {"fit_se", res.report.fit.slope_se}};
    }
    emit_json(args, "growth_fit.json", j);
    return 0;
}

int cmd_decay(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    auto res = run_decay_experiment(cfg);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.radii.size(); ++i)
        rows.push_back({res.radii[i], res.log_max[i], res.nu_values[i],
                        res.radii[i] * res.radii[i]});
    write_csv(out_path(args, "decay.csv"), {"R", "log_max", "nu", "R_squared"}, rows);
    Json j = res.vs_nu.to_json(cfg);
    if (res.vs_r2) j["vs_r_squared"] = res.vs_r2->to_json(cfg);
    if (args.refine) {
        ExperimentConfig fine = cfg;
        fine.grid_density *= 2.0;
        auto rf = run_decay_experiment(fine);
        j["refine"] = Json{{"axis", "grid_density"},
                           {"base_slope", res.vs_nu.fit.slope},
                           {"refined_slope", rf.vs_nu.fit.slope},
                           {"change", rf.vs_nu.fit.slope - res.vs_nu.fit.slope},
                           {"fit_se", res.vs_nu.fit.slope_se}};
    }
    emit_json(args, "decay_fit.json", j);
    return 0;
}

Json variational_run(const ExperimentConfig& cfg, std::size_t points) {
    auto cov = cfg.covariance();
    SolverSchedule schedule;
    schedule.max_iterations = cfg.var_iterations;
    VariationalProblem prob(cfg.t, 1.0, cov, cfg.dim(), cfg.var_slices, points, cfg.var_extent);
    auto res = prob.solve(schedule);
    double alpha = cov.space.alpha_total;
    auto sc = scaling_check(cfg.t, 1.5, 1.0, cov, cfg.dim(), cfg.var_slices, points,
                            cfg.var_extent, schedule);
    auto lc = legendre_consistency(std::abs(cfg.theta) > 0 ? std::abs(cfg.theta) : 1.0, cfg.t,
                                   alpha, std::max(res.value, 1e-12));
    return Json{{"E_t", res.value},
                {"kappa", kappa(cfg.theta, cfg.t, alpha, cfg.dim(), std::max(res.value, 1e-300))},
                {"scaling_check",
                 Json{{"theta_a", sc.theta_a},
                      {"theta_b", sc.theta_b},
                      {"measured_ratio", sc.measured_ratio},
                      {"predicted_ratio", sc.predicted_ratio}}},
                {"legendre_gap", lc.relative_gap},
                {"discretization",
                 Json{{"slices", cfg.var_slices},
                      {"points", points},
                      {"extent", cfg.var_extent},
                      {"xi_cutoff", prob.xi_cutoff()},
                      {"iterations", res.iterations},
                      {"gradient_norm", res.gradient_norm},
                      {"time_drift", res.time_drift},
                      {"init_width", res.best_init_width}}}};
}

int cmd_variational(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    Json j = variational_run(cfg, cfg.var_points);
    j["config_hash"] = cfg.config_hash();
    j["versions"] = version_block();
    if (args.refine) {
        Json jf = variational_run(cfg, cfg.var_points * 2);
        j["refine"] = Json{{"axis", "points"},
                           {"base_E_t", j["E_t"]},
                           {"refined_E_t", jf["E_t"]},
                           {"change", jf["E_t"].get<double>() - j["E_t"].get<double>()}};
    }
    emit_json(args, "variational.json", j);
    return 0;
}

Json localize_run(const ExperimentConfig& cfg, std::size_t n_samples,
                  std::vector<std::vector<double>>* rows) {
    auto cov = cfg.covariance();
    std::vector<double> lx, l_sp, l_fk;
    for (double b : cfg.bandwidths) {
        LocalizedDensity loc(cov.space, LocalizerSpec(b));
        double spectral = localization_error_spectrum(cov, loc, cfg.t);
        auto study = localized_fk_study(cov, loc, cfg.epsilon, cfg.t,
                                        std::vector<double>(cfg.dim(), 0.0), cfg.theta,
                                        cfg.path_steps, n_samples, cfg.seed, cfg.workers);
        if (rows) rows->push_back({b, spectral, study.gap, study.gap_se});
        lx.push_back(std::log(b));
        l_sp.push_back(std::log(spectral));
        l_fk.push_back(std::log(std::max(study.gap, 1e-300)));
    }
    auto sp_fit = slope_fit(lx, l_sp);
    auto fk_fit = slope_fit(lx, l_fk);
    return Json{{"bandwidths", cfg.bandwidths},
                {"spectral_slope", sp_fit.slope},
                {"fk_gap_slope", fk_fit.slope},
                {"slope_difference", fk_fit.slope - sp_fit.slope},
                {"nu_hat", -0.5 * sp_fit.slope}};
}

int cmd_localize(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    std::vector<std::vector<double>> rows;
    Json j = localize_run(cfg, cfg.n_samples, &rows);
    write_csv(out_path(args, "localize.csv"), {"b", "spectral_gap", "fk_gap", "fk_gap_se"}, rows);
    j["config_hash"] = cfg.config_hash();
    j["versions"] = version_block();
    if (args.refine) {
        Json jf = localize_run(cfg, cfg.n_samples * 2, nullptr);
        j["refine"] = Json{{"axis", "n_samples"},
                           {"base_fk_slope", j["fk_gap_slope"]},
                           {"refined_fk_slope", jf["fk_gap_slope"]},
                           {"change", jf["fk_gap_slope"].get<double>() -
                                          j["fk_gap_slope"].get<double>()}};
    }
    emit_json(args, "localize.json", j);
    return 0;
}

int cmd_classify(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    std::vector<double> radii = cfg.radii;
    if (radii.size() < 4 || radii.back() / radii.front() < 1e3) {
        radii.clear();
        double lo = 4.0;
        for (double r = lo; r <= lo * 2048.0; r *= 2.0) radii.push_back(r);
    }
    auto diag = classify_case(cfg.measure(), cfg.t, cfg.covariance().space.alpha_total, radii);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < diag.radii.size(); ++i)
        rows.push_back({diag.radii[i], diag.in_ratio[i], diag.out_ratio[i]});
    write_csv(out_path(args, "classify_ratios.csv"), {"R", "in_ratio", "out_ratio"}, rows);
    std::string verdict = diag.verdict == CaseVerdict::CaseI
                              ? "case_I"
                              : diag.verdict == CaseVerdict::CaseII ? "case_II" : "undetermined";
    Json j{{"verdict", verdict},
           {"note", diag.note},
           {"config_hash", cfg.config_hash()},
           {"versions", version_block()}};
    emit_json(args, "classify.json", j);
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    auto ledger = run_validation_suite(cfg);
    emit_json(args, "validation.json", ledger.to_json(cfg));
    for (const auto& e : ledger.entries)
        std::cout << (e.pass ? "[pass] " : "[FAIL] ") << e.name << "  measured "
                  << format_double(e.measured) << " vs " << format_double(e.threshold) << "\n";
    std::cout << ledger.failures() << " failures / " << ledger.entries.size() << " checks\n";
    return ledger.failures() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feynman-Kac laboratory for the heat equation with rough gaussian potentials"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string x_text = "0";
    std::string noise_path;
    int order = 2;
    bool richardson = false;
    bool csv = false;

    auto* kernel_table = app.add_subcommand("kernel-table", "tabulate the regularized kernel");
    add_common(kernel_table, common);
    auto* sample_paths = app.add_subcommand("sample-paths", "emit sampled brownian paths");
    add_common(sample_paths, common);
    auto* synth = app.add_subcommand("synth-noise", "synthesize a noise realization");
    add_common(synth, common);
    synth->add_flag("--csv", csv, "also export node values as CSV");
    auto* fkp = app.add_subcommand("fk-point", "pointwise Feynman-Kac estimate");
    add_common(fkp, common);
    fkp->add_option("--x", x_text, "evaluation point, comma separated");
    fkp->add_option("--noise", noise_path, "reuse a noise dump instead of synthesizing");
    auto* fkm = app.add_subcommand("fk-moment", "moment estimate via the conditional gaussian form");
    add_common(fkm, common);
    fkm->add_option("--order", order, "moment order N (1..8)");
    fkm->add_flag("--richardson", richardson, "extrapolate over eps, eps/2, eps/4");
    auto* growth = app.add_subcommand("spatial-asymptotics", "case-(I) growth fit");
    add_common(growth, common);
    auto* decay = app.add_subcommand("tail-decay", "case-(II) decay fit");
    add_common(decay, common);
    auto* vari = app.add_subcommand("variational", "energy constant, scaling and legendre checks");
    add_common(vari, common);
    auto* localize = app.add_subcommand("localize-study", "bandwidth localization error study");
    add_common(localize, common);
    auto* classify = app.add_subcommand("classify-initial", "initial-data case classifier");
    add_common(classify, common);
    auto* validate = app.add_subcommand("validate", "run the invariant validation suite");
    add_common(validate, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (kernel_table->parsed()) return cmd_kernel_table(common);
        if (sample_paths->parsed()) return cmd_sample_paths(common);
        if (synth->parsed()) return cmd_synth_noise(common, csv);
        if (fkp->parsed()) return cmd_fk_point(common, x_text, noise_path);
        if (fkm->parsed()) return cmd_fk_moment(common, order, richardson);
        if (growth->parsed()) return cmd_growth(common);
        if (decay->parsed()) return cmd_decay(common);
        if (vari->parsed()) return cmd_variational(common);
        if (localize->parsed()) return cmd_localize(common);
        if (classify->parsed()) return cmd_classify(common);
        if (validate->parsed()) return cmd_validate(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
