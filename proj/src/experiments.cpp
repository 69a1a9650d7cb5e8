#include "fkpam/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "fkpam/parallel.hpp"
#include "fkpam/quadrature.hpp"
#include "fkpam/rng.hpp"

namespace fkpam {

namespace {

constexpr const char* kProjectVersion = "0.1.0";

std::vector<double> json_doubles(const Json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

std::vector<std::size_t> json_sizes(const Json& j) {
    std::vector<std::size_t> out;
    for (const auto& v : j) out.push_back(v.get<std::size_t>());
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig cfg;
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        if (k.contains("cq")) cfg.cq = k.at("cq").get<double>();
        if (k.contains("alphas")) cfg.alphas = json_doubles(k.at("alphas"));
        if (k.contains("time")) {
            cfg.time_parts.clear();
            for (const auto& p : k.at("time")) {
                std::string type = p.at("type").get<std::string>();
                if (type == "constant") {
                    cfg.time_parts.push_back({p.at("c").get<double>(), 0.0, false});
                } else if (type == "riesz") {
                    cfg.time_parts.push_back(
                        {p.at("c").get<double>(), p.at("alpha0").get<double>(), true});
                } else {
                    throw ConfigError("kernel.time: unknown part type '" + type + "'");
                }
            }
        }
    }
    if (j.contains("regularization")) {
        const auto& r = j.at("regularization");
        if (r.contains("epsilon")) cfg.epsilon = r.at("epsilon").get<double>();
        if (r.contains("delta")) cfg.delta = r.at("delta").get<double>();
    }
    if (j.contains("grids")) {
        const auto& g = j.at("grids");
        if (g.contains("path_steps")) cfg.path_steps = g.at("path_steps").get<std::size_t>();
        if (g.contains("noise_time_count"))
            cfg.noise_time_count = g.at("noise_time_count").get<std::size_t>();
        if (g.contains("box_lo")) cfg.box_lo = json_doubles(g.at("box_lo"));
        if (g.contains("box_hi")) cfg.box_hi = json_doubles(g.at("box_hi"));
        if (g.contains("space_counts")) cfg.space_counts = json_sizes(g.at("space_counts"));
        if (g.contains("eta_cutoff")) cfg.eta_cutoff = g.at("eta_cutoff").get<double>();
        if (g.contains("eta_count")) cfg.eta_count = g.at("eta_count").get<std::size_t>();
        if (g.contains("xi_cutoffs")) cfg.xi_cutoffs = json_doubles(g.at("xi_cutoffs"));
        if (g.contains("xi_counts")) cfg.xi_counts = json_sizes(g.at("xi_counts"));
    }
    if (j.contains("measure")) {
        const auto& m = j.at("measure");
        cfg.measure_kind = m.value("type", std::string("unit"));
        if (m.contains("atoms")) {
            cfg.atoms.clear();
            for (const auto& a : m.at("atoms"))
                cfg.atoms.push_back({json_doubles(a.at("y")), a.at("w").get<double>()});
        }
    }
    if (j.contains("run")) {
        const auto& r = j.at("run");
        if (r.contains("t")) cfg.t = r.at("t").get<double>();
        if (r.contains("theta")) cfg.theta = r.at("theta").get<double>();
        if (r.contains("radii")) cfg.radii = json_doubles(r.at("radii"));
        if (r.contains("n_paths")) cfg.n_paths = r.at("n_paths").get<std::size_t>();
        if (r.contains("n_samples")) cfg.n_samples = r.at("n_samples").get<std::size_t>();
        if (r.contains("seed")) cfg.seed = r.at("seed").get<std::uint64_t>();
        if (r.contains("grid_density")) cfg.grid_density = r.at("grid_density").get<double>();
        if (r.contains("fit_drop_smallest"))
            cfg.fit_drop_smallest = r.at("fit_drop_smallest").get<std::size_t>();
        if (r.contains("annulus_inner_fraction"))
            cfg.annulus_inner_fraction = r.at("annulus_inner_fraction").get<double>();
    }
    if (j.contains("variational")) {
        const auto& v = j.at("variational");
        if (v.contains("slices")) cfg.var_slices = v.at("slices").get<std::size_t>();
        if (v.contains("points")) cfg.var_points = v.at("points").get<std::size_t>();
        if (v.contains("extent")) cfg.var_extent = v.at("extent").get<double>();
        if (v.contains("iterations")) cfg.var_iterations = v.at("iterations").get<std::size_t>();
    }
    if (j.contains("localization")) {
        const auto& l = j.at("localization");
        if (l.contains("bandwidths")) cfg.bandwidths = json_doubles(l.at("bandwidths"));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    return from_json(j);
}

Json ExperimentConfig::to_json() const {
    Json time = Json::array();
    for (const auto& p : time_parts) {
        if (p.riesz)
            time.push_back({{"type", "riesz"}, {"c", p.c}, {"alpha0", p.alpha0}});
        else
            time.push_back({{"type", "constant"}, {"c", p.c}});
    }
    Json atom_list = Json::array();
    for (const auto& a : atoms) atom_list.push_back({{"y", a.y}, {"w", a.w}});
    Json j;
    j["kernel"] = {{"cq", cq}, {"alphas", alphas}, {"time", time}};
    j["regularization"] = {{"epsilon", epsilon}, {"delta", delta}};
    j["grids"] = {{"path_steps", path_steps},
                  {"noise_time_count", noise_time_count},
                  {"box_lo", box_lo},
                  {"box_hi", box_hi},
                  {"space_counts", space_counts},
                  {"eta_cutoff", eta_cutoff},
                  {"eta_count", eta_count},
                  {"xi_cutoffs", xi_cutoffs},
                  {"xi_counts", xi_counts}};
    j["measure"] = {{"type", measure_kind}, {"atoms", atom_list}};
    j["run"] = {{"t", t},
                {"theta", theta},
                {"radii", radii},
                {"n_paths", n_paths},
                {"n_samples", n_samples},
                {"seed", seed},
                {"grid_density", grid_density},
                {"fit_drop_smallest", fit_drop_smallest},
                {"annulus_inner_fraction", annulus_inner_fraction}};
    j["variational"] = {{"slices", var_slices},
                        {"points", var_points},
                        {"extent", var_extent},
                        {"iterations", var_iterations}};
    j["localization"] = {{"bandwidths", bandwidths}};
    return j;
}

std::string ExperimentConfig::canonical_dump() const { return to_json().dump(); }

std::uint64_t ExperimentConfig::config_hash() const {
    // FNV-1a 64 over the canonical dump.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void ExperimentConfig::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("regularization.epsilon must be positive");
    if (delta < 0.0) throw ConfigError("regularization.delta must be nonnegative");
    if (!(t > 0.0)) throw ConfigError("run.t must be positive");
    if (path_steps < 2) throw ConfigError("grids.path_steps must be at least 2");
    if (noise_time_count < 2) throw ConfigError("grids.noise_time_count must be at least 2");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw ConfigError("run.radii must be strictly increasing");
    if (!(grid_density > 0.0)) throw ConfigError("run.grid_density must be positive");
    if (measure_kind != "unit" && measure_kind != "atoms" && measure_kind != "log_growth")
        throw ConfigError("measure.type must be unit, atoms or log_growth");
    if (measure_kind == "atoms" && atoms.empty())
        throw ConfigError("measure.atoms must be nonempty for atom measures");
    for (double b : bandwidths)
        if (!(b > 1.0)) throw ConfigError("localization.bandwidths must exceed 1");
    // constructor validations for the kernel pieces
    (void)covariance();
}

PairedCovariance ExperimentConfig::covariance() const {
    return PairedCovariance(SpaceSpectralDensity(cq, alphas), TimeKernel::sum(time_parts));
}

InitialMeasure ExperimentConfig::measure() const {
    if (measure_kind == "unit") return InitialMeasure::unit_constant(dim());
    if (measure_kind == "log_growth") return InitialMeasure::log_growth(dim());
    return InitialMeasure::atoms(atoms);
}

SpaceTimeGrid ExperimentConfig::noise_grid(double max_radius) const {
    std::vector<double> lo = box_lo, hi = box_hi;
    if (lo.empty()) {
        double margin = 8.0 * std::sqrt(t) + 2.0;
        double atom_extent = 0.0;
        for (const auto& a : atoms)
            for (double c : a.y) atom_extent = std::max(atom_extent, std::abs(c));
        double half = max_radius + atom_extent + margin;
        lo.assign(dim(), -half);
        hi.assign(dim(), half);
    }
    std::vector<std::size_t> counts = space_counts;
    if (counts.empty()) {
        for (std::size_t jdx = 0; jdx < dim(); ++jdx) {
            double span = hi[jdx] - lo[jdx];
            auto c = static_cast<std::size_t>(std::ceil(span / 0.125)) + 1;
            counts.push_back(std::min<std::size_t>(std::max<std::size_t>(c, 17), 8193));
        }
    }
    return SpaceTimeGrid(t, noise_time_count, std::move(lo), std::move(hi), std::move(counts));
}

FrequencyGrid ExperimentConfig::frequency_grid(const SpaceTimeGrid& grid) const {
    if (eta_cutoff > 0.0 && !xi_cutoffs.empty()) {
        return FrequencyGrid(eta_cutoff, eta_count == 0 ? 64 : eta_count, xi_cutoffs,
                             xi_counts.empty() ? std::vector<std::size_t>(dim(), 512) : xi_counts);
    }
    return FrequencyGrid::suggest(covariance(), epsilon, delta_effective(), grid);
}

Json version_block() {
    return Json{{"project", kProjectVersion},
                {"modules",
                 Json{{"spectral_kernels", 1},
                      {"path_sampling", 1},
                      {"field_synthesis", 1},
                      {"initial_data", 1},
                      {"feynman_kac", 1},
                      {"variational", 1},
                      {"localization", 1},
                      {"experiments", 1}}}};
}

Json FitReport::to_json(const ExperimentConfig& cfg) const {
    Json j;
    j["experiment"] = experiment;
    j["abscissa"] = abscissa;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["slope_se"] = fit.slope_se;
    j["predicted"] = predicted;
    j["relative_deviation"] = relative_deviation;
    j["radii"] = radii;
    j["xs"] = xs;
    j["ys"] = ys;
    if (!extra.is_null()) j["extra"] = extra;
    j["config_hash"] = cfg.config_hash();
    j["versions"] = version_block();
    return j;
}

namespace {

// The classifier gate needs radii spanning three decades; extend the
// experiment radii geometrically for classification only.
std::vector<double> classifier_radii(const std::vector<double>& radii) {
    double lo = std::max(radii.front(), 2.0);
    double hi = std::max(radii.back(), lo * 1100.0);
    std::vector<double> out;
    for (double r = lo; r <= hi * 1.0001; r *= 2.0) out.push_back(r);
    while (out.size() < 4) out.push_back(out.back() * 2.0);
    if (out.back() / out.front() < 1e3) out.push_back(out.front() * 1100.0);
    return out;
}

}  // namespace

GrowthResult run_growth_experiment(const ExperimentConfig& cfg) {
    const auto u0 = cfg.measure();
    const auto cov = cfg.covariance();
    const double alpha = cov.space.alpha_total;

    auto diag = classify_case(u0, cfg.t, alpha, classifier_radii(cfg.radii));
    if (diag.verdict != CaseVerdict::CaseI)
        throw DomainError("run_growth_experiment: measure does not classify as case (I): " +
                          diag.note);

    SpaceTimeGrid grid = cfg.noise_grid(cfg.radii.back());
    FrequencyGrid freq = cfg.frequency_grid(grid);
    auto noise = synthesize_noise(derive_seed(cfg.seed, {0x67726f77ULL}), cov, cfg.epsilon,
                                  cfg.delta_effective(), grid, freq, cfg.workers);
    if (noise.captured_fraction < 0.9)
        throw DomainError("run_growth_experiment: captured spectral mass below 90%");

    auto profile = spatial_max_profile(noise, cfg.t, cfg.theta, u0, cfg.radii, cfg.grid_density,
                                       cfg.n_paths, derive_seed(cfg.seed, {0x706174687aULL}),
                                       cfg.path_steps, cfg.workers, cfg.annulus_inner_fraction);

    const double expo = 2.0 / (4.0 - alpha);
    std::vector<double> xs, ys, used_radii;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i < cfg.fit_drop_smallest) continue;  // pre-asymptotic radii
        used_radii.push_back(profile[i].radius);
        xs.push_back(std::pow(std::log(profile[i].radius), expo));
        ys.push_back(profile[i].log_max);
    }
    if (xs.size() < 3)
        throw DomainError("run_growth_experiment: not enough radii left after the drop window");

    GrowthResult out;
    out.profile = profile;
    out.captured_fraction = noise.captured_fraction;

    // kappa from the solver's energy at theta = 1 (the constant's own theta
    // dependence is explicit in the closed form).
    VariationalProblem prob(cfg.t, 1.0, cov, cfg.dim(), cfg.var_slices, cfg.var_points,
                            cfg.var_extent);
    SolverSchedule schedule;
    schedule.max_iterations = cfg.var_iterations;
    out.energy = prob.solve(schedule).value;
    out.kappa_value = kappa(cfg.theta, cfg.t, alpha, cfg.dim(), out.energy);

    out.report.experiment = "growth";
    out.report.abscissa = "(log R)^{2/(4-alpha)}";
    out.report.fit = slope_fit(xs, ys);
    out.report.predicted = out.kappa_value;
    out.report.relative_deviation = out.kappa_value != 0.0
                                        ? (out.report.fit.slope - out.kappa_value) / out.kappa_value
                                        : 0.0;
    out.report.radii = used_radii;
    out.report.xs = xs;
    out.report.ys = ys;
    out.report.extra = Json{{"energy", out.energy},
                            {"kappa", out.kappa_value},
                            {"captured_fraction", out.captured_fraction},
                            {"classifier_note", diag.note}};
    return out;
}

DecayResult run_decay_experiment(const ExperimentConfig& cfg) {
    const auto u0 = cfg.measure();
    const auto cov = cfg.covariance();
    const double alpha = cov.space.alpha_total;

    auto diag = classify_case(u0, cfg.t, alpha, classifier_radii(cfg.radii));
    if (diag.verdict != CaseVerdict::CaseII)
        throw DomainError("run_decay_experiment: measure does not classify as case (II): " +
                          diag.note);

    const double r_out = cfg.radii.back();
    SpaceTimeGrid grid = cfg.noise_grid(r_out);
    FrequencyGrid freq = cfg.frequency_grid(grid);
    DecayResult out;
    std::vector<LatticeEstimate> est;

    if (cfg.theta == 0.0) {
        // Degenerate run: the estimator is the heat convolution itself and
        // needs no field.
        std::vector<std::vector<double>> points;
        const double h = 1.0 / cfg.grid_density;
        if (cfg.dim() != 1) throw DomainError("run_decay_experiment: lattice scan supports d = 1");
        points.push_back({0.0});
        for (double v = h; v <= r_out + 1e-12; v += h) {
            points.push_back({v});
            points.push_back({-v});
        }
        for (const auto& p : points)
            est.push_back({p, log_heat_convolve(u0, cfg.t, p), 0.0, 0.0});
        out.captured_fraction = 1.0;
    } else {
        auto noise = synthesize_noise(derive_seed(cfg.seed, {0x6465636179ULL}), cov, cfg.epsilon,
                                      cfg.delta_effective(), grid, freq, cfg.workers);
        if (noise.captured_fraction < 0.9)
            throw DomainError("run_decay_experiment: captured spectral mass below 90%");
        out.captured_fraction = noise.captured_fraction;
        std::vector<std::vector<double>> points;
        const double h = 1.0 / cfg.grid_density;
        if (cfg.dim() != 1) throw DomainError("run_decay_experiment: lattice scan supports d = 1");
        points.push_back({0.0});
        for (double v = h; v <= r_out + 1e-12; v += h) {
            points.push_back({v});
            points.push_back({-v});
        }
        est = fk_lattice(noise, cfg.t, points, u0, cfg.theta, cfg.n_paths,
                         derive_seed(cfg.seed, {0x706174687aULL}), cfg.path_steps, cfg.workers);
    }

    // outer maxima over the finite lattice: max over |x| >= R
    std::vector<double> xs_nu, ys, xs_r2;
    for (double R : cfg.radii) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& e : est) {
            double r = std::abs(e.x[0]);
            if (r >= R * (1.0 - 1e-12)) best = std::max(best, e.log_value);
        }
        out.radii.push_back(R);
        out.log_max.push_back(best);
        out.nu_values.push_back(nu(u0, cfg.t, R));
        xs_nu.push_back(out.nu_values.back());
        ys.push_back(best);
        xs_r2.push_back(R * R);
    }

    out.vs_nu.experiment = "decay";
    out.vs_nu.abscissa = "nu(R)";
    out.vs_nu.fit = slope_fit(xs_nu, ys);
    out.vs_nu.predicted = -1.0;
    out.vs_nu.relative_deviation = std::abs(out.vs_nu.fit.slope + 1.0);
    out.vs_nu.radii = out.radii;
    out.vs_nu.xs = xs_nu;
    out.vs_nu.ys = ys;
    out.vs_nu.extra = Json{{"captured_fraction", out.captured_fraction},
                           {"classifier_note", diag.note}};

    // single atom at the origin: the R^2 regression against -1/(2t)
    bool dirac_like = u0.kind() == InitialMeasure::Kind::Atoms && u0.atom_list().size() == 1;
    if (dirac_like)
        for (double c : u0.atom_list().front().y) dirac_like = dirac_like && c == 0.0;
    if (dirac_like) {
        FitReport r2;
        r2.experiment = "decay";
        r2.abscissa = "R^2";
        r2.fit = slope_fit(xs_r2, ys);
        r2.predicted = -0.5 / cfg.t;
        r2.relative_deviation = std::abs((r2.fit.slope - r2.predicted) / r2.predicted);
        r2.radii = out.radii;
        r2.xs = xs_r2;
        r2.ys = ys;
        out.vs_r2 = std::move(r2);
    }
    return out;
}

std::size_t ValidationLedger::failures() const {
    std::size_t n = 0;
    for (const auto& e : entries)
        if (!e.pass) ++n;
    return n;
}

Json ValidationLedger::to_json(const ExperimentConfig& cfg) const {
    Json arr = Json::array();
    for (const auto& e : entries)
        arr.push_back({{"name", e.name},
                       {"measured", e.measured},
                       {"threshold", e.threshold},
                       {"pass", e.pass},
                       {"detail", e.detail}});
    return Json{{"checks", arr},
                {"failures", failures()},
                {"config_hash", cfg.config_hash()},
                {"versions", version_block()}};
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << "\n";
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << content;
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void dump_noise_binary(const std::string& path, const NoiseRealization& nr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out.write("FKNZ", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(nr.grid.dim()));
    put<double>(out, nr.grid.t);
    put<std::uint64_t>(out, nr.grid.time_count);
    for (std::size_t j = 0; j < nr.grid.dim(); ++j) {
        put<double>(out, nr.grid.lo[j]);
        put<double>(out, nr.grid.hi[j]);
        put<std::uint64_t>(out, nr.grid.space_counts[j]);
    }
    put<double>(out, nr.epsilon);
    put<double>(out, nr.delta);
    put<std::uint64_t>(out, nr.seed);
    put<double>(out, nr.captured_fraction);
    put<std::uint64_t>(out, nr.values.size());
    out.write(reinterpret_cast<const char*>(nr.values.data()),
              static_cast<std::streamsize>(nr.values.size() * sizeof(double)));
}

NoiseRealization load_noise_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open noise file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "FKNZ", 4) != 0) throw Error("not a noise dump: " + path);
    auto version = get<std::uint32_t>(in);
    if (version != 1) throw Error("unsupported noise dump version");
    auto d = get<std::uint32_t>(in);
    double t = get<double>(in);
    auto time_count = get<std::uint64_t>(in);
    std::vector<double> lo(d), hi(d);
    std::vector<std::size_t> counts(d);
    for (std::uint32_t j = 0; j < d; ++j) {
        lo[j] = get<double>(in);
        hi[j] = get<double>(in);
        counts[j] = get<std::uint64_t>(in);
    }
    SpaceTimeGrid grid(t, time_count, std::move(lo), std::move(hi), std::move(counts));
    NoiseRealization nr(grid);
    nr.epsilon = get<double>(in);
    nr.delta = get<double>(in);
    nr.seed = get<std::uint64_t>(in);
    nr.captured_fraction = get<double>(in);
    auto count = get<std::uint64_t>(in);
    nr.values.resize(count);
    in.read(reinterpret_cast<char*>(nr.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw Error("truncated noise dump: " + path);
    return nr;
}


// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

namespace {

struct LedgerBuilder {
    ValidationLedger ledger;

    void add(const std::string& name, double measured, double threshold, bool pass,
             const std::string& detail = "") {
        ledger.entries.push_back({name, measured, threshold, pass, detail});
    }
    // measured must stay below threshold
    void below(const std::string& name, double measured, double threshold,
               const std::string& detail = "") {
        add(name, measured, threshold, measured < threshold, detail);
    }
    void above(const std::string& name, double measured, double threshold,
               const std::string& detail = "") {
        add(name, measured, threshold, measured > threshold, detail);
    }
};

}  // namespace

ValidationLedger run_validation_suite(const ExperimentConfig& cfg) {
    LedgerBuilder lb;
    const auto cov = cfg.covariance();
    const std::size_t d = cfg.dim();
    const std::uint64_t seed = cfg.seed;

    // --- spectral kernels ---------------------------------------------------
    {
        RngStream rng(derive_seed(seed, {1}));
        double worst = 0.0;
        for (int rep = 0; rep < 40; ++rep) {
            int n = 2 + static_cast<int>(rng.next_double() * 6.0);
            std::vector<double> ts(n), cs(n);
            double csq = 0.0;
            for (int i = 0; i < n; ++i) {
                ts[i] = 3.0 * rng.next_double();
                cs[i] = 2.0 * rng.next_normal();
                csq += cs[i] * cs[i];
            }
            double quad = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    quad += cs[i] * cs[j] * cov.time.smoothed(0.05, ts[i] - ts[j]);
            worst = std::min(worst, quad / csq);
        }
        lb.add("spectral.smoothed_kernel_positive_definite", worst, -1e-9, worst >= -1e-9,
               "min quadratic form / sum c^2 over 40 random time sets");
    }
    {
        double worst = 0.0;
        for (double eps_mult : {0.5, 1.0, 2.0}) {
            double eps = cfg.epsilon * eps_mult;
            RegularizedSpaceKernel k(cov.space, eps, 64.0);
            double closed = cov.space.cq;
            for (double a : cov.space.alphas) closed *= std::tgamma(0.5 * a) * std::pow(eps, -0.5 * a);
            std::vector<double> tiny(d, 1e-6);
            double table = k.eval(tiny);
            worst = std::max(worst, std::abs(table - closed) / closed);
        }
        lb.below("spectral.gamma_eps_zero_closed_form", worst, 1e-4,
                 "table value near zero vs C_q prod Gamma(alpha_j/2) eps^{-alpha/2}");
    }
    {
        RegularizedSpaceKernel coarse(cov.space, cfg.epsilon, 64.0, 512);
        RegularizedSpaceKernel fine(cov.space, cfg.epsilon, 64.0, 1024);
        double scale = coarse.at_zero();
        double worst = 0.0;
        for (double x : {1e-4, 0.07, 0.9, 1.7, 14.0, 50.0}) {
            std::vector<double> p(d, x);
            double c = coarse.eval(p), f = fine.eval(p);
            worst = std::max(worst, std::abs(c - f) / (std::abs(f) + 1e-6 * scale));
        }
        lb.below("spectral.table_refinement", worst, 1e-5,
                 "relative change halving the abscissa spacing");
    }
    {
        bool ok = true;
        for (double alpha : {1.1, 1.3, 1.6, 1.9}) {
            for (double a0 : {0.05, 0.2, 0.4, 0.6}) {
                bool should_accept = alpha < 2.0 * (1.0 - a0);
                bool accepted = true;
                try {
                    PairedCovariance probe(SpaceSpectralDensity(1.0, {alpha}),
                                           TimeKernel::riesz(1.0, a0));
                } catch (const DomainError&) {
                    accepted = false;
                }
                ok = ok && (accepted == should_accept);
            }
        }
        lb.add("spectral.pairing_threshold_pure_function", ok ? 1.0 : 0.0, 1.0, ok,
               "acceptance matches alpha < 2(1 - alpha0) on a parameter grid");
    }

    // --- path sampling --------------------------------------------------------
    {
        PathGrid grid(cfg.t, 32);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            auto br = bridge_from_bm(sample_bm(derive_seed(seed, {2, static_cast<std::uint64_t>(i)}),
                                               grid, std::vector<double>(d, 0.0)));
            for (std::size_t j = 0; j < d; ++j) {
                worst = std::max(worst, std::abs(br.at(0)[j]));
                worst = std::max(worst, std::abs(br.at(32)[j]));
            }
        }
        lb.add("paths.bridge_endpoints_exact", worst, 0.0, worst == 0.0, "max endpoint magnitude");
    }
    {
        PathGrid grid(1.0, 16);
        const int n = 20000;
        std::vector<std::size_t> nodes{4, 8, 12};
        double worst_z = 0.0;
        std::vector<std::vector<double>> acc(nodes.size(), std::vector<double>(nodes.size(), 0.0));
        for (int i = 0; i < n; ++i) {
            auto br = bridge_from_bm(sample_bm(derive_seed(seed, {3, static_cast<std::uint64_t>(i)}),
                                               grid, {0.0}));
            for (std::size_t a = 0; a < nodes.size(); ++a)
                for (std::size_t b = 0; b < nodes.size(); ++b)
                    acc[a][b] += br.at(nodes[a])[0] * br.at(nodes[b])[0];
        }
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            for (std::size_t b = 0; b < nodes.size(); ++b) {
                double s = grid.time_at(nodes[a]), r = grid.time_at(nodes[b]);
                double expected = std::min(s, r) - s * r;
                double got = acc[a][b] / n;
                double se = std::sqrt((expected * expected + 0.08) / n);
                worst_z = std::max(worst_z, std::abs(got - expected) / se);
            }
        }
        lb.below("paths.bridge_covariance_z", worst_z, 4.0,
                 "max |z| of empirical bridge covariance vs s^r - s r / t");
    }
    {
        PathGrid grid(cfg.t, 64);
        auto a = sample_bm(derive_seed(seed, {4}), grid, std::vector<double>(d, 0.0));
        auto b = sample_bm(derive_seed(seed, {4}), grid, std::vector<double>(d, 0.0));
        lb.add("paths.determinism_bitwise", a.positions == b.positions ? 1.0 : 0.0, 1.0,
               a.positions == b.positions, "same seed gives bitwise identical paths");
    }

    // --- field synthesis -------------------------------------------------------
    {
        SpaceTimeGrid grid(cfg.t, 5, std::vector<double>(d, -3.0), std::vector<double>(d, 3.0),
                           std::vector<std::size_t>(d, 49));
        FrequencyGrid freq = FrequencyGrid::suggest(cov, cfg.epsilon, cfg.delta_effective(), grid);
        auto n1 = synthesize_noise(derive_seed(seed, {5}), cov, cfg.epsilon, cfg.delta_effective(),
                                   grid, freq, 1);
        auto n2 = synthesize_noise(derive_seed(seed, {5}), cov, cfg.epsilon, cfg.delta_effective(),
                                   grid, freq, 2);
        lb.add("field.worker_count_invariance", n1.values == n2.values ? 1.0 : 0.0, 1.0,
               n1.values == n2.values, "1 vs 2 workers, bitwise");
        lb.above("field.captured_mass_fraction", n1.captured_fraction, 0.9,
                 "suggested frequency grid captures the mollified mass");

        const int n_real = 100;
        std::vector<NoiseRealization> rs;
        rs.reserve(n_real);
        for (int i = 0; i < n_real; ++i)
            rs.push_back(synthesize_noise(derive_seed(seed, {6, static_cast<std::uint64_t>(i)}),
                                          cov, cfg.epsilon, cfg.delta_effective(), grid, freq, 1));
        double worst_z = 0.0;
        std::vector<double> zero_lag(d, 0.0);
        for (int lag_case = 0; lag_case < 3; ++lag_case) {
            double tl = lag_case == 1 ? grid.dt() : 0.0;
            std::vector<double> sl(d, 0.0);
            if (lag_case == 2) sl[0] = 2.0 * grid.dx(0);
            auto [est, se] = empirical_covariance(rs, tl, sl);
            double target = truncated_covariance(cov, cfg.epsilon, cfg.delta_effective(), freq, tl, sl);
            worst_z = std::max(worst_z, std::abs(est - target) / se);
        }
        lb.below("field.covariance_vs_truncated_oracle_z", worst_z, 4.0,
                 "max |z| across lags, 100 realizations");

        // skew symmetry
        double m1 = 0.0, m2 = 0.0, m3 = 0.0;
        std::size_t count = 0;
        for (const auto& r : rs)
            for (std::size_t m = 0; m < grid.space_nodes(); ++m) {
                double v = r.value_at(0, m);
                m1 += v; m2 += v * v; m3 += v * v * v;
                ++count;
            }
        m1 /= count;
        m2 = m2 / count - m1 * m1;
        m3 = m3 / count - 3.0 * m1 * m2 - m1 * m1 * m1;
        double skew_z = std::abs(m3 / std::pow(m2, 1.5)) / std::sqrt(6.0 / n_real);
        lb.below("field.sign_symmetry_skew_z", skew_z, 4.0, "marginal skewness z-score");
    }

    // --- initial data -----------------------------------------------------------
    {
        const auto u0 = cfg.measure();
        RngStream rng(derive_seed(seed, {7}));
        double min_v = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10; ++i) {
            std::vector<double> x(d);
            for (auto& c : x) c = 4.0 * rng.next_normal();
            min_v = std::min(min_v, heat_convolve(u0, cfg.t, x));
        }
        lb.above("initial.heat_convolve_positive", min_v, 0.0, "min over random points");

        auto atoms_m = InitialMeasure::atoms({{std::vector<double>(d, 0.2), 0.7},
                                              {std::vector<double>(d, -0.6), 0.3}});
        double s = 0.4, tt = 0.9;
        auto smoothed = InitialMeasure::density(
            d,
            [&](const double* y) {
                return heat_convolve(atoms_m, s, std::vector<double>(y, y + d));
            },
            1.0);
        double worst = 0.0;
        for (int i = 0; i < 4; ++i) {
            std::vector<double> x(d);
            for (auto& c : x) c = 2.0 * rng.next_normal();
            double direct = heat_convolve(atoms_m, tt + s, x);
            double nested = heat_convolve(smoothed, tt, x);
            worst = std::max(worst, std::abs(nested - direct) / direct);
        }
        lb.below("initial.semigroup_identity", worst, 1e-6, "p_{t+s}*u0 vs p_t*(p_s*u0)");

        auto unit = InitialMeasure::unit_constant(d);
        double nu_unit = std::max(nu(unit, cfg.t, 2.0), nu_k(unit, cfg.t, 2.0, 2.0));
        lb.add("initial.nu_clamp_unit", nu_unit, 0.0, nu_unit == 0.0,
               "unit data clamps nu to zero");
    }

    // --- feynman-kac -------------------------------------------------------------
    {
        FkContext ctx(cov, cfg.epsilon, 24, cfg.workers, 128.0);
        auto dirac = InitialMeasure::atoms({{std::vector<double>(d, 0.0), 1.0}});
        std::vector<double> x(d, 0.3);
        auto m0 = moment_mc(ctx, 3, cfg.t, x, dirac, 0.0, 4, derive_seed(seed, {8}));
        double expected = 3.0 * log_heat_convolve(dirac, cfg.t, x);
        lb.below("fk.theta_zero_exact", std::abs(m0.log_value - expected), 1e-12,
                 "zero-theta moment equals the heat convolution power");

        // quadrature refinement ratio on nested grids
        PathGrid fine(cfg.t, 256);
        double num = 0.0, den = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            auto a = sample_bridge(derive_seed(seed, {9, static_cast<std::uint64_t>(rep), 1}), fine,
                                   BridgeSpec(cfg.t, std::vector<double>(d, 0.0),
                                              std::vector<double>(d, 0.0)));
            auto b = sample_bridge(derive_seed(seed, {9, static_cast<std::uint64_t>(rep), 2}), fine,
                                   BridgeSpec(cfg.t, std::vector<double>(d, 0.0),
                                              std::vector<double>(d, 0.0)));
            auto zero = PairShift::zero(d);
            double vL = pair_interaction(a.restrict_to(8), b.restrict_to(8), zero, cov.time, ctx.kernel);
            double v2L = pair_interaction(a.restrict_to(4), b.restrict_to(4), zero, cov.time, ctx.kernel);
            double v4L = pair_interaction(a.restrict_to(2), b.restrict_to(2), zero, cov.time, ctx.kernel);
            num += std::abs(v4L - v2L);
            den += std::abs(v2L - vL);
        }
        double ratio = num / den;
        lb.add("fk.pair_interaction_refinement_ratio", ratio, 0.9, ratio > 0.2 && ratio < 0.9,
               "successive trapezoid differences, nested paths");

        auto unit = InitialMeasure::unit_constant(d);
        double theta = 0.4;
        double prev = -1e9, prev_se = 0.0, worst_margin = 1e9;
        for (int n = 1; n <= 4; ++n) {
            auto est = moment_mc(ctx, n, cfg.t, std::vector<double>(d, 0.0), unit, theta, 1500,
                                 derive_seed(seed, {10, static_cast<std::uint64_t>(n)}));
            double norm = est.log_value / n;
            double se = est.rel_se / n;
            if (n > 1)
                worst_margin =
                    std::min(worst_margin,
                             (norm - prev) / std::sqrt(se * se + prev_se * prev_se + 1e-12));
            prev = norm;
            prev_se = se;
        }
        lb.above("fk.moment_jensen_monotone_z", worst_margin, -3.0,
                 "worst normalized-moment increment in z units");

        auto atom = InitialMeasure::atoms({{std::vector<double>(d, 1.5), 1.0}});
        auto shifted = moment_mc(ctx, 2, cfg.t, std::vector<double>(d, 0.0), atom, theta, 1500,
                                 derive_seed(seed, {11}));
        auto unshifted = moment_mc(ctx, 2, cfg.t, std::vector<double>(d, 0.0), unit, theta, 1500,
                                   derive_seed(seed, {12}));
        double bound = unshifted.log_value + 2.0 * log_heat_convolve(atom, cfg.t, std::vector<double>(d, 0.0));
        double z = (bound - shifted.log_value) / (shifted.rel_se + unshifted.rel_se + 1e-12);
        lb.above("fk.shift_comparison_z", z, -3.0, "unit bound minus shifted moment in z units");

        auto se_a = moment_mc(ctx, 2, cfg.t, std::vector<double>(d, 0.0), unit, theta, 1000,
                              derive_seed(seed, {13}));
        auto se_b = moment_mc(ctx, 2, cfg.t, std::vector<double>(d, 0.0), unit, theta, 4000,
                              derive_seed(seed, {13}));
        double shrink = se_b.rel_se / se_a.rel_se;
        lb.add("fk.se_scaling_sqrt_n", shrink, 0.75, shrink > 0.3 && shrink < 0.75,
               "rel-SE ratio quadrupling the sample count (expect ~0.5)");

        auto gc = girsanov_bridge_check(ctx, 1, cfg.t, 0.5, 1500, derive_seed(seed, {14}));
        double margin = gc.log_free_half + gc.half_density_log_bound - gc.log_bridge_half +
                        3.0 * (gc.bridge_half_rel_se + gc.free_half_rel_se);
        lb.above("fk.girsanov_half_horizon_bound", margin, 0.0,
                 "change-of-measure bound on the half horizon, 3-SE slack");
    }

    // --- variational ---------------------------------------------------------------
    {
        std::size_t vd = std::min<std::size_t>(d, 2);
        PairedCovariance vcov = cov;
        VariationalProblem prob(cfg.t, 1.0, vcov, vd, 5, 65, cfg.var_extent);
        SolverSchedule schedule;
        schedule.max_iterations = 120;
        auto res = prob.solve(schedule);
        lb.below("variational.feasibility", res.profile.normalization_error(), 1e-10,
                 "slice L2 mass after projection");
        bool monotone = true;
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            monotone = monotone && res.trace[i] >= res.trace[i - 1];
        lb.add("variational.trace_nondecreasing", monotone ? 1.0 : 0.0, 1.0, monotone,
               "accepted objective values only ascend");

        ProfileGrid g = res.profile;
        std::vector<double> grad;
        prob.gradient(g, grad);
        RngStream rng(derive_seed(seed, {15}));
        double worst = 0.0;
        const double step = 1e-5;
        for (int rep = 0; rep < 12; ++rep) {
            std::size_t idx = static_cast<std::size_t>(rng.next_double() * g.values.size());
            ProfileGrid gp = g, gm = g;
            gp.values[idx] += step;
            gm.values[idx] -= step;
            double fd = (prob.objective_raw(gp) - prob.objective_raw(gm)) / (2.0 * step);
            double scale = std::max({std::abs(fd), std::abs(grad[idx]), 1e-6});
            worst = std::max(worst, std::abs(fd - grad[idx]) / scale);
        }
        lb.below("variational.gradient_vs_fd", worst, 1e-4, "central differences, 12 components");

        ProfileGrid flipped = g;
        for (double& v : flipped.values) v = -v;
        lb.below("variational.sign_flip_invariance",
                 std::abs(prob.objective(flipped) - res.value), 1e-12, "objective depends on g^2");

        // joint refinement h -> h/2, A -> 2A: increments shrink toward a limit
        double e0 = res.value;
        VariationalProblem p1(cfg.t, 1.0, vcov, vd, 5, 257, 2.0 * cfg.var_extent);
        VariationalProblem p2(cfg.t, 1.0, vcov, vd, 5, 1025, 4.0 * cfg.var_extent);
        double e1 = p1.solve(schedule).value;
        double e2 = p2.solve(schedule).value;
        bool refinement_ok = std::abs(e2 - e1) <= std::abs(e1 - e0) + 1e-9;
        lb.add("variational.refinement_increments", std::abs(e2 - e1), std::abs(e1 - e0) + 1e-9,
               refinement_ok, "joint grid refinements converge with shrinking increments");
    }

    // --- localization ----------------------------------------------------------------
    {
        lb.add("localization.fejer_hat_support",
               fejer_hat(1.0) == 0.0 && fejer_hat(1.5) == 0.0 && fejer_hat(0.999) > 0.0 ? 1.0 : 0.0,
               1.0, fejer_hat(1.0) == 0.0 && fejer_hat(1.5) == 0.0 && fejer_hat(0.999) > 0.0,
               "triangle window support is exactly [-1,1]");
        if (d == 1) {
            double prev = std::numeric_limits<double>::infinity();
            bool decreasing = true;
            for (double b : {2.0, 8.0, 32.0}) {
                LocalizedDensity loc(cov.space, LocalizerSpec(b));
                double e = localization_error_spectrum(cov, loc, cfg.t);
                decreasing = decreasing && e < prev;
                prev = e;
            }
            lb.add("localization.error_spectrum_monotone", decreasing ? 1.0 : 0.0, 1.0, decreasing,
                   "spectral gap decreases over b in {2, 8, 32}");

            LocalizedDensity loc(cov.space, LocalizerSpec(8.0));
            auto study = localized_fk_study(cov, loc, cfg.epsilon, cfg.t,
                                            std::vector<double>(d, 0.0), 0.5, 24, 800,
                                            derive_seed(seed, {16}), cfg.workers);
            double cs = 0.5 * (study.log_m2_full + study.log_m2_local) - study.log_m2_cross;
            lb.above("localization.cross_moment_cauchy_schwarz", cs, -1e-6,
                     "log E u u_b below the geometric mean of the diagonal moments");
            lb.above("localization.fk_gap_positive", study.gap, 0.0, "mean-square gap positive");
        }
    }

    // --- additional spectral / field invariants -------------------------------------
    {
        RegularizedSpaceKernel wide(cov.space, 2.0 * cfg.epsilon, 64.0);
        RegularizedSpaceKernel narrow(cov.space, cfg.epsilon, 64.0);
        lb.add("spectral.gamma_eps_zero_monotone_in_eps", wide.at_zero(), narrow.at_zero(),
               wide.at_zero() < narrow.at_zero(), "gamma_eps(0) decreases in eps");
    }
    {
        double prev = 0.0;
        bool monotone = true;
        for (double grow : {0.5, 1.0, 2.0}) {
            FrequencyGrid freq(40.0 * grow, 128, std::vector<double>(d, 8.0 * grow),
                               std::vector<std::size_t>(d, 128));
            double frac = captured_mass_fraction(cov, cfg.epsilon, cfg.delta_effective(), freq);
            monotone = monotone && frac >= prev - 1e-12;
            prev = frac;
        }
        lb.add("field.truncated_mass_monotone_in_cutoffs", prev, 1.0, monotone && prev <= 1.0 + 1e-9,
               "captured fraction nondecreasing toward one");
    }
    {
        // restriction of fine paths has the coarse marginal law (KS at s = 1/2)
        PathGrid fine(1.0, 128);
        PathGrid coarse(1.0, 64);
        std::vector<double> restricted, direct;
        for (int i = 0; i < 2000; ++i) {
            auto pf = sample_bm(derive_seed(seed, {17, static_cast<std::uint64_t>(i)}), fine, {0.0});
            restricted.push_back(pf.restrict_to(2).at(32)[0]);
            auto pc = sample_bm(derive_seed(seed, {18, static_cast<std::uint64_t>(i)}), coarse, {0.0});
            direct.push_back(pc.at(32)[0]);
        }
        std::sort(restricted.begin(), restricted.end());
        std::sort(direct.begin(), direct.end());
        std::size_t i = 0, j = 0;
        double ks = 0.0;
        while (i < restricted.size() && j < direct.size()) {
            if (restricted[i] <= direct[j]) ++i; else ++j;
            ks = std::max(ks, std::abs(static_cast<double>(i) / restricted.size() -
                                       static_cast<double>(j) / direct.size()));
        }
        double ne = std::sqrt(restricted.size() * direct.size() /
                              static_cast<double>(restricted.size() + direct.size()));
        double lambda = (ne + 0.12 + 0.11 / ne) * ks;
        double p = 0.0;
        for (int k = 1; k <= 100; ++k)
            p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        p = std::min(std::max(p, 0.0), 1.0);
        lb.above("paths.grid_refinement_ks_p", p, 0.01,
                 "restricted fine paths vs direct coarse sampling, KS p-value");
    }
    {
        std::size_t vd = std::min<std::size_t>(d, 2);
        VariationalProblem prob(cfg.t, 1.0, cov, vd, 4, 65, cfg.var_extent);
        ProfileGrid g = prob.initial_profile();
        double base = prob.objective(g);
        ProfileGrid shifted = g;
        std::size_t n = g.points;
        for (std::size_t i = 0; i < g.slices; ++i) {
            if (vd == 1) {
                for (std::size_t jx = 0; jx < n; ++jx)
                    shifted.slice(i)[jx] = g.slice(i)[(jx + n - 2) % n];
            } else {
                for (std::size_t a = 0; a < n; ++a)
                    for (std::size_t b = 0; b < n; ++b)
                        shifted.slice(i)[a * n + b] = g.slice(i)[((a + n - 2) % n) * n + b];
            }
        }
        shifted.project();
        lb.below("variational.translation_invariance", std::abs(prob.objective(shifted) - base),
                 1e-8 * std::max(1.0, std::abs(base)),
                 "cyclic two-cell shift of a contained bump");
    }
    if (d == 1) {
        LocalizedDensity loc(cov.space, LocalizerSpec(16.0));
        double q0 = loc.q_b(std::vector<double>(d, 0.0));
        bool finite = std::isfinite(q0) && q0 > 0.0;
        double qlarge = loc.q_b(std::vector<double>(d, 3.0));
        lb.add("localization.q_b_finite_and_positive", q0, 0.0, finite && std::isfinite(qlarge),
               "window smoothing regularizes the vanishing coordinate");
    }

    // --- config gate -------------------------------------------------------------------
    {
        bool rejected = false;
        try {
            Json j = cfg.to_json();
            j["regularization"]["epsilon"] = -0.25;
            ExperimentConfig::from_json(j);
        } catch (const ConfigError&) {
            rejected = true;
        }
        lb.add("config.negative_epsilon_rejected", rejected ? 1.0 : 0.0, 1.0, rejected,
               "corrupted epsilon refused before any run");
    }

    return lb.ledger;
}

}  // namespace fkpam
