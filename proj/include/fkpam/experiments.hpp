#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fkpam/feynman_kac.hpp"
#include "fkpam/initial_data.hpp"
#include "fkpam/localization.hpp"
#include "fkpam/variational.hpp"

namespace fkpam {

using Json = nlohmann::ordered_json;

/// One key-value tree drives every experiment; unset grid fields are derived
/// from the run block. The worker count is runtime-only: it is excluded from
/// the canonical dump and the hash so outputs are byte-identical across
/// worker counts.
struct ExperimentConfig {
    // kernel block
    double cq = 1.0;
    std::vector<double> alphas{1.3};
    std::vector<TimeKernel::Part> time_parts{{1.0, 0.0, false}};

    // regularization
    double epsilon = 0.05;
    double delta = 0.0;  // 0: use t / path_steps

    // grids
    std::size_t path_steps = 64;
    std::size_t noise_time_count = 33;
    std::vector<double> box_lo, box_hi;      // empty: derived from radii
    std::vector<std::size_t> space_counts;   // empty: derived from spacing 0.125
    double eta_cutoff = 0.0;                 // 0: suggested
    std::size_t eta_count = 0;
    std::vector<double> xi_cutoffs;
    std::vector<std::size_t> xi_counts;

    // measure block
    std::string measure_kind = "unit";  // unit | atoms | log_growth
    std::vector<InitialMeasure::Atom> atoms;

    // run block
    double t = 1.0;
    double theta = 1.0;
    std::vector<double> radii{4, 8, 16, 32, 64, 128, 256};
    std::size_t n_paths = 400;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 20240901;
    double grid_density = 2.0;
    std::size_t fit_drop_smallest = 2;
    double annulus_inner_fraction = 0.0;

    // variational block
    std::size_t var_slices = 16;
    std::size_t var_points = 128;
    double var_extent = 0.5;
    std::size_t var_iterations = 400;

    // localization block
    std::vector<double> bandwidths{8, 64, 512};

    // runtime only
    unsigned workers = 1;

    static ExperimentConfig from_json(const Json& j);
    static ExperimentConfig load(const std::string& path);
    Json to_json() const;  // canonical: excludes runtime-only fields
    std::string canonical_dump() const;
    std::uint64_t config_hash() const;

    void validate() const;
    std::size_t dim() const { return alphas.size(); }
    double delta_effective() const { return delta > 0.0 ? delta : t / static_cast<double>(path_steps); }
    PairedCovariance covariance() const;
    InitialMeasure measure() const;
    SpaceTimeGrid noise_grid(double max_radius) const;
    FrequencyGrid frequency_grid(const SpaceTimeGrid& grid) const;
};

/// Version stamps embedded in every emitted JSON document.
Json version_block();

struct FitReport {
    std::string experiment;
    std::string abscissa;
    LineFit fit{};
    double predicted = 0.0;
    double relative_deviation = 0.0;
    std::vector<double> radii, xs, ys;
    Json extra;

    Json to_json(const ExperimentConfig& cfg) const;
};

struct GrowthResult {
    FitReport report;
    std::vector<MaxProfilePoint> profile;
    double energy = 0.0;
    double kappa_value = 0.0;
    double captured_fraction = 0.0;
};

/// Case-(I) growth surrogate: one shared realization, running ball maxima
/// over dyadic radii, slope of log max against (log R)^{2/(4-alpha)},
/// reported side by side with kappa from the variational solver. Refuses
/// measures that do not classify as case (I).
GrowthResult run_growth_experiment(const ExperimentConfig& cfg);

struct DecayResult {
    FitReport vs_nu;                  // target slope -1
    std::optional<FitReport> vs_r2;   // single atom at the origin: -1/(2t)
    std::vector<double> radii, log_max, nu_values;
    double captured_fraction = 0.0;
};

/// Case-(II) decay surrogate: outer maxima of the point estimator against
/// nu(R). Refuses measures that do not classify as case (II).
DecayResult run_decay_experiment(const ExperimentConfig& cfg);

struct ValidationEntry {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

struct ValidationLedger {
    std::vector<ValidationEntry> entries;
    std::size_t failures() const;
    Json to_json(const ExperimentConfig& cfg) const;
};

/// Executes the structural and statistical invariants of every module with
/// the configured kernels; failures are data, not exceptions.
ValidationLedger run_validation_suite(const ExperimentConfig& cfg);

// --- emission helpers ------------------------------------------------------

/// Stable shortest-faithful formatting used by every CSV writer.
std::string format_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_text(const std::string& path, const std::string& content);

/// Little-endian dump: "FKNZ", u32 version, u32 d, f64 t, u64 time_count,
/// per axis (f64 lo, f64 hi, u64 count), f64 epsilon, f64 delta, u64 seed,
/// f64 captured_fraction, u64 value_count, then the values time-major.
void dump_noise_binary(const std::string& path, const NoiseRealization& nr);
NoiseRealization load_noise_binary(const std::string& path);

}  // namespace fkpam
