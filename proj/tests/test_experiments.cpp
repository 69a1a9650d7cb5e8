#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "fkpam/experiments.hpp"

using namespace fkpam;

TEST_CASE("config round trip, hashing and validation gates") {
    ExperimentConfig cfg;
    cfg.alphas = {1.3};
    cfg.time_parts = {{0.5, 0.0, false}, {1.0, 0.3, true}};
    cfg.measure_kind = "atoms";
    cfg.atoms = {{{0.0}, 1.0}};
    cfg.validate();

    auto j = cfg.to_json();
    auto back = ExperimentConfig::from_json(j);
    CHECK(back.canonical_dump() == cfg.canonical_dump());
    CHECK(back.config_hash() == cfg.config_hash());

    // the worker count must not affect the canonical form
    ExperimentConfig other = cfg;
    other.workers = 7;
    CHECK(other.canonical_dump() == cfg.canonical_dump());

    // rejection gates
    Json bad = cfg.to_json();
    bad["regularization"]["epsilon"] = -1.0;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
    bad = cfg.to_json();
    bad["run"]["radii"] = {4.0, 3.0};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
    bad = cfg.to_json();
    bad["measure"]["type"] = "mystery";
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
    bad = cfg.to_json();
    bad["kernel"]["alphas"] = {0.9};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), DomainError);
}

TEST_CASE("noise binary dump round trip") {
    PairedCovariance cov(SpaceSpectralDensity(1.0, {1.3}), TimeKernel::constant(1.0));
    SpaceTimeGrid grid(1.0, 3, {-2.0}, {2.0}, {17});
    FrequencyGrid freq = FrequencyGrid::suggest(cov, 0.1, 0.2, grid);
    auto nr = synthesize_noise(55, cov, 0.1, 0.2, grid, freq);
    auto path = std::filesystem::temp_directory_path() / "fkpam_test_noise.bin";
    dump_noise_binary(path.string(), nr);
    auto loaded = load_noise_binary(path.string());
    CHECK(loaded.values == nr.values);
    CHECK(loaded.grid == nr.grid);
    CHECK(loaded.epsilon == nr.epsilon);
    CHECK(loaded.delta == nr.delta);
    CHECK(loaded.seed == nr.seed);
    std::filesystem::remove(path);
}

namespace {

ExperimentConfig decay_config(double theta) {
    ExperimentConfig cfg;
    cfg.alphas = {1.3};
    cfg.time_parts = {{1.0, 0.0, false}};
    cfg.epsilon = 0.05;
    cfg.measure_kind = "atoms";
    cfg.atoms = {{{0.0}, 1.0}};
    cfg.theta = theta;
    cfg.radii = {4, 5, 6, 7, 8, 9, 10, 11, 12};
    cfg.n_paths = 200;
    cfg.grid_density = 2.0;
    cfg.seed = 777;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("decay experiment: exact zero-theta slopes and classification gate") {
    auto cfg = decay_config(0.0);
    auto res = run_decay_experiment(cfg);
    CHECK(res.vs_nu.fit.slope == doctest::Approx(-1.0).epsilon(1e-9));
    REQUIRE(res.vs_r2.has_value());
    CHECK(res.vs_r2->fit.slope == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(res.vs_r2->fit.r_squared > 1.0 - 1e-12);

    // a growth measure is refused by the decay gate
    auto wrong = cfg;
    wrong.measure_kind = "unit";
    wrong.atoms.clear();
    CHECK_THROWS_AS(run_decay_experiment(wrong), DomainError);
}

TEST_CASE("growth experiment gate refuses decaying measures") {
    auto cfg = decay_config(0.5);  // atom measure
    cfg.radii = {4, 8, 16};
    CHECK_THROWS_AS(run_growth_experiment(cfg), DomainError);
}

TEST_CASE("experiment determinism across worker counts") {
    auto cfg1 = decay_config(0.1);
    cfg1.workers = 1;
    auto cfg2 = decay_config(0.1);
    cfg2.workers = 3;
    auto r1 = run_decay_experiment(cfg1);
    auto r2 = run_decay_experiment(cfg2);
    CHECK(r1.log_max == r2.log_max);
    CHECK(r1.vs_nu.fit.slope == r2.vs_nu.fit.slope);
    CHECK(r1.vs_nu.to_json(cfg1).dump() == r2.vs_nu.to_json(cfg2).dump());
}

TEST_CASE("validation suite passes on the default configuration") {
    ExperimentConfig cfg;
    cfg.workers = 2;
    auto ledger = run_validation_suite(cfg);
    for (const auto& e : ledger.entries) {
        INFO(e.name, " measured ", e.measured, " threshold ", e.threshold);
        CHECK(e.pass);
    }
    CHECK(ledger.failures() == 0);
    CHECK(ledger.entries.size() >= 25);
}

TEST_CASE("csv formatting is stable and round-trippable") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    double v = 0.1234567890123456789;
    CHECK(std::stod(format_double(v)) == v);
}
