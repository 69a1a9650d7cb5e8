#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fkpam/path_sampling.hpp"
#include "fkpam/rng.hpp"

using namespace fkpam;

TEST_CASE("brownian motion sampler basics") {
    PathGrid grid(1.0, 1);
    auto p = sample_bm(1, grid, {0.0, 0.0});
    CHECK(p.at(0)[0] == 0.0);
    CHECK(p.at(0)[1] == 0.0);

    // determinism: same seed twice gives bitwise identical paths
    PathGrid g64(2.0, 64);
    auto a = sample_bm(99, g64, {0.5});
    auto b = sample_bm(99, g64, {0.5});
    CHECK(a.positions == b.positions);
    auto c = sample_bm(100, g64, {0.5});
    CHECK(a.positions != c.positions);
}

TEST_CASE("terminal variance of sampled motion") {
    PathGrid grid(1.0, 16);
    const int n = 100000;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto p = sample_bm(derive_seed(5, {static_cast<std::uint64_t>(i)}), grid, {0.0});
        double v = p.at(16)[0];
        m2 += v * v;
    }
    m2 /= n;
    CHECK(std::abs(m2 - 1.0) < 0.02);
}

TEST_CASE("bridge transform pins both ends and has the bridge law") {
    PathGrid grid(1.0, 32);
    const int n = 100000;
    double var_mid = 0.0, cov_end = 0.0;
    for (int i = 0; i < n; ++i) {
        auto p = sample_bm(derive_seed(7, {static_cast<std::uint64_t>(i)}), grid, {0.0});
        auto br = bridge_from_bm(p);
        CHECK(br.at(32)[0] == 0.0);  // exact pinning for every sample
        CHECK(br.at(0)[0] == 0.0);
        var_mid += br.at(16)[0] * br.at(16)[0];
        cov_end += br.at(16)[0] * p.at(32)[0];
    }
    var_mid /= n;
    cov_end /= n;
    CHECK(std::abs(var_mid - 0.25) < 0.005);  // s(1 - s/t) at s = 1/2
    CHECK(std::abs(cov_end) < 0.01);          // independent of the endpoint

    auto shifted = sample_bm(3, grid, {1.0});
    CHECK_THROWS_AS(bridge_from_bm(shifted), DomainError);
}

TEST_CASE("bridge covariance matches s ^ r - s r / t on a grid") {
    PathGrid grid(1.0, 20);
    const int n = 100000;
    const std::vector<std::size_t> nodes{2, 6, 10, 14, 18};
    std::vector<std::vector<double>> acc(nodes.size(), std::vector<double>(nodes.size(), 0.0));
    for (int i = 0; i < n; ++i) {
        auto br = bridge_from_bm(sample_bm(derive_seed(13, {static_cast<std::uint64_t>(i)}), grid,
                                           {0.0}));
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = 0; b < nodes.size(); ++b)
                acc[a][b] += br.at(nodes[a])[0] * br.at(nodes[b])[0];
    }
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = 0; b < nodes.size(); ++b) {
            double s = grid.time_at(nodes[a]);
            double r = grid.time_at(nodes[b]);
            double expected = std::min(s, r) - s * r;
            double got = acc[a][b] / n;
            // variance of the product estimator ~ (1 + expected^2)/n
            double se = std::sqrt((expected * expected + 0.25 * 0.25) / n) + 1e-3;
            CHECK(std::abs(got - expected) < 3.5 * se);
        }
    }
}

TEST_CASE("pinned bridge endpoints and mean") {
    PathGrid grid(2.0, 16);
    BridgeSpec spec(2.0, {1.0}, {3.0});
    double mean_mid = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto br = sample_bridge(derive_seed(21, {static_cast<std::uint64_t>(i)}), grid, spec);
        CHECK(br.at(0)[0] == 1.0);
        CHECK(br.at(16)[0] == 3.0);
        mean_mid += br.at(8)[0];
    }
    mean_mid /= n;
    CHECK(std::abs(mean_mid - 2.0) < 0.01);

    PathGrid wrong(1.0, 16);
    CHECK_THROWS_AS(sample_bridge(1, wrong, spec), GridMismatch);
}

namespace {

// two-sample Kolmogorov-Smirnov p-value (asymptotic)
double ks_p_value(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    double ne = std::sqrt(static_cast<double>(a.size()) * b.size() / (a.size() + b.size()));
    double lambda = (ne + 0.12 + 0.11 / ne) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("restriction of a fine path has the coarse law") {
    PathGrid fine(1.0, 256);
    PathGrid coarse(1.0, 128);
    const int n = 4000;
    std::vector<double> restricted, direct;
    for (int i = 0; i < n; ++i) {
        auto pf = sample_bm(derive_seed(31, {static_cast<std::uint64_t>(i)}), fine, {0.0});
        auto pr = pf.restrict_to(2);
        CHECK(pr.grid.steps == 128);
        restricted.push_back(pr.at(64)[0]);  // marginal at s = 1/2
        auto pc = sample_bm(derive_seed(37, {static_cast<std::uint64_t>(i)}), coarse, {0.0});
        direct.push_back(pc.at(64)[0]);
    }
    CHECK(ks_p_value(restricted, direct) > 0.01);
}
