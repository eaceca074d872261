#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>

#include "common.hpp"
#include "modepull/bootstrap.hpp"
#include "modepull/rng.hpp"

using namespace modepull;
using testfix::kFm;
using testfix::kGamma;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MeasurementSeries synth_series(double ratio, int n_points, double sigma_hz,
                               std::uint64_t seed) {
    const ResonanceLine line = testfix::line_at_ratio(ratio);
    const LorentzianParams params{line.epsilon, line.gamma_hz, 0.0, 0.0};
    std::vector<double> abscissae(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        abscissae[static_cast<std::size_t>(i)] =
            -10.0 * kGamma + 20.0 * kGamma * i / (n_points - 1);
    }
    const auto predicted =
        predict_series(params, testfix::geometry(), abscissae, SweepDirection::Up);
    RandomSampler rng(stream_seed(seed, 0));
    std::vector<MeasurementPoint> points;
    for (std::size_t i = 0; i < abscissae.size(); ++i) {
        const double noise = sigma_hz > 0.0 ? sigma_hz * rng.gaussian() : 0.0;
        points.push_back({abscissae[i], predicted[i] + noise, 1.0});
    }
    return MeasurementSeries(std::move(points), "synthetic");
}

BootstrapReport fake_report(std::vector<double> pf_max_samples, double confidence,
                            double bifurcation_fraction) {
    BootstrapReport report;
    report.pf_max_samples = std::move(pf_max_samples);
    report.replicates_requested = static_cast<int>(report.pf_max_samples.size());
    report.replicate_success_count = report.replicates_requested;
    report.confidence = confidence;
    report.bifurcation_fraction = bifurcation_fraction;
    return report;
}

}  // namespace

TEST_CASE("percentile with linear interpolation") {
    const std::vector<double> values{1.0, 2.0, 3.0, 4.0};
    CHECK(percentile(values, 0.0) == 1.0);
    CHECK(percentile(values, 1.0) == 4.0);
    CHECK(percentile(values, 0.5) == doctest::Approx(2.5));
    CHECK(percentile(values, 1.0 / 3.0) == doctest::Approx(2.0));
    const std::vector<double> with_inf{1.0, 2.0, kInf};
    CHECK(percentile(with_inf, 0.5) == 2.0);
    CHECK(std::isinf(percentile(with_inf, 0.9)));
}

TEST_CASE("interval construction") {
    SUBCASE("symmetric samples bracket the point") {
        std::vector<double> samples;
        for (int i = -50; i <= 50; ++i) {
            samples.push_back(2.0 + 0.01 * i);
        }
        const Interval interval = interval_at(samples, 2.0, 0.90);
        CHECK(interval.lower < 2.0);
        CHECK(interval.upper > 2.0);
        CHECK(!interval.upper_unbounded);
    }
    SUBCASE("ordering holds even for skewed samples") {
        const std::vector<double> samples{1.0, 1.01, 1.02, 1.03, 5.0};
        const Interval interval = interval_at(samples, 4.9, 0.90);
        CHECK(interval.lower <= interval.point);
        CHECK(interval.point <= interval.upper);
    }
    SUBCASE("monotone confidence") {
        std::vector<double> samples;
        RandomSampler rng(99);
        for (int i = 0; i < 500; ++i) {
            samples.push_back(2.0 + 0.3 * rng.gaussian());
        }
        const Interval narrow = interval_at(samples, 2.0, 0.90);
        const Interval wide = interval_at(samples, 2.0, 0.95);
        CHECK(wide.lower <= narrow.lower);
        CHECK(wide.upper >= narrow.upper);
    }
    SUBCASE("bifurcating mass marks the upper side unbounded") {
        std::vector<double> samples(40, 2.0);
        samples.resize(100, kInf);  // 60% bifurcating
        const Interval interval = interval_at(samples, kInf, 0.90);
        CHECK(interval.upper_unbounded);
        CHECK(interval.lower == 2.0);
    }
}

TEST_CASE("noiseless data degenerates to the base fit") {
    const MeasurementSeries data = synth_series(0.5, 100, 0.0, 11);
    const FitReport base = fit_lorentzian(data, testfix::geometry());
    REQUIRE(base.converged);

    BootstrapConfig config;
    config.replicates = 50;
    config.seed = 123;
    const BootstrapReport report =
        smoothed_bootstrap(data, testfix::geometry(), base, config);

    CHECK(report.replicate_success_count == 50);
    for (double eps : report.epsilon_samples) {
        CHECK(eps == doctest::Approx(base.lorentzian->epsilon).epsilon(1e-3));
    }
    for (double gamma : report.gamma_samples) {
        CHECK(gamma == doctest::Approx(base.lorentzian->gamma_hz).epsilon(1e-3));
    }
    CHECK(report.pf_max.upper - report.pf_max.lower <
          0.01 * std::fabs(report.pf_max.point));
    CHECK(report.gamma.upper - report.gamma.lower < 0.01 * report.gamma.point);
}

TEST_CASE("fixed seeds reproduce the report bit for bit") {
    const MeasurementSeries data = synth_series(0.5, 80, 0.15e6, 17);
    const FitReport base = fit_lorentzian(data, testfix::geometry());

    BootstrapConfig config;
    config.replicates = 60;
    config.seed = 2024;
    const BootstrapReport a = smoothed_bootstrap(data, testfix::geometry(), base, config);
    const BootstrapReport b = smoothed_bootstrap(data, testfix::geometry(), base, config);

    CHECK(std::memcmp(&a.pf_max, &b.pf_max, sizeof(Interval)) == 0);
    CHECK(std::memcmp(&a.gamma, &b.gamma, sizeof(Interval)) == 0);
    REQUIRE(a.pf_max_samples.size() == b.pf_max_samples.size());
    CHECK(std::memcmp(a.pf_max_samples.data(), b.pf_max_samples.data(),
                      a.pf_max_samples.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.epsilon_samples.data(), b.epsilon_samples.data(),
                      a.epsilon_samples.size() * sizeof(double)) == 0);

    BootstrapConfig other = config;
    other.seed = 2025;
    const BootstrapReport c = smoothed_bootstrap(data, testfix::geometry(), base, other);
    CHECK(std::memcmp(a.pf_max_samples.data(), c.pf_max_samples.data(),
                      a.pf_max_samples.size() * sizeof(double)) != 0);
}

TEST_CASE("interval ordering and bandwidth sanity on a noisy run") {
    const MeasurementSeries data = synth_series(0.5, 120, 0.2e6, 29);
    const FitReport base = fit_lorentzian(data, testfix::geometry());

    BootstrapConfig config;
    config.replicates = 80;
    config.seed = 5;
    const BootstrapReport report =
        smoothed_bootstrap(data, testfix::geometry(), base, config);

    for (const Interval* interval :
         {&report.pf_max, &report.pf_min, &report.epsilon, &report.gamma}) {
        CHECK(interval->lower <= interval->point);
        if (!interval->upper_unbounded) {
            CHECK(interval->point <= interval->upper);
        }
    }

    // Silverman bandwidth never exceeds the residual spread.
    const double sigma = oracles::sample_std(base.residuals);
    CHECK(report.bandwidth_hz <= sigma * (1.0 + 1e-12));
    CHECK(report.bandwidth_hz > 0.0);
}

TEST_CASE("near-threshold data flags an unbounded upper bound") {
    int unbounded_runs = 0;
    int finite_lower_bounds = 0;
    const int runs = 6;
    for (int run = 0; run < runs; ++run) {
        const MeasurementSeries data =
            synth_series(0.95, 150, 0.2e6, 4000 + static_cast<std::uint64_t>(run));
        const FitReport base = fit_lorentzian(data, testfix::geometry());
        BootstrapConfig config;
        config.replicates = 60;
        config.seed = 8800 + static_cast<std::uint64_t>(run);
        const BootstrapReport report =
            smoothed_bootstrap(data, testfix::geometry(), base, config);
        if (report.pf_max.upper_unbounded || report.bifurcation_fraction > 0.0) {
            ++unbounded_runs;
        }
        const PfMaxLowerBound bound = pf_max_lower_bound(report);
        if (!bound.unbounded && std::isfinite(bound.value)) {
            ++finite_lower_bounds;
            CHECK(bound.value > 3.0);  // truth pf_max = 20 at ratio 0.95
        }
    }
    CHECK(unbounded_runs > 0);
    CHECK(finite_lower_bounds == runs);
}

TEST_CASE("pf_max lower bound rules") {
    SUBCASE("all replicates bifurcating") {
        const BootstrapReport report =
            fake_report(std::vector<double>(100, kInf), 0.90, 1.0);
        const PfMaxLowerBound bound = pf_max_lower_bound(report);
        CHECK(bound.unbounded);
        CHECK(bound.bifurcating_bound_only);
    }
    SUBCASE("symmetric distribution around 2") {
        std::vector<double> samples;
        for (int i = -40; i <= 40; ++i) {
            samples.push_back(2.0 + 0.02 * i);
        }
        const BootstrapReport report = fake_report(samples, 0.90, 0.0);
        const PfMaxLowerBound bound = pf_max_lower_bound(report);
        CHECK(!bound.unbounded);
        CHECK(!bound.bifurcating_bound_only);
        CHECK(bound.value < 2.0);
        CHECK(bound.value > 1.2);
    }
    SUBCASE("quantile inside the bifurcating mass falls back to the smallest finite") {
        std::vector<double> samples(95, kInf);
        samples[0] = 7.0;
        samples[1] = 9.0;
        const BootstrapReport report = fake_report(samples, 0.90, 0.93);
        const PfMaxLowerBound bound = pf_max_lower_bound(report);
        CHECK(!bound.unbounded);
        CHECK(bound.bifurcating_bound_only);
        CHECK(bound.value == 7.0);
    }
}

TEST_CASE("excessive replicate failures raise an unstable-bootstrap error") {
    const MeasurementSeries data = synth_series(0.5, 60, 0.1e6, 55);
    const FitReport base = fit_lorentzian(data, testfix::geometry());
    BootstrapConfig config;
    config.replicates = 50;
    config.seed = 1;
    // An absurd kernel bandwidth drives synthetic ordinates non-finite,
    // so every replicate fit fails.
    config.kernel_bandwidth_hz = 1e308;
    try {
        smoothed_bootstrap(data, testfix::geometry(), base, config);
        FAIL("expected BootstrapUnstableError");
    } catch (const BootstrapUnstableError& error) {
        CHECK(error.partial().replicate_success_count < 40);
        CHECK(error.partial().replicates_requested == 50);
    }
}

TEST_CASE("config validation") {
    BootstrapConfig config;
    config.replicates = 49;
    CHECK_THROWS_AS(validate(config), InvalidArgumentError);
    config.replicates = 50;
    CHECK_NOTHROW(validate(config));
    config.confidence = 0.4;
    CHECK_THROWS_AS(validate(config), InvalidArgumentError);
    config.confidence = 0.9995;
    CHECK_THROWS_AS(validate(config), InvalidArgumentError);
    config.confidence = 0.9;
    config.kernel_bandwidth_hz = -1.0;
    CHECK_THROWS_AS(validate(config), InvalidArgumentError);

    const MeasurementSeries data = synth_series(0.5, 60, 0.1e6, 55);
    const FitReport base = fit_lorentzian(data, testfix::geometry());
    FitReport not_converged = base;
    not_converged.converged = false;
    BootstrapConfig ok;
    ok.replicates = 50;
    CHECK_THROWS_AS(smoothed_bootstrap(data, testfix::geometry(), not_converged, ok),
                    InvalidArgumentError);
}
