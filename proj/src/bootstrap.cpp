#include "modepull/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modepull/rng.hpp"

namespace modepull {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void validate(const BootstrapConfig& config) {
    if (config.replicates < 50) {
        throw InvalidArgumentError("bootstrap needs at least 50 replicates");
    }
    if (!(config.confidence > 0.5) || !(config.confidence < 0.999)) {
        throw InvalidArgumentError("confidence must lie in (0.5, 0.999)");
    }
    if (config.kernel_bandwidth_hz &&
        (!std::isfinite(*config.kernel_bandwidth_hz) || *config.kernel_bandwidth_hz < 0.0)) {
        throw InvalidArgumentError("kernel bandwidth must be finite and >= 0");
    }
}

double percentile(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) {
        throw InvalidArgumentError("percentile of an empty sample");
    }
    p = std::clamp(p, 0.0, 1.0);
    const double h = p * static_cast<double>(sorted_values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    const double a = sorted_values[lo];
    const double b = sorted_values[hi];
    if (frac == 0.0 || a == b) {
        return a;
    }
    return a + frac * (b - a);  // inf propagates
}

Interval interval_at(std::vector<double> samples, double point, double confidence) {
    samples.erase(std::remove_if(samples.begin(), samples.end(),
                                 [](double v) { return std::isnan(v); }),
                  samples.end());
    if (samples.empty()) {
        throw InvalidArgumentError("interval of an empty sample");
    }
    std::sort(samples.begin(), samples.end());
    const double tail = 0.5 * (1.0 - confidence);
    Interval out;
    out.point = point;
    out.lower = percentile(samples, tail);
    out.upper = percentile(samples, 1.0 - tail);
    if (std::isinf(out.upper)) {
        out.upper_unbounded = true;
    }
    // Percentile intervals of skewed samples can exclude the point
    // estimate; widen minimally so the ordering contract holds.
    if (std::isfinite(point)) {
        out.lower = std::min(out.lower, point);
        out.upper = std::max(out.upper, point);
    } else if (std::isinf(point) && point > 0.0) {
        out.upper = kInf;
        out.upper_unbounded = true;
    }
    return out;
}

BootstrapReport smoothed_bootstrap(const MeasurementSeries& data,
                                   const CavityGeometry& cavity,
                                   const FitReport& base,
                                   const BootstrapConfig& config) {
    validate(config);
    validate(cavity);
    if (base.model_kind != ModelKind::Lorentzian || !base.lorentzian) {
        throw InvalidArgumentError("bootstrap requires a Lorentzian base fit");
    }
    if (!base.converged) {
        throw InvalidArgumentError("bootstrap requires a converged base fit");
    }
    const auto& pts = data.points();
    const std::size_t n = pts.size();
    if (base.residuals.size() != n) {
        throw InvalidArgumentError("base fit residual count does not match the data");
    }

    // Centered residuals and their spread.
    std::vector<double> residuals = base.residuals;
    double mean = 0.0;
    for (double r : residuals) {
        mean += r;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double& r : residuals) {
        r -= mean;
        var += r * r;
    }
    var = (n > 1) ? var / static_cast<double>(n - 1) : 0.0;
    const double sigma = std::sqrt(var);
    const double bandwidth = config.kernel_bandwidth_hz.value_or(
        1.06 * sigma * std::pow(static_cast<double>(n), -0.2));

    // Noise-free ordinates implied by the base fit.
    std::vector<double> predicted(n);
    std::vector<double> abscissae(n);
    for (std::size_t i = 0; i < n; ++i) {
        abscissae[i] = pts[i].delta_f_e_hz;
        predicted[i] = pts[i].delta_f_d_hz - base.residuals[i];
    }

    BootstrapReport report;
    report.replicates_requested = config.replicates;
    report.confidence = config.confidence;
    report.bandwidth_hz = bandwidth;
    report.seed = config.seed;
    report.method = "residual resampling + Gaussian kernel smoothing, percentile intervals";

    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    report.pf_max_samples.assign(reps, kNaN);
    report.pf_min_samples.assign(reps, kNaN);
    report.epsilon_samples.assign(reps, kNaN);
    report.gamma_samples.assign(reps, kNaN);

    FitOptions fit_options;
    fit_options.direction = base.direction;

    int failures = 0;
    int bifurcating = 0;
    std::vector<MeasurementPoint> synthetic(n);
    for (std::size_t k = 0; k < reps; ++k) {
        RandomSampler rng(stream_seed(config.seed, k));
        for (std::size_t i = 0; i < n; ++i) {
            const double resampled = residuals[rng.uniform_index(n)];
            const double kernel = bandwidth > 0.0 ? bandwidth * rng.gaussian() : 0.0;
            synthetic[i] = MeasurementPoint{abscissae[i], predicted[i] + resampled + kernel,
                                            pts[i].weight};
        }
        try {
            const MeasurementSeries series(synthetic, "bootstrap replicate");
            const FitReport fit =
                fit_lorentzian(series, cavity, base.lorentzian, fit_options);
            const double ratio = fit.epsilon_ratio;
            report.epsilon_samples[k] = fit.lorentzian->epsilon;
            report.gamma_samples[k] = fit.lorentzian->gamma_hz;
            report.pf_min_samples[k] = 1.0 / (1.0 + 8.0 * ratio);
            if (ratio < 1.0) {
                report.pf_max_samples[k] = 1.0 / (1.0 - ratio);
            } else {
                report.pf_max_samples[k] = kInf;
                ++bifurcating;
            }
        } catch (const Error&) {
            ++failures;
        }
    }

    report.replicate_success_count = static_cast<int>(reps) - failures;
    report.bifurcation_fraction =
        report.replicate_success_count > 0
            ? static_cast<double>(bifurcating) / report.replicate_success_count
            : 0.0;

    if (report.replicate_success_count > 0) {
        const double base_ratio = base.epsilon_ratio;
        const double base_pf_max = base_ratio < 1.0 ? 1.0 / (1.0 - base_ratio) : kInf;
        const double base_pf_min = 1.0 / (1.0 + 8.0 * base_ratio);
        report.pf_max = interval_at(report.pf_max_samples, base_pf_max, config.confidence);
        report.pf_min = interval_at(report.pf_min_samples, base_pf_min, config.confidence);
        report.epsilon =
            interval_at(report.epsilon_samples, base.lorentzian->epsilon, config.confidence);
        report.gamma =
            interval_at(report.gamma_samples, base.lorentzian->gamma_hz, config.confidence);
    }

    if (failures > 0.2 * config.replicates) {
        throw BootstrapUnstableError(
            std::to_string(failures) + " of " + std::to_string(config.replicates) +
                " replicate fits failed; bootstrap unstable",
            report);
    }
    return report;
}

PfMaxLowerBound pf_max_lower_bound(const BootstrapReport& report) {
    std::vector<double> samples;
    samples.reserve(report.pf_max_samples.size());
    for (double v : report.pf_max_samples) {
        if (!std::isnan(v)) {
            samples.push_back(v);
        }
    }
    PfMaxLowerBound out;
    out.bifurcating_bound_only = report.bifurcation_fraction > 1.0 - report.confidence;
    if (samples.empty()) {
        out.unbounded = true;
        out.value = kInf;
        return out;
    }
    std::sort(samples.begin(), samples.end());
    double bound = percentile(samples, 1.0 - report.confidence);
    if (!std::isfinite(bound)) {
        // The quantile landed in the bifurcating mass; fall back to the
        // smallest finite replicate, or flag the bound unbounded.
        bound = kInf;
        for (double v : samples) {
            if (std::isfinite(v)) {
                bound = v;
                break;
            }
        }
        if (!std::isfinite(bound)) {
            out.unbounded = true;
        }
    }
    out.value = bound;
    return out;
}

}  // namespace modepull
