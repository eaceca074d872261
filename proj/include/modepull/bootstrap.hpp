#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modepull/fit.hpp"

namespace modepull {

struct BootstrapConfig {
    int replicates = 1000;  // desk-scale runs use 200
    double confidence = 0.90;
    /// Gaussian kernel bandwidth in Hz; unset selects Silverman's rule
    /// 1.06 * sigma_hat * N^(-1/5).
    std::optional<double> kernel_bandwidth_hz;
    std::uint64_t seed = 0;
};

void validate(const BootstrapConfig& config);

struct Interval {
    double lower = 0.0;
    double point = 0.0;
    double upper = 0.0;
    bool upper_unbounded = false;
};

struct BootstrapReport {
    Interval pf_max;  // upper side may be unbounded in the bifurcating regime
    Interval pf_min;
    Interval epsilon;
    Interval gamma;

    int replicates_requested = 0;
    int replicate_success_count = 0;
    /// Share of successful replicates with epsilon above threshold.
    double bifurcation_fraction = 0.0;
    double confidence = 0.0;
    double bandwidth_hz = 0.0;
    std::uint64_t seed = 0;
    std::string method;  // resampling variant tag

    /// Per-replicate derived values in replicate-index order: NaN marks a
    /// failed replicate, +inf pf_max marks a bifurcating one.
    std::vector<double> pf_max_samples;
    std::vector<double> pf_min_samples;
    std::vector<double> epsilon_samples;
    std::vector<double> gamma_samples;
};

/// More than 20% of the replicate fits failed; carries the partial report.
class BootstrapUnstableError : public Error {
public:
    BootstrapUnstableError(const std::string& what, BootstrapReport partial)
        : Error(what), partial_(std::move(partial)) {}
    const BootstrapReport& partial() const { return partial_; }

private:
    BootstrapReport partial_;
};

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n-1)p). `sorted_values` must be ascending; +inf entries are
/// allowed and propagate into the result.
double percentile(std::span<const double> sorted_values, double p);

/// Equal-tailed percentile interval at the given confidence, minimally
/// widened to contain the point estimate so lower <= point <= upper always
/// holds. Non-finite samples are dropped except +inf, which marks the
/// upper side unbounded when the upper quantile reaches it.
Interval interval_at(std::vector<double> samples, double point, double confidence);

/// Residual bootstrap with Gaussian kernel smoothing: each replicate
/// resamples the base fit's centered residuals with replacement, adds
/// kernel noise, rebuilds synthetic lasing detunings, refits, and records
/// the derived quantities. Percentile intervals at the configured
/// confidence; fully deterministic for a fixed seed (replicate k draws
/// from its own seeded stream, so execution order cannot matter).
BootstrapReport smoothed_bootstrap(const MeasurementSeries& data,
                                   const CavityGeometry& cavity,
                                   const FitReport& base,
                                   const BootstrapConfig& config);

struct PfMaxLowerBound {
    double value = 0.0;
    bool unbounded = false;              // no finite replicate at all
    bool bifurcating_bound_only = false; // upper side unbounded: lower bound is all there is
};

/// One-sided lower confidence bound on pf_max: the (1 - confidence)
/// quantile of the replicate distribution. If that quantile lands in the
/// bifurcating (+inf) mass, the smallest finite replicate is reported; if
/// no finite replicate exists the bound is flagged unbounded.
PfMaxLowerBound pf_max_lower_bound(const BootstrapReport& report);

}  // namespace modepull
