#pragma once

#include <optional>
#include <vector>

#include "modepull/errors.hpp"

namespace modepull {

/// One Lorentzian dispersive line,
///   n(f) - 1 = epsilon * gamma * df / (df^2 + gamma^2),
/// where df is the detuning from the line's resonance frequency f_m.
/// Positive epsilon models transmission/gain lines; negative epsilon is
/// permitted and models absorption.
struct ResonanceLine {
    double epsilon = 0.0;   // dimensionless resonance strength
    double gamma_hz = 0.0;  // resonance half-width, > 0
    double f_m_hz = 0.0;    // absolute resonance frequency, > 0
};

void validate(const ResonanceLine& line);

/// Refractive index model: unit background plus a sum of Lorentzian
/// dispersive terms. All detunings are carried relative to a declared
/// reference frequency (the first line's f_m by default) so the arithmetic
/// stays at the ~gamma scale instead of the ~1e14 Hz scale.
class MediumModel {
public:
    explicit MediumModel(std::vector<ResonanceLine> lines,
                         std::optional<double> reference_hz = std::nullopt);

    static MediumModel single(const ResonanceLine& line) {
        return MediumModel(std::vector<ResonanceLine>{line});
    }

    const std::vector<ResonanceLine>& lines() const { return lines_; }
    double reference_hz() const { return reference_hz_; }
    bool is_single_line() const { return lines_.size() == 1; }

    /// Line with the largest |epsilon|; ties go to the earliest line.
    const ResonanceLine& dominant_line() const;
    /// Detuning of the dominant line's center relative to the reference.
    double dominant_offset_hz() const;
    /// Per-line center offsets relative to the reference, in line order.
    const std::vector<double>& offsets_hz() const { return offsets_hz_; }

    /// Upper bound on |n - 1| over all frequencies: sum_i |epsilon_i| / 2.
    double max_index_deviation() const;

private:
    std::vector<ResonanceLine> lines_;
    double reference_hz_ = 0.0;
    std::vector<double> offsets_hz_;
};

/// Ring-cavity geometry. The total geometric round-trip path is
/// p_e + p_d; with |n - 1| <~ 1e-5 the optical correction p_d*(n - 1) is
/// below 1e-7 relative and is neglected throughout.
struct CavityGeometry {
    double p_e_m = 0.0;   // empty (non-dispersive) path length, >= 0
    double p_d_m = 0.0;   // dispersive element length, > 0
    double f_0_hz = 0.0;  // reference resonant frequency, > 0

    double p_tot_m() const { return p_e_m + p_d_m; }

    static CavityGeometry from_total(double p_tot_m, double p_d_m, double f_0_hz);
};

void validate(const CavityGeometry& geometry);

/// Pulling factor together with the index values it came from.
struct PullingFigure {
    double pf;           // n / n_g
    double n;            // refractive index at the evaluation point
    double n_g;          // group index at the evaluation point
    double detuning_hz;  // evaluation detuning from the reference
};

/// Closed-form extrema of the pulling factor for a single line.
struct PfExtrema {
    std::optional<double> pf_max;  // absent in the bifurcating regime
    double pf_min = 0.0;
    double detuning_at_max_hz = 0.0;  // +sqrt(3)*gamma; the mirror point -sqrt(3)*gamma is equivalent
    double detuning_at_min_hz = 0.0;  // 0 (line center)
    bool bifurcating = false;         // epsilon above threshold: pf_max unbounded
    double epsilon_ratio = 0.0;       // epsilon / epsilon_th
};

/// n(f) - 1 evaluated without the unit background, so callers that
/// difference against 1 keep full precision.
double index_deviation(const MediumModel& medium, double detuning_hz);

/// n(f) = 1 + index_deviation.
double index_of_refraction(const MediumModel& medium, double detuning_hz);

/// dn/df in 1/Hz.
double index_derivative(const MediumModel& medium, double detuning_hz);

/// d2n/df2 in 1/Hz^2 (used for fold location).
double index_second_derivative(const MediumModel& medium, double detuning_hz);

/// Group index n_g = n * (1 + (p_d / p_tot) * f_0 * dn/df). May be
/// negative under strong negative dispersion.
double group_index(const CavityGeometry& cavity, const MediumModel& medium,
                   double detuning_hz);

/// Pulling factor pf = n / n_g. Throws PoleError when |n_g| < n_g_floor,
/// which identifies a bifurcation pole.
PullingFigure pulling_factor(const CavityGeometry& cavity, const MediumModel& medium,
                             double detuning_hz, double n_g_floor = 1e-12);

/// Bifurcation threshold strength eps_th = (8 gamma / f_m) * (p_tot / p_d).
double epsilon_threshold(const CavityGeometry& cavity, const ResonanceLine& line);

/// Closed-form pulling-factor extrema for a single gain line:
///   pf_max = 1 / (1 - eps/eps_th)   at detuning +-sqrt(3)*gamma,
///   pf_min = 1 / (1 + 8 eps/eps_th) at detuning 0.
/// Requires epsilon > 0. Throws ThresholdError at epsilon == eps_th where
/// pf_max diverges; above threshold pf_max is reported as a bifurcation
/// flag instead of a number.
PfExtrema pf_extrema(const CavityGeometry& cavity, const ResonanceLine& line);

}  // namespace modepull
