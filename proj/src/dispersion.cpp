#include "modepull/dispersion.hpp"

#include <cmath>
#include <string>

namespace modepull {

namespace {

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw InvalidArgumentError(std::string(what) + " must be finite");
    }
}

}  // namespace

void validate(const ResonanceLine& line) {
    if (!std::isfinite(line.epsilon)) {
        throw InvalidArgumentError("resonance strength must be finite");
    }
    if (!std::isfinite(line.gamma_hz) || line.gamma_hz <= 0.0) {
        throw InvalidArgumentError("resonance half-width must be > 0");
    }
    if (!std::isfinite(line.f_m_hz) || line.f_m_hz <= 0.0) {
        throw InvalidArgumentError("resonance frequency must be > 0");
    }
}

MediumModel::MediumModel(std::vector<ResonanceLine> lines,
                         std::optional<double> reference_hz)
    : lines_(std::move(lines)) {
    if (lines_.empty()) {
        throw InvalidArgumentError("medium model needs at least one resonance line");
    }
    for (const auto& line : lines_) {
        validate(line);
    }
    reference_hz_ = reference_hz.value_or(lines_.front().f_m_hz);
    if (!std::isfinite(reference_hz_) || reference_hz_ <= 0.0) {
        throw InvalidArgumentError("reference frequency must be > 0");
    }
    offsets_hz_.reserve(lines_.size());
    for (const auto& line : lines_) {
        offsets_hz_.push_back(line.f_m_hz - reference_hz_);
    }
}

const ResonanceLine& MediumModel::dominant_line() const {
    const ResonanceLine* best = &lines_.front();
    for (const auto& line : lines_) {
        if (std::fabs(line.epsilon) > std::fabs(best->epsilon)) {
            best = &line;
        }
    }
    return *best;
}

double MediumModel::dominant_offset_hz() const {
    return dominant_line().f_m_hz - reference_hz_;
}

double MediumModel::max_index_deviation() const {
    double sum = 0.0;
    for (const auto& line : lines_) {
        sum += 0.5 * std::fabs(line.epsilon);
    }
    return sum;
}

double index_deviation(const MediumModel& medium, double detuning_hz) {
    require_finite(detuning_hz, "detuning");
    double sum = 0.0;
    const auto& lines = medium.lines();
    const auto& offsets = medium.offsets_hz();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const double df = detuning_hz - offsets[i];
        const double g = lines[i].gamma_hz;
        sum += lines[i].epsilon * g * df / (df * df + g * g);
    }
    return sum;
}

double index_of_refraction(const MediumModel& medium, double detuning_hz) {
    return 1.0 + index_deviation(medium, detuning_hz);
}

double index_derivative(const MediumModel& medium, double detuning_hz) {
    require_finite(detuning_hz, "detuning");
    double sum = 0.0;
    const auto& lines = medium.lines();
    const auto& offsets = medium.offsets_hz();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const double df = detuning_hz - offsets[i];
        const double g = lines[i].gamma_hz;
        const double denom = df * df + g * g;
        sum += lines[i].epsilon * g * (g * g - df * df) / (denom * denom);
    }
    return sum;
}

double index_second_derivative(const MediumModel& medium, double detuning_hz) {
    require_finite(detuning_hz, "detuning");
    double sum = 0.0;
    const auto& lines = medium.lines();
    const auto& offsets = medium.offsets_hz();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const double df = detuning_hz - offsets[i];
        const double g = lines[i].gamma_hz;
        const double denom = df * df + g * g;
        sum += -2.0 * lines[i].epsilon * g * df * (3.0 * g * g - df * df) /
               (denom * denom * denom);
    }
    return sum;
}

void validate(const CavityGeometry& geometry) {
    if (!std::isfinite(geometry.p_e_m) || geometry.p_e_m < 0.0) {
        throw GeometryError("empty path length must be >= 0");
    }
    if (!std::isfinite(geometry.p_d_m) || geometry.p_d_m <= 0.0) {
        throw GeometryError("dispersive element length must be > 0");
    }
    if (!std::isfinite(geometry.f_0_hz) || geometry.f_0_hz <= 0.0) {
        throw GeometryError("reference resonant frequency must be > 0");
    }
}

CavityGeometry CavityGeometry::from_total(double p_tot_m, double p_d_m, double f_0_hz) {
    CavityGeometry geometry{p_tot_m - p_d_m, p_d_m, f_0_hz};
    if (!std::isfinite(p_tot_m) || geometry.p_e_m < 0.0) {
        throw GeometryError("total path must be finite and >= the dispersive length");
    }
    validate(geometry);
    return geometry;
}

double group_index(const CavityGeometry& cavity, const MediumModel& medium,
                   double detuning_hz) {
    validate(cavity);
    const double p_tot = cavity.p_tot_m();
    if (!(p_tot > 0.0)) {
        throw GeometryError("total cavity path must be > 0");
    }
    const double n = 1.0 + index_deviation(medium, detuning_hz);
    const double slope_term =
        (cavity.f_0_hz * cavity.p_d_m / p_tot) * index_derivative(medium, detuning_hz);
    return n * (1.0 + slope_term);
}

PullingFigure pulling_factor(const CavityGeometry& cavity, const MediumModel& medium,
                             double detuning_hz, double n_g_floor) {
    validate(cavity);
    const double n = 1.0 + index_deviation(medium, detuning_hz);
    const double slope_term = (cavity.f_0_hz * cavity.p_d_m / cavity.p_tot_m()) *
                              index_derivative(medium, detuning_hz);
    const double n_g = n * (1.0 + slope_term);
    if (std::fabs(n_g) < n_g_floor) {
        throw PoleError("group index magnitude " + std::to_string(n_g) +
                            " below floor: bifurcation pole at detuning " +
                            std::to_string(detuning_hz) + " Hz",
                        detuning_hz, n_g);
    }
    return PullingFigure{n / n_g, n, n_g, detuning_hz};
}

double epsilon_threshold(const CavityGeometry& cavity, const ResonanceLine& line) {
    validate(cavity);
    if (!std::isfinite(line.f_m_hz) || line.f_m_hz <= 0.0) {
        throw GeometryError("resonance frequency must be > 0");
    }
    if (!std::isfinite(line.gamma_hz) || line.gamma_hz <= 0.0) {
        throw InvalidArgumentError("resonance half-width must be > 0");
    }
    return (8.0 * line.gamma_hz / line.f_m_hz) * (cavity.p_tot_m() / cavity.p_d_m);
}

PfExtrema pf_extrema(const CavityGeometry& cavity, const ResonanceLine& line) {
    validate(line);
    if (!(line.epsilon > 0.0)) {
        throw InvalidArgumentError("analytic pulling extrema require epsilon > 0");
    }
    const double eps_th = epsilon_threshold(cavity, line);
    const double ratio = line.epsilon / eps_th;
    constexpr double kThresholdBand = 1e-12;
    if (std::fabs(ratio - 1.0) < kThresholdBand) {
        throw ThresholdError("pf_max diverges: resonance strength at the bifurcation threshold");
    }
    PfExtrema out;
    out.pf_min = 1.0 / (1.0 + 8.0 * ratio);
    out.detuning_at_max_hz = std::sqrt(3.0) * line.gamma_hz;
    out.detuning_at_min_hz = 0.0;
    out.epsilon_ratio = ratio;
    out.bifurcating = ratio > 1.0;
    if (!out.bifurcating) {
        out.pf_max = 1.0 / (1.0 - ratio);
    }
    return out;
}

}  // namespace modepull
