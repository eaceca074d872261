#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modepull/solver.hpp"

namespace modepull {

struct MeasurementPoint {
    double delta_f_e_hz = 0.0;
    double delta_f_d_hz = 0.0;
    double weight = 1.0;  // >= 0
};

/// Measured (empty-cavity detuning, lasing detuning) pairs with optional
/// non-negative weights. Construction sorts by abscissa; the sort is
/// stable so tied abscissae keep their input order.
class MeasurementSeries {
public:
    MeasurementSeries() = default;
    explicit MeasurementSeries(std::vector<MeasurementPoint> points,
                               std::string metadata = "");

    const std::vector<MeasurementPoint>& points() const { return points_; }
    const std::string& metadata() const { return metadata_; }
    std::size_t size() const { return points_.size(); }

private:
    std::vector<MeasurementPoint> points_;
    std::string metadata_;
};

enum class ModelKind { Lorentzian, Polynomial5 };

const char* to_string(ModelKind kind);

/// Parameters of the single-line response model in measurement-axis
/// coordinates. The predicted lasing detuning at empty-cavity detuning e
/// is  x(e - center_offset) + center_offset + baseline_offset,  where x(.)
/// solves the resonance map for the declared sweep direction; far from
/// the resonance the prediction approaches e + baseline_offset.
struct LorentzianParams {
    double epsilon = 0.0;
    double gamma_hz = 0.0;
    double center_offset_hz = 0.0;    // position of the line center on the delta_f_e axis
    double baseline_offset_hz = 0.0;  // vertical offset of the unit-slope asymptote
};

/// Degree-5 polynomial fit, stored in the numerically stable rescaled
/// basis t = (e - center)/halfspan as well as expanded raw coefficients.
struct Polynomial5 {
    std::array<double, 6> coeffs_scaled{};  // a_k, model = sum a_k t^k
    std::array<double, 6> coeffs_hz{};      // raw basis, Hz / Hz^k
    double center_hz = 0.0;
    double halfspan_hz = 0.0;

    double evaluate(double delta_f_e_hz) const;
    /// d(model)/d(e), evaluated from the scaled coefficients exactly.
    double derivative(double delta_f_e_hz) const;
};

struct FitReport {
    ModelKind model_kind = ModelKind::Lorentzian;
    std::optional<LorentzianParams> lorentzian;
    std::optional<Polynomial5> polynomial;
    std::optional<CavityGeometry> cavity;  // geometry the Lorentzian fit ran against

    double rss = 0.0;               // weighted residual sum of squares, Hz^2
    std::vector<double> residuals;  // per point, Hz: measured - predicted
    bool converged = false;
    int iterations = 0;
    std::string warning;
    SweepDirection direction = SweepDirection::Up;

    // Derived quantities, Lorentzian fits only.
    std::optional<PfExtrema> extrema;
    double epsilon_ratio = 0.0;
    double epsilon_threshold = 0.0;
};

/// Optimizer gave up before meeting the convergence criteria; carries the
/// best report found so far.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, FitReport best)
        : Error(what), best_(std::move(best)) {}
    const FitReport& best() const { return best_; }

private:
    FitReport best_;
};

struct FitOptions {
    int max_iterations = 500;
    double rss_rel_tol = 1e-10;
    double step_rel_tol = 1e-8;
    double gamma_min_hz = 1e3;
    double gamma_max_hz = 1e9;
    double epsilon_max_thresholds = 1e3;  // epsilon upper bound, units of eps_th
    SweepDirection direction = SweepDirection::Up;
};

/// Forward model at a single point; deterministic given the direction.
double predict(const LorentzianParams& params, const CavityGeometry& cavity,
               double delta_f_e_hz, SweepDirection direction);

/// Forward model over many points (one equation setup, vectorized root
/// solves).
std::vector<double> predict_series(const LorentzianParams& params,
                                   const CavityGeometry& cavity,
                                   std::span<const double> delta_f_e_hz,
                                   SweepDirection direction);

/// Deterministic data-driven start: gamma from the abscissa span, center
/// from the largest baseline deviation, epsilon from the deviation
/// amplitude, baseline from the weighted median of (d - e).
LorentzianParams auto_initialize(const MeasurementSeries& data,
                                 const CavityGeometry& cavity);

/// Weighted Levenberg-Marquardt fit of the single-line response model
/// (forward-difference Jacobian). Throws ConvergenceError carrying the
/// best-so-far report when the iteration budget runs out, FlatDataError
/// when all ordinates coincide.
FitReport fit_lorentzian(const MeasurementSeries& data, const CavityGeometry& cavity,
                         std::optional<LorentzianParams> init = std::nullopt,
                         const FitOptions& options = {});

/// Weighted degree-5 polynomial least squares via column-pivoted QR on
/// abscissae rescaled to [-1, 1]. Throws ConditioningError on rank
/// deficiency.
FitReport fit_polynomial5(const MeasurementSeries& data);

/// Local pulling factor d(predicted delta_f_d)/d(delta_f_e) of a fit:
/// coefficient arithmetic for polynomial reports, 1/G' at the fitted
/// branch root for Lorentzian reports. Throws DerivativeUndefinedError at
/// a branch jump.
double local_pf(const FitReport& report, double delta_f_e_hz);

}  // namespace modepull
