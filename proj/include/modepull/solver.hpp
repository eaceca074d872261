#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modepull/dispersion.hpp"

namespace modepull {

enum class SweepDirection { Up, Down };

const char* to_string(SweepDirection direction);
SweepDirection sweep_direction_from_string(const std::string& text);

/// Implicit lasing-resonance map. A lasing detuning x and the empty-cavity
/// detuning e it answers to are linked by the residual map
///   G(x) = x + K * (n(x) - 1) = e,    K = f_0 * p_d / p_tot.
/// Along a solution branch d(delta_f_d)/d(delta_f_e) = 1 / G'(x), which is
/// the local pulling factor. Immutable after construction; all queries are
/// const and safe to call concurrently.
class ResonanceEquation {
public:
    ResonanceEquation(CavityGeometry cavity, MediumModel medium);

    double coupling_hz() const { return coupling_hz_; }
    const CavityGeometry& cavity() const { return cavity_; }
    const MediumModel& medium() const { return medium_; }

    /// G(x).
    double residual(double delta_f_d_hz) const;
    /// G'(x); its reciprocal is the local pulling factor.
    double residual_slope(double delta_f_d_hz) const;
    /// G''(x).
    double residual_curvature(double delta_f_d_hz) const;

    /// Half-width scale of the dominant line, used for tolerances.
    double gamma_ref_hz() const { return gamma_ref_hz_; }
    /// Center of the dominant line relative to the medium reference.
    double center_hz() const { return center_hz_; }
    /// Upper bound on |G(x) - x|; every root of G(x) = e lies within this
    /// distance of e.
    double dispersion_reach_hz() const { return reach_hz_; }

private:
    CavityGeometry cavity_;
    MediumModel medium_;
    double coupling_hz_ = 0.0;
    double gamma_ref_hz_ = 0.0;
    double center_hz_ = 0.0;
    double reach_hz_ = 0.0;
};

struct ResponseSample {
    double delta_f_e_hz;
    double delta_f_d_hz;
    double pf;  // 1 / G'(delta_f_d)
    int branch_id;
};

struct JumpRecord {
    double delta_f_e_hz;  // first swept point that landed on the new branch
    int from_branch;
    int to_branch;
    double from_delta_f_d_hz;
    double to_delta_f_d_hz;
};

struct ResponseCurve {
    std::vector<ResponseSample> samples;  // in sweep order
    std::vector<JumpRecord> jumps;
    SweepDirection direction = SweepDirection::Up;
    std::string branch_policy;  // root-selection policy tag, echoed in metadata
};

struct SweepOptions {
    /// A branch is considered to survive a step while some root stays
    /// within this many dominant half-widths of the previous solution;
    /// otherwise a jump is recorded to the nearest root in the sweep
    /// direction.
    double continuation_radius_gammas = 3.0;
    /// Node count of the bracketing grid used per root solve.
    int bracket_grid = 2048;
    /// Optional explicit search window (width, centered on the dominant
    /// line). Default: automatic, derived from the sweep range and the
    /// dispersion reach.
    std::optional<double> window_hz;
};

struct FoldPoint {
    double delta_f_d_hz;
    double delta_f_e_hz;
    /// True when G' only touches zero (threshold case: two folds
    /// coalesced) rather than crossing it.
    bool degenerate;
};

/// All solutions of G(x) = delta_f_e inside a window centered on the
/// dominant line (default width 20*gamma), ascending. Brackets sign
/// changes of G - delta_f_e on a uniform grid, bisects each bracket to
/// 1e-6*gamma and polishes with safeguarded Newton steps so that every
/// root satisfies |G(x) - delta_f_e| < 1e-6*gamma. Throws NoSolutionError
/// when the window contains no root.
std::vector<double> solve_all_roots(const ResonanceEquation& equation,
                                    double delta_f_e_hz,
                                    std::optional<double> window_hz = std::nullopt);

/// March delta_f_e from start to stop (inclusive, n_points samples) and
/// continue the lasing branch: each step selects the root nearest the
/// previous solution; when no root survives within the continuation
/// radius, a jump to the nearest root in the sweep direction is recorded
/// and the branch id increments. The first point starts on the branch a
/// sweep entering from outside the range would arrive on (smallest root
/// for up, largest for down).
ResponseCurve sweep(const ResonanceEquation& equation, double start_hz, double stop_hz,
                    int n_points, SweepDirection direction,
                    const SweepOptions& options = {});

/// Stationary points of the response map: solutions of G'(x) = 0 with
/// their empty-cavity detunings, ascending in delta_f_d. Empty below the
/// bifurcation threshold; tangencies within |G'| < 1e-9 are reported as
/// degenerate folds (threshold case). Single-line media only.
std::vector<FoldPoint> fold_points(const ResonanceEquation& equation,
                                   std::optional<double> window_hz = std::nullopt);

/// Pulling factor at each lasing-side detuning; pole errors propagate.
std::vector<PullingFigure> pf_profile(const ResonanceEquation& equation,
                                      std::span<const double> detunings_hz);

namespace detail {

/// Roots of G(x) = delta_f_e inside [lo, hi], ascending.
std::vector<double> roots_in_interval(const ResonanceEquation& equation,
                                      double delta_f_e_hz, double lo_hz, double hi_hz,
                                      int grid);

/// All real solutions of G(x) = delta_f_e for a single-line medium via the
/// equivalent cubic, ascending; no window restriction. Much faster than
/// bracketing, used on fitting hot paths.
std::vector<double> cubic_roots_single_line(const ResonanceEquation& equation,
                                            double delta_f_e_hz);

/// The solution a monotone sweep entering from the given direction's far
/// side would arrive at: smallest root for Up, largest for Down.
double branch_root_single_line(const ResonanceEquation& equation, double delta_f_e_hz,
                               SweepDirection direction);

}  // namespace detail

}  // namespace modepull
