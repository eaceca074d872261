#include "modepull/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace modepull {

namespace {

void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw InvalidArgumentError(std::string(what) + " must be finite");
    }
}

std::string format_hz(double value) {
    std::ostringstream os;
    os.precision(12);
    os << value;
    return os.str();
}

// Bisect a sign-change bracket of f down to x_tol, then polish with Newton
// steps safeguarded by the bracket until |f| <= f_tol.
template <typename F, typename DF>
double refine_bracket(F&& f, DF&& df, double a, double b, double fa, double fb,
                      double x_tol, double f_tol) {
    while (b - a > x_tol) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) {
            break;  // interval exhausted at double precision
        }
        const double fm = f(mid);
        if (fm == 0.0) {
            return mid;
        }
        if (std::signbit(fm) == std::signbit(fa)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    // Newton polish, safeguarded by the bracket. Runs past the contract
    // tolerance f_tol toward a 1e-3 * f_tol target so well-conditioned
    // roots come out near machine precision.
    const double target = 1e-3 * f_tol;
    double x = 0.5 * (a + b);
    double fx = f(x);
    for (int iter = 0; iter < 24 && std::fabs(fx) > target; ++iter) {
        const double slope = df(x);
        double next = x - fx / slope;
        if (!std::isfinite(next) || next <= a || next >= b) {
            next = std::signbit(fx) == std::signbit(fa) ? 0.5 * (x + b) : 0.5 * (a + x);
        }
        if (next == x) {
            break;
        }
        const double fn = f(next);
        // keep the bracket valid
        if (std::signbit(fn) == std::signbit(fa)) {
            a = next;
            fa = fn;
        } else {
            b = next;
            fb = fn;
        }
        x = next;
        fx = fn;
    }
    return x;
}

}  // namespace

const char* to_string(SweepDirection direction) {
    return direction == SweepDirection::Up ? "up" : "down";
}

SweepDirection sweep_direction_from_string(const std::string& text) {
    if (text == "up") {
        return SweepDirection::Up;
    }
    if (text == "down") {
        return SweepDirection::Down;
    }
    throw InvalidArgumentError("sweep direction must be 'up' or 'down', got '" + text + "'");
}

ResonanceEquation::ResonanceEquation(CavityGeometry cavity, MediumModel medium)
    : cavity_(cavity), medium_(std::move(medium)) {
    validate(cavity_);
    coupling_hz_ = cavity_.f_0_hz * cavity_.p_d_m / cavity_.p_tot_m();
    gamma_ref_hz_ = medium_.dominant_line().gamma_hz;
    center_hz_ = medium_.dominant_offset_hz();
    reach_hz_ = coupling_hz_ * medium_.max_index_deviation();
}

double ResonanceEquation::residual(double delta_f_d_hz) const {
    return delta_f_d_hz + coupling_hz_ * index_deviation(medium_, delta_f_d_hz);
}

double ResonanceEquation::residual_slope(double delta_f_d_hz) const {
    return 1.0 + coupling_hz_ * index_derivative(medium_, delta_f_d_hz);
}

double ResonanceEquation::residual_curvature(double delta_f_d_hz) const {
    return coupling_hz_ * index_second_derivative(medium_, delta_f_d_hz);
}

namespace detail {

std::vector<double> roots_in_interval(const ResonanceEquation& equation,
                                      double delta_f_e_hz, double lo_hz, double hi_hz,
                                      int grid) {
    if (!(hi_hz > lo_hz)) {
        throw InvalidArgumentError("root search interval is empty");
    }
    grid = std::max(grid, 16);
    const double gamma = equation.gamma_ref_hz();
    const double x_tol = 1e-6 * gamma;
    const double f_tol = 1e-6 * gamma;
    auto f = [&](double x) { return equation.residual(x) - delta_f_e_hz; };
    auto df = [&](double x) { return equation.residual_slope(x); };

    std::vector<double> roots;
    const double step = (hi_hz - lo_hz) / (grid - 1);
    double x_prev = lo_hz;
    double f_prev = f(x_prev);
    if (f_prev == 0.0) {
        roots.push_back(x_prev);
    }
    for (int k = 1; k < grid; ++k) {
        const double x_k = (k == grid - 1) ? hi_hz : lo_hz + k * step;
        const double f_k = f(x_k);
        if (f_k == 0.0) {
            roots.push_back(x_k);
        } else if (f_prev != 0.0 && std::signbit(f_prev) != std::signbit(f_k)) {
            roots.push_back(refine_bracket(f, df, x_prev, x_k, f_prev, f_k, x_tol, f_tol));
        }
        x_prev = x_k;
        f_prev = f_k;
    }
    return roots;
}

std::vector<double> cubic_roots_single_line(const ResonanceEquation& equation,
                                            double delta_f_e_hz) {
    require_finite(delta_f_e_hz, "delta_f_e");
    const auto& medium = equation.medium();
    if (!medium.is_single_line()) {
        throw InvalidArgumentError("cubic root path supports single-line media only");
    }
    const auto& line = medium.lines().front();
    const double offset = medium.offsets_hz().front();
    const double target = delta_f_e_hz - offset;  // line-local detuning
    if (line.epsilon == 0.0) {
        return {delta_f_e_hz};
    }

    // G(y) = e' multiplied through by (y^2 + g^2) is the monic cubic
    //   y^3 - e' y^2 + (g^2 + Q) y - e' g^2 = 0,  Q = K * eps * g,
    // which has the same real roots since y^2 + g^2 > 0.
    const double g = line.gamma_hz;
    const double coupling_term = equation.coupling_hz() * line.epsilon * g;
    const double a = -target;
    const double b = g * g + coupling_term;
    const double c = -target * g * g;

    std::array<double, 3> cube{};
    int count = 0;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    const double q3 = q * q * q;
    if (r * r < q3) {
        const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
        const double m = -2.0 * std::sqrt(q);
        constexpr double tau = 2.0 * std::numbers::pi;
        cube[0] = m * std::cos(theta / 3.0) - a / 3.0;
        cube[1] = m * std::cos((theta + tau) / 3.0) - a / 3.0;
        cube[2] = m * std::cos((theta - tau) / 3.0) - a / 3.0;
        count = 3;
    } else {
        const double big = -std::copysign(std::cbrt(std::fabs(r) + std::sqrt(r * r - q3)), r);
        const double small = (big != 0.0) ? q / big : 0.0;
        cube[0] = (big + small) - a / 3.0;
        count = 1;
    }

    std::vector<double> roots;
    roots.reserve(count);
    const double f_tol = 1e-9 * g;
    const double step_cap = 0.5 * g;
    for (int i = 0; i < count; ++i) {
        double x = cube[i] + offset;
        for (int iter = 0; iter < 4; ++iter) {
            const double fx = equation.residual(x) - delta_f_e_hz;
            if (std::fabs(fx) <= f_tol) {
                break;
            }
            const double slope = equation.residual_slope(x);
            const double step = fx / slope;
            if (!std::isfinite(step) || std::fabs(step) > step_cap) {
                break;  // near-fold root: the closed form is already as good as it gets
            }
            x -= step;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

double branch_root_single_line(const ResonanceEquation& equation, double delta_f_e_hz,
                               SweepDirection direction) {
    const auto roots = cubic_roots_single_line(equation, delta_f_e_hz);
    return direction == SweepDirection::Up ? roots.front() : roots.back();
}

}  // namespace detail

std::vector<double> solve_all_roots(const ResonanceEquation& equation,
                                    double delta_f_e_hz,
                                    std::optional<double> window_hz) {
    require_finite(delta_f_e_hz, "delta_f_e");
    const double width = window_hz.value_or(20.0 * equation.gamma_ref_hz());
    if (!std::isfinite(width) || width <= 0.0) {
        throw InvalidArgumentError("search window must be > 0");
    }
    const double center = equation.center_hz();
    auto roots = detail::roots_in_interval(equation, delta_f_e_hz, center - 0.5 * width,
                                           center + 0.5 * width, 2048);
    if (roots.empty()) {
        throw NoSolutionError("no lasing solution within the search window at delta_f_e = " +
                              format_hz(delta_f_e_hz) + " Hz");
    }
    return roots;
}

ResponseCurve sweep(const ResonanceEquation& equation, double start_hz, double stop_hz,
                    int n_points, SweepDirection direction, const SweepOptions& options) {
    require_finite(start_hz, "sweep start");
    require_finite(stop_hz, "sweep stop");
    if (n_points < 2) {
        throw InvalidArgumentError("sweep needs at least 2 points");
    }
    if (start_hz == stop_hz) {
        throw InvalidArgumentError("sweep start and stop must differ");
    }
    const bool ascending = stop_hz > start_hz;
    if (ascending != (direction == SweepDirection::Up)) {
        throw InvalidArgumentError("sweep direction must match the start/stop ordering");
    }

    const double gamma = equation.gamma_ref_hz();
    const double radius = options.continuation_radius_gammas * gamma;
    double lo = 0.0;
    double hi = 0.0;
    if (options.window_hz) {
        if (!(*options.window_hz > 0.0)) {
            throw InvalidArgumentError("search window must be > 0");
        }
        lo = equation.center_hz() - 0.5 * *options.window_hz;
        hi = equation.center_hz() + 0.5 * *options.window_hz;
    } else {
        const double margin = equation.dispersion_reach_hz() + 2.0 * gamma;
        lo = std::min(start_hz, stop_hz) - margin;
        hi = std::max(start_hz, stop_hz) + margin;
        lo = std::min(lo, equation.center_hz() - 10.0 * gamma);
        hi = std::max(hi, equation.center_hz() + 10.0 * gamma);
    }

    ResponseCurve curve;
    curve.direction = direction;
    curve.branch_policy = "nearest-root continuation; jump to nearest root in sweep direction";
    curve.samples.reserve(static_cast<std::size_t>(n_points));

    int branch = 0;
    double prev_x = 0.0;
    double prev_e = 0.0;
    for (int k = 0; k < n_points; ++k) {
        const double t = static_cast<double>(k) / (n_points - 1);
        const double e = (k == n_points - 1) ? stop_hz : start_hz + t * (stop_hz - start_hz);
        if (k > 0 && e == prev_e) {
            throw InvalidArgumentError("sweep grid too dense: consecutive points coincide");
        }
        const auto roots =
            detail::roots_in_interval(equation, e, lo, hi, options.bracket_grid);
        if (roots.empty()) {
            throw NoSolutionError("no lasing solution within the search window at delta_f_e = " +
                                  format_hz(e) + " Hz");
        }

        double x = 0.0;
        if (k == 0) {
            x = ascending ? roots.front() : roots.back();
        } else {
            x = *std::min_element(roots.begin(), roots.end(), [&](double u, double v) {
                return std::fabs(u - prev_x) < std::fabs(v - prev_x);
            });
            if (std::fabs(x - prev_x) > radius) {
                // The branch vanished; move to the nearest root ahead of the
                // old solution in the sweep direction (falling back to the
                // nearest overall if none lies ahead).
                double jump_to = x;
                if (ascending) {
                    auto it = std::upper_bound(roots.begin(), roots.end(), prev_x);
                    if (it != roots.end()) {
                        jump_to = *it;
                    }
                } else {
                    auto it = std::lower_bound(roots.begin(), roots.end(), prev_x);
                    if (it != roots.begin()) {
                        jump_to = *(--it);
                    }
                }
                x = jump_to;
                curve.jumps.push_back(JumpRecord{e, branch, branch + 1, prev_x, x});
                ++branch;
            }
        }

        const double slope = equation.residual_slope(x);
        curve.samples.push_back(ResponseSample{e, x, 1.0 / slope, branch});
        prev_x = x;
        prev_e = e;
    }
    return curve;
}

std::vector<FoldPoint> fold_points(const ResonanceEquation& equation,
                                   std::optional<double> window_hz) {
    if (!equation.medium().is_single_line()) {
        throw InvalidArgumentError("fold enumeration supports single-line media only");
    }
    const double gamma = equation.gamma_ref_hz();
    const double width = window_hz.value_or(20.0 * gamma);
    if (!std::isfinite(width) || width <= 0.0) {
        throw InvalidArgumentError("search window must be > 0");
    }
    const double lo = equation.center_hz() - 0.5 * width;
    const double hi = equation.center_hz() + 0.5 * width;
    constexpr int kGrid = 8192;
    constexpr double kTangencyBand = 1e-9;  // |G'| below this counts as a fold

    auto slope = [&](double x) { return equation.residual_slope(x); };
    auto curvature = [&](double x) { return equation.residual_curvature(x); };

    std::vector<FoldPoint> folds;
    const double step = (hi - lo) / (kGrid - 1);
    const double x_tol = 1e-9 * gamma;

    // Transversal folds: sign changes of G'.
    double x_prev = lo;
    double s_prev = slope(x_prev);
    for (int k = 1; k < kGrid; ++k) {
        const double x_k = (k == kGrid - 1) ? hi : lo + k * step;
        const double s_k = slope(x_k);
        if (s_k == 0.0) {
            folds.push_back(FoldPoint{x_k, equation.residual(x_k), false});
        } else if (s_prev != 0.0 && std::signbit(s_prev) != std::signbit(s_k)) {
            const double x =
                refine_bracket(slope, curvature, x_prev, x_k, s_prev, s_k, x_tol, 0.0);
            folds.push_back(FoldPoint{x, equation.residual(x), false});
        }
        x_prev = x_k;
        s_prev = s_k;
    }

    // Tangencies: extrema of G' (sign changes of G'') where |G'| sits
    // inside the tolerance band without crossing zero.
    x_prev = lo;
    double c_prev = curvature(x_prev);
    for (int k = 1; k < kGrid; ++k) {
        const double x_k = (k == kGrid - 1) ? hi : lo + k * step;
        const double c_k = curvature(x_k);
        if (c_prev != 0.0 && c_k != 0.0 && std::signbit(c_prev) != std::signbit(c_k)) {
            double a = x_prev;
            double b = x_k;
            double ca = c_prev;
            while (b - a > x_tol) {
                const double mid = 0.5 * (a + b);
                const double cm = curvature(mid);
                if (cm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (std::signbit(cm) == std::signbit(ca)) {
                    a = mid;
                    ca = cm;
                } else {
                    b = mid;
                }
            }
            const double x_star = 0.5 * (a + b);
            if (std::fabs(slope(x_star)) < kTangencyBand) {
                const bool already_found =
                    std::any_of(folds.begin(), folds.end(), [&](const FoldPoint& fp) {
                        return std::fabs(fp.delta_f_d_hz - x_star) < 1e-3 * gamma;
                    });
                if (!already_found) {
                    folds.push_back(FoldPoint{x_star, equation.residual(x_star), true});
                }
            }
        }
        x_prev = x_k;
        c_prev = c_k;
    }

    std::sort(folds.begin(), folds.end(), [](const FoldPoint& a, const FoldPoint& b) {
        return a.delta_f_d_hz < b.delta_f_d_hz;
    });
    return folds;
}

std::vector<PullingFigure> pf_profile(const ResonanceEquation& equation,
                                      std::span<const double> detunings_hz) {
    std::vector<PullingFigure> out;
    out.reserve(detunings_hz.size());
    for (double detuning : detunings_hz) {
        out.push_back(pulling_factor(equation.cavity(), equation.medium(), detuning));
    }
    return out;
}

}  // namespace modepull
