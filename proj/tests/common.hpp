#pragma once

// Shared fixtures and reference computations for the test suites. The
// oracle helpers are deliberately independent of the library code paths
// they check.

#include <cmath>
#include <functional>
#include <vector>

#include "modepull/dispersion.hpp"
#include "modepull/solver.hpp"

namespace testfix {

inline constexpr double kFm = 299792458.0 / 795e-9;
inline constexpr double kGamma = 6e6;
inline constexpr double kPTot = 0.80;
inline constexpr double kPD = 0.022;

inline modepull::CavityGeometry geometry() {
    return modepull::CavityGeometry::from_total(kPTot, kPD, kFm);
}

/// Single gain line at the given fraction of the bifurcation threshold.
inline modepull::ResonanceLine line_at_ratio(double ratio, double gamma = kGamma) {
    modepull::ResonanceLine line{0.0, gamma, kFm};
    line.epsilon = ratio * modepull::epsilon_threshold(geometry(), line);
    return line;
}

inline modepull::ResonanceEquation equation_at_ratio(double ratio,
                                                     double gamma = kGamma) {
    return modepull::ResonanceEquation(
        geometry(), modepull::MediumModel::single(line_at_ratio(ratio, gamma)));
}

}  // namespace testfix

namespace oracles {

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Root count of f on [lo, hi] by dense sign scanning.
inline int count_roots_dense(const std::function<double(double)>& f, double lo,
                             double hi, int n) {
    int count = 0;
    double prev = f(lo);
    if (prev == 0.0) {
        ++count;
    }
    for (int k = 1; k < n; ++k) {
        const double x = lo + (hi - lo) * k / (n - 1);
        const double cur = f(x);
        if (cur == 0.0) {
            ++count;
        } else if (prev != 0.0 && std::signbit(prev) != std::signbit(cur)) {
            ++count;
        }
        prev = cur;
    }
    return count;
}

/// Roots of f on [lo, hi]: dense scan plus plain bisection, no derivative
/// information.
inline std::vector<double> scan_roots_bisect(const std::function<double(double)>& f,
                                             double lo, double hi, int n,
                                             double x_tol) {
    std::vector<double> roots;
    double x_prev = lo;
    double f_prev = f(lo);
    for (int k = 1; k < n; ++k) {
        const double x_k = lo + (hi - lo) * k / (n - 1);
        const double f_k = f(x_k);
        if (f_k == 0.0) {
            roots.push_back(x_k);
        } else if (f_prev != 0.0 && std::signbit(f_prev) != std::signbit(f_k)) {
            double a = x_prev;
            double b = x_k;
            double fa = f_prev;
            while (b - a > x_tol) {
                const double mid = 0.5 * (a + b);
                if (mid <= a || mid >= b) {
                    break;
                }
                const double fm = f(mid);
                if (fm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        x_prev = x_k;
        f_prev = f_k;
    }
    return roots;
}

/// Squared fold locations of a single gain line in gamma^2 units:
/// stationary points of the response map satisfy
///   u^2 + (2 - 8r) u + (1 + 8r) = 0,  u = (x/gamma)^2,
/// so u = (4r - 1) +- 4 sqrt(r (r - 1)); real only at or above threshold.
inline bool fold_squares(double ratio, double& u_low, double& u_high) {
    const double disc = ratio * (ratio - 1.0);
    if (disc < 0.0) {
        return false;
    }
    u_low = (4.0 * ratio - 1.0) - 4.0 * std::sqrt(disc);
    u_high = (4.0 * ratio - 1.0) + 4.0 * std::sqrt(disc);
    return true;
}

/// Independent evaluation of the response residual map for a single line
/// centered at zero offset: G(x) = x + K eps g x / (x^2 + g^2).
inline double response_map(const modepull::CavityGeometry& geometry,
                           const modepull::ResonanceLine& line, double x) {
    const double coupling = geometry.f_0_hz * geometry.p_d_m / geometry.p_tot_m();
    return x + coupling * line.epsilon * line.gamma_hz * x /
                   (x * x + line.gamma_hz * line.gamma_hz);
}

inline double sample_std(const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    return std::sqrt(var / static_cast<double>(values.size() - 1));
}

}  // namespace oracles
