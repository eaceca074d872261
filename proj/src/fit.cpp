#include "modepull/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace modepull {

namespace {

constexpr double kThresholdBand = 1e-12;
constexpr double kFoldSlopeBand = 1e-9;

void require_finite_point(const MeasurementPoint& p) {
    if (!std::isfinite(p.delta_f_e_hz) || !std::isfinite(p.delta_f_d_hz)) {
        throw InvalidArgumentError("measurement coordinates must be finite");
    }
    if (!std::isfinite(p.weight) || p.weight < 0.0) {
        throw InvalidArgumentError("measurement weight must be finite and >= 0");
    }
}

ResonanceEquation make_equation(const LorentzianParams& params,
                                const CavityGeometry& cavity) {
    ResonanceLine line{params.epsilon, params.gamma_hz, cavity.f_0_hz};
    return ResonanceEquation(cavity, MediumModel::single(line));
}

double epsilon_threshold_per_gamma(const CavityGeometry& cavity) {
    return 8.0 * cavity.p_tot_m() / (cavity.f_0_hz * cavity.p_d_m);
}

/// Weighted lower median: smallest value whose cumulative weight reaches
/// half the total. Reduces to the lower median for unit weights, and is
/// invariant under replacing a duplicated point by one of double weight.
double weighted_median(std::vector<std::pair<double, double>> value_weight) {
    std::stable_sort(value_weight.begin(), value_weight.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double total = 0.0;
    for (const auto& vw : value_weight) {
        total += vw.second;
    }
    double cum = 0.0;
    for (const auto& vw : value_weight) {
        cum += vw.second;
        if (cum >= 0.5 * total) {
            return vw.first;
        }
    }
    return value_weight.back().first;
}

struct Workspace {
    std::vector<double> e;
    std::vector<double> d;
    std::vector<double> sqrt_w;
    double weight_sum = 0.0;
};

// Exact duplicates carry no separate information; merging them into one
// weighted row makes "duplicated point" and "doubled weight" literally the
// same problem.
Workspace build_workspace(const MeasurementSeries& data) {
    Workspace ws;
    ws.e.reserve(data.size());
    ws.d.reserve(data.size());
    std::vector<double> weights;
    weights.reserve(data.size());
    for (const auto& p : data.points()) {
        if (!ws.e.empty() && ws.e.back() == p.delta_f_e_hz &&
            ws.d.back() == p.delta_f_d_hz) {
            weights.back() += p.weight;
        } else {
            ws.e.push_back(p.delta_f_e_hz);
            ws.d.push_back(p.delta_f_d_hz);
            weights.push_back(p.weight);
        }
        ws.weight_sum += p.weight;
    }
    ws.sqrt_w.reserve(weights.size());
    for (double w : weights) {
        ws.sqrt_w.push_back(std::sqrt(w));
    }
    return ws;
}

}  // namespace

const char* to_string(ModelKind kind) {
    return kind == ModelKind::Lorentzian ? "lorentzian" : "polynomial5";
}

MeasurementSeries::MeasurementSeries(std::vector<MeasurementPoint> points,
                                     std::string metadata)
    : points_(std::move(points)), metadata_(std::move(metadata)) {
    for (const auto& p : points_) {
        require_finite_point(p);
    }
    std::stable_sort(points_.begin(), points_.end(),
                     [](const MeasurementPoint& a, const MeasurementPoint& b) {
                         return a.delta_f_e_hz < b.delta_f_e_hz;
                     });
}

double Polynomial5::evaluate(double delta_f_e_hz) const {
    const double t = (delta_f_e_hz - center_hz) / halfspan_hz;
    double acc = 0.0;
    for (int k = 5; k >= 0; --k) {
        acc = acc * t + coeffs_scaled[static_cast<std::size_t>(k)];
    }
    return acc;
}

double Polynomial5::derivative(double delta_f_e_hz) const {
    const double t = (delta_f_e_hz - center_hz) / halfspan_hz;
    double acc = 0.0;
    for (int k = 5; k >= 1; --k) {
        acc = acc * t + k * coeffs_scaled[static_cast<std::size_t>(k)];
    }
    return acc / halfspan_hz;
}

double predict(const LorentzianParams& params, const CavityGeometry& cavity,
               double delta_f_e_hz, SweepDirection direction) {
    validate(cavity);
    const ResonanceEquation eq = make_equation(params, cavity);
    const double x = detail::branch_root_single_line(
        eq, delta_f_e_hz - params.center_offset_hz, direction);
    return x + params.center_offset_hz + params.baseline_offset_hz;
}

std::vector<double> predict_series(const LorentzianParams& params,
                                   const CavityGeometry& cavity,
                                   std::span<const double> delta_f_e_hz,
                                   SweepDirection direction) {
    validate(cavity);
    const ResonanceEquation eq = make_equation(params, cavity);
    std::vector<double> out;
    out.reserve(delta_f_e_hz.size());
    for (double e : delta_f_e_hz) {
        const double x =
            detail::branch_root_single_line(eq, e - params.center_offset_hz, direction);
        out.push_back(x + params.center_offset_hz + params.baseline_offset_hz);
    }
    return out;
}

LorentzianParams auto_initialize(const MeasurementSeries& data,
                                 const CavityGeometry& cavity) {
    validate(cavity);
    const auto& pts = data.points();
    if (pts.empty()) {
        throw InvalidArgumentError("cannot initialize from empty data");
    }
    const double span = pts.back().delta_f_e_hz - pts.front().delta_f_e_hz;

    std::vector<std::pair<double, double>> diff_weight;
    diff_weight.reserve(pts.size());
    for (const auto& p : pts) {
        if (p.weight > 0.0) {
            diff_weight.emplace_back(p.delta_f_d_hz - p.delta_f_e_hz, p.weight);
        }
    }
    if (diff_weight.empty()) {
        throw InvalidArgumentError("all weights are zero");
    }
    const double baseline = weighted_median(diff_weight);

    double amplitude = 0.0;
    double center = pts.front().delta_f_e_hz;
    for (const auto& p : pts) {
        if (p.weight <= 0.0) {
            continue;
        }
        const double deviation = (p.delta_f_d_hz - p.delta_f_e_hz) - baseline;
        if (std::fabs(deviation) > amplitude) {
            amplitude = std::fabs(deviation);
            center = p.delta_f_e_hz;
        }
    }

    LorentzianParams init;
    init.gamma_hz = std::clamp(0.25 * std::fabs(span), 1e3, 1e9);
    init.center_offset_hz = center;
    init.baseline_offset_hz = baseline;
    // Peak deviation of (d - e) equals K*eps/2 for a single line.
    const double coupling = cavity.f_0_hz * cavity.p_d_m / cavity.p_tot_m();
    init.epsilon = 2.0 * amplitude / coupling;
    return init;
}

namespace {

struct LmProblem {
    const Workspace& ws;
    const CavityGeometry& cavity;
    SweepDirection direction;

    Eigen::VectorXd residual_vector(const LorentzianParams& params) const {
        const auto pred = predict_series(params, cavity, ws.e, direction);
        Eigen::VectorXd r(static_cast<Eigen::Index>(ws.e.size()));
        for (std::size_t i = 0; i < ws.e.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = ws.sqrt_w[i] * (pred[i] - ws.d[i]);
        }
        return r;
    }
};

std::array<double, 4> as_array(const LorentzianParams& p) {
    return {p.epsilon, p.gamma_hz, p.center_offset_hz, p.baseline_offset_hz};
}

LorentzianParams from_array(const std::array<double, 4>& a) {
    return LorentzianParams{a[0], a[1], a[2], a[3]};
}

}  // namespace

FitReport fit_lorentzian(const MeasurementSeries& data, const CavityGeometry& cavity,
                         std::optional<LorentzianParams> init,
                         const FitOptions& options) {
    validate(cavity);
    const auto& pts = data.points();
    if (pts.size() < 8) {
        throw InvalidArgumentError("Lorentzian fit needs at least 8 points");
    }
    const Workspace ws = build_workspace(data);
    if (!(ws.weight_sum > 0.0)) {
        throw InvalidArgumentError("all weights are zero");
    }
    {
        double d_min = std::numeric_limits<double>::infinity();
        double d_max = -std::numeric_limits<double>::infinity();
        for (const auto& p : pts) {
            if (p.weight > 0.0) {
                d_min = std::min(d_min, p.delta_f_d_hz);
                d_max = std::max(d_max, p.delta_f_d_hz);
            }
        }
        if (!(d_max - d_min > 1e-9)) {
            throw FlatDataError("all lasing detunings coincide; nothing to fit");
        }
    }

    const double eth_per_gamma = epsilon_threshold_per_gamma(cavity);
    const LorentzianParams start = init.value_or(auto_initialize(data, cavity));

    std::string warning;
    auto clamp_params = [&](std::array<double, 4>& theta) {
        bool clamped = false;
        const double gamma_old = theta[1];
        theta[1] = std::clamp(theta[1], options.gamma_min_hz, options.gamma_max_hz);
        clamped |= theta[1] != gamma_old;
        const double eps_hi = options.epsilon_max_thresholds * eth_per_gamma * theta[1];
        const double eps_old = theta[0];
        theta[0] = std::clamp(theta[0], 0.0, eps_hi);
        clamped |= theta[0] != eps_old;
        if (clamped && warning.empty()) {
            warning = "parameters clamped to bounds during optimization";
        }
    };

    std::array<double, 4> theta = as_array(start);
    clamp_params(theta);

    // Parameter scales for difference steps and the step-norm criterion.
    std::array<double, 4> scale0 = {
        std::max(std::fabs(theta[0]), 1e-3 * eth_per_gamma * theta[1]),
        std::max(std::fabs(theta[1]), options.gamma_min_hz),
        std::max({std::fabs(theta[2]), theta[1], 1.0}),
        std::max({std::fabs(theta[3]), theta[1], 1.0}),
    };

    const LmProblem problem{ws, cavity, options.direction};
    Eigen::VectorXd r = problem.residual_vector(from_array(theta));
    double rss = r.squaredNorm();

    std::array<double, 4> best_theta = theta;
    double best_rss = rss;

    double lambda = 1e-3;
    int iterations = 0;
    bool declared = false;  // contract-level convergence criteria met
    bool refined = false;   // tightened criteria met after declaration
    int polish_left = 15;   // extra refinement budget once declared

    while (iterations < options.max_iterations && !refined) {
        ++iterations;

        Eigen::MatrixXd jac(r.size(), 4);
        for (int j = 0; j < 4; ++j) {
            const std::size_t js = static_cast<std::size_t>(j);
            const double scale = std::max(std::fabs(theta[js]), scale0[js]);
            const double h = 1e-6 * scale;
            std::array<double, 4> theta_h = theta;
            theta_h[js] += h;
            const Eigen::VectorXd r_h = problem.residual_vector(from_array(theta_h));
            jac.col(j) = (r_h - r) / h;
        }

        const Eigen::Matrix4d hessian = jac.transpose() * jac;
        const Eigen::Vector4d gradient = jac.transpose() * r;
        const double diag_floor = 1e-12 * hessian.diagonal().maxCoeff() +
                                  std::numeric_limits<double>::min();

        const double rss_before = rss;
        bool accepted = false;
        std::array<double, 4> step{};
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::Matrix4d damped = hessian;
            for (int j = 0; j < 4; ++j) {
                damped(j, j) += lambda * std::max(hessian(j, j), diag_floor);
            }
            const Eigen::Vector4d delta = damped.ldlt().solve(-gradient);
            std::array<double, 4> theta_try = theta;
            for (int j = 0; j < 4; ++j) {
                theta_try[static_cast<std::size_t>(j)] += delta[j];
            }
            clamp_params(theta_try);
            const Eigen::VectorXd r_try = problem.residual_vector(from_array(theta_try));
            const double rss_try = r_try.squaredNorm();
            if (std::isfinite(rss_try) && rss_try < rss) {
                for (int j = 0; j < 4; ++j) {
                    const std::size_t js = static_cast<std::size_t>(j);
                    step[js] = theta_try[js] - theta[js];
                }
                theta = theta_try;
                r = r_try;
                rss = rss_try;
                lambda = std::max(lambda * 0.1, 1e-14);
                accepted = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e14) {
                break;
            }
        }

        if (rss < best_rss) {
            best_rss = rss;
            best_theta = theta;
        }

        if (!accepted) {
            // No damping produces a downhill step; numerically at a local
            // minimum.
            declared = true;
            break;
        }

        const double improvement =
            (rss_before - rss) / std::max(rss_before, std::numeric_limits<double>::min());
        double step_norm = 0.0;
        for (int j = 0; j < 4; ++j) {
            const std::size_t js = static_cast<std::size_t>(j);
            step_norm = std::max(
                step_norm, std::fabs(step[js]) / std::max(std::fabs(theta[js]), scale0[js]));
        }

        if (improvement < options.rss_rel_tol || step_norm < options.step_rel_tol) {
            declared = true;
        }
        if (declared) {
            if (improvement < 1e-15 || step_norm < 1e-12 || --polish_left <= 0) {
                refined = true;
            }
        }
    }

    const LorentzianParams fitted = from_array(best_theta);
    FitReport report;
    report.model_kind = ModelKind::Lorentzian;
    report.lorentzian = fitted;
    report.cavity = cavity;
    report.rss = best_rss;
    report.converged = declared;
    report.iterations = iterations;
    report.warning = warning;
    report.direction = options.direction;

    std::vector<double> abscissae;
    abscissae.reserve(pts.size());
    for (const auto& p : pts) {
        abscissae.push_back(p.delta_f_e_hz);
    }
    const auto predictions = predict_series(fitted, cavity, abscissae, options.direction);
    report.residuals.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        report.residuals.push_back(pts[i].delta_f_d_hz - predictions[i]);
    }

    report.epsilon_threshold = eth_per_gamma * fitted.gamma_hz;
    report.epsilon_ratio = fitted.epsilon / report.epsilon_threshold;
    if (fitted.epsilon > 0.0) {
        if (std::fabs(report.epsilon_ratio - 1.0) < kThresholdBand) {
            report.warning += std::string(report.warning.empty() ? "" : "; ") +
                              "fit landed on the bifurcation threshold; extrema omitted";
        } else {
            report.extrema = pf_extrema(
                cavity, ResonanceLine{fitted.epsilon, fitted.gamma_hz, cavity.f_0_hz});
        }
    } else {
        PfExtrema trivial;
        trivial.pf_max = 1.0;
        trivial.pf_min = 1.0;
        trivial.detuning_at_max_hz = std::sqrt(3.0) * fitted.gamma_hz;
        trivial.detuning_at_min_hz = 0.0;
        trivial.bifurcating = false;
        trivial.epsilon_ratio = 0.0;
        report.extrema = trivial;
    }

    if (!declared) {
        throw ConvergenceError("Lorentzian fit did not converge within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               report);
    }
    return report;
}

FitReport fit_polynomial5(const MeasurementSeries& data) {
    const auto& pts = data.points();
    if (pts.size() < 7) {
        throw InvalidArgumentError("degree-5 polynomial fit needs at least 7 points");
    }
    const Workspace ws = build_workspace(data);
    if (!(ws.weight_sum > 0.0)) {
        throw InvalidArgumentError("all weights are zero");
    }

    const double e_min = pts.front().delta_f_e_hz;
    const double e_max = pts.back().delta_f_e_hz;
    const double center = 0.5 * (e_min + e_max);
    const double halfspan = 0.5 * (e_max - e_min);
    if (!(halfspan > 0.0)) {
        throw ConditioningError("all abscissae coincide");
    }

    const Eigen::Index n = static_cast<Eigen::Index>(ws.e.size());
    Eigen::MatrixXd design(n, 6);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t is = static_cast<std::size_t>(i);
        const double t = (ws.e[is] - center) / halfspan;
        double power = 1.0;
        for (int k = 0; k < 6; ++k) {
            design(i, k) = ws.sqrt_w[is] * power;
            power *= t;
        }
        y[i] = ws.sqrt_w[is] * ws.d[is];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 6) {
        throw ConditioningError(
            "rank-deficient polynomial system (duplicated abscissae?)");
    }
    const Eigen::VectorXd coeffs = qr.solve(y);

    Polynomial5 poly;
    poly.center_hz = center;
    poly.halfspan_hz = halfspan;
    for (int k = 0; k < 6; ++k) {
        poly.coeffs_scaled[static_cast<std::size_t>(k)] = coeffs[k];
    }
    // Expand sum a_k ((e - c)/h)^k into raw powers of e via binomials.
    poly.coeffs_hz.fill(0.0);
    for (int k = 0; k < 6; ++k) {
        const double a_k = poly.coeffs_scaled[static_cast<std::size_t>(k)];
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            if (j > 0) {
                binom = binom * (k - j + 1) / j;
            }
            poly.coeffs_hz[static_cast<std::size_t>(j)] +=
                a_k * binom * std::pow(-center, k - j) / std::pow(halfspan, k);
        }
    }

    FitReport report;
    report.model_kind = ModelKind::Polynomial5;
    report.polynomial = poly;
    report.rss = (design * coeffs - y).squaredNorm();
    report.residuals.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        report.residuals.push_back(ws.d[i] - poly.evaluate(ws.e[i]));
    }
    report.converged = true;
    report.iterations = 1;
    return report;
}

double local_pf(const FitReport& report, double delta_f_e_hz) {
    if (!report.converged) {
        throw InvalidArgumentError("local pulling factor requires a converged fit");
    }
    if (report.model_kind == ModelKind::Polynomial5) {
        if (!report.polynomial) {
            throw InvalidArgumentError("polynomial report carries no coefficients");
        }
        return report.polynomial->derivative(delta_f_e_hz);
    }
    if (!report.lorentzian || !report.cavity) {
        throw InvalidArgumentError("Lorentzian report carries no parameters");
    }
    const auto& params = *report.lorentzian;
    const ResonanceEquation eq = make_equation(params, *report.cavity);
    const double x = detail::branch_root_single_line(
        eq, delta_f_e_hz - params.center_offset_hz, report.direction);
    const double slope = eq.residual_slope(x);
    if (std::fabs(slope) < kFoldSlopeBand) {
        throw DerivativeUndefinedError(
            "response slope undefined at a branch jump (delta_f_e = " +
            std::to_string(delta_f_e_hz) + " Hz)");
    }
    return 1.0 / slope;
}

}  // namespace modepull
