#include "modepull/report.hpp"

#include <cmath>
#include <sstream>

#include "modepull/csv.hpp"
#include "modepull/version.hpp"

namespace modepull {

using nlohmann::json;

namespace {

json finite_or_null(double value) {
    if (std::isfinite(value)) {
        return value;
    }
    return nullptr;
}

}  // namespace

json make_provenance(const std::string& subcommand, const json& resolved_config) {
    return json{{"tool", "modepull"},
                {"version", kVersion},
                {"subcommand", subcommand},
                {"config", resolved_config}};
}

json to_json(const Interval& interval) {
    return json{{"lower", finite_or_null(interval.lower)},
                {"point", finite_or_null(interval.point)},
                {"upper", finite_or_null(interval.upper)},
                {"upper_unbounded", interval.upper_unbounded}};
}

json to_json(const PfExtrema& extrema) {
    json out{{"pf_min", extrema.pf_min},
             {"detuning_at_max_hz", extrema.detuning_at_max_hz},
             {"detuning_at_min_hz", extrema.detuning_at_min_hz},
             {"bifurcating", extrema.bifurcating},
             {"epsilon_ratio", extrema.epsilon_ratio}};
    out["pf_max"] = extrema.pf_max ? json(*extrema.pf_max) : json(nullptr);
    return out;
}

json to_json(const FitReport& report) {
    json out;
    out["model_kind"] = to_string(report.model_kind);
    out["rss_hz2"] = report.rss;
    out["converged"] = report.converged;
    out["iterations"] = report.iterations;
    out["warning"] = report.warning;
    out["direction"] = to_string(report.direction);
    out["residuals_hz"] = report.residuals;
    if (report.lorentzian) {
        out["parameters"] = json{{"epsilon", report.lorentzian->epsilon},
                                 {"gamma_hz", report.lorentzian->gamma_hz},
                                 {"center_offset_hz", report.lorentzian->center_offset_hz},
                                 {"baseline_offset_hz", report.lorentzian->baseline_offset_hz}};
        out["derived"] = json{{"epsilon_ratio", report.epsilon_ratio},
                              {"epsilon_threshold", report.epsilon_threshold}};
        if (report.extrema) {
            out["derived"]["extrema"] = to_json(*report.extrema);
        }
    }
    if (report.cavity) {
        out["geometry"] = json{{"p_e_m", report.cavity->p_e_m},
                               {"p_d_m", report.cavity->p_d_m},
                               {"p_tot_m", report.cavity->p_tot_m()},
                               {"f_0_hz", report.cavity->f_0_hz}};
    }
    if (report.polynomial) {
        out["polynomial"] = json{{"coeffs_scaled", report.polynomial->coeffs_scaled},
                                 {"coeffs_hz", report.polynomial->coeffs_hz},
                                 {"center_hz", report.polynomial->center_hz},
                                 {"halfspan_hz", report.polynomial->halfspan_hz}};
    }
    return out;
}

json to_json(const BootstrapReport& report) {
    json samples;
    auto sample_array = [](const std::vector<double>& values) {
        json arr = json::array();
        for (double v : values) {
            arr.push_back(finite_or_null(v));
        }
        return arr;
    };
    samples["pf_max"] = sample_array(report.pf_max_samples);
    samples["pf_min"] = sample_array(report.pf_min_samples);
    samples["epsilon"] = sample_array(report.epsilon_samples);
    samples["gamma"] = sample_array(report.gamma_samples);

    return json{{"intervals",
                 json{{"pf_max", to_json(report.pf_max)},
                      {"pf_min", to_json(report.pf_min)},
                      {"epsilon", to_json(report.epsilon)},
                      {"gamma", to_json(report.gamma)}}},
                {"replicates_requested", report.replicates_requested},
                {"replicate_success_count", report.replicate_success_count},
                {"bifurcation_fraction", report.bifurcation_fraction},
                {"confidence", report.confidence},
                {"bandwidth_hz", report.bandwidth_hz},
                {"seed", report.seed},
                {"method", report.method},
                {"replicate_samples", samples}};
}

json to_json(const JumpRecord& jump) {
    return json{{"delta_f_e_hz", jump.delta_f_e_hz},
                {"from_branch", jump.from_branch},
                {"to_branch", jump.to_branch},
                {"from_delta_f_d_hz", jump.from_delta_f_d_hz},
                {"to_delta_f_d_hz", jump.to_delta_f_d_hz}};
}

json scan_metadata(const ResponseCurve& curve, const CavityGeometry& geometry,
                   const ResonanceLine& line, double epsilon_ratio,
                   const json& provenance) {
    json jumps = json::array();
    for (const auto& jump : curve.jumps) {
        jumps.push_back(to_json(jump));
    }
    return json{{"provenance", provenance},
                {"geometry",
                 json{{"p_e_m", geometry.p_e_m},
                      {"p_d_m", geometry.p_d_m},
                      {"p_tot_m", geometry.p_tot_m()},
                      {"f_0_hz", geometry.f_0_hz}}},
                {"line",
                 json{{"epsilon", line.epsilon},
                      {"gamma_hz", line.gamma_hz},
                      {"f_m_hz", line.f_m_hz}}},
                {"epsilon_ratio", epsilon_ratio},
                {"direction", to_string(curve.direction)},
                {"branch_policy", curve.branch_policy},
                {"jumps", jumps},
                {"samples", curve.samples.size()}};
}

std::string extrema_record(const PfExtrema& extrema, double epsilon,
                           double epsilon_threshold,
                           const std::vector<std::string>& comment_lines) {
    std::ostringstream os;
    for (const auto& line : comment_lines) {
        os << "# " << line << "\n";
    }
    os << "epsilon = " << format_full_precision(epsilon) << "\n";
    os << "epsilon_threshold = " << format_full_precision(epsilon_threshold) << "\n";
    os << "epsilon_ratio = " << format_full_precision(extrema.epsilon_ratio) << "\n";
    os << "bifurcating = " << (extrema.bifurcating ? "true" : "false") << "\n";
    if (extrema.pf_max) {
        os << "pf_max = " << format_full_precision(*extrema.pf_max) << "\n";
    }
    os << "pf_min = " << format_full_precision(extrema.pf_min) << "\n";
    os << "detuning_at_max_hz = " << format_full_precision(extrema.detuning_at_max_hz)
       << "\n";
    os << "detuning_at_min_hz = " << format_full_precision(extrema.detuning_at_min_hz)
       << "\n";
    return os.str();
}

}  // namespace modepull
