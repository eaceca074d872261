#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "modepull/bootstrap.hpp"
#include "modepull/fit.hpp"
#include "modepull/solver.hpp"

namespace modepull {

/// Provenance block embedded in every output: tool name, version, and the
/// exact resolved configuration. Deliberately free of timestamps so
/// identical runs yield identical files.
nlohmann::json make_provenance(const std::string& subcommand,
                               const nlohmann::json& resolved_config);

nlohmann::json to_json(const Interval& interval);
nlohmann::json to_json(const PfExtrema& extrema);
nlohmann::json to_json(const FitReport& report);
nlohmann::json to_json(const BootstrapReport& report);
nlohmann::json to_json(const JumpRecord& jump);

/// Side-car metadata for a response-curve scan.
nlohmann::json scan_metadata(const ResponseCurve& curve, const CavityGeometry& geometry,
                             const ResonanceLine& line, double epsilon_ratio,
                             const nlohmann::json& provenance);

/// Flat key-value record for the analytic extrema output.
std::string extrema_record(const PfExtrema& extrema, double epsilon,
                           double epsilon_threshold,
                           const std::vector<std::string>& comment_lines);

}  // namespace modepull
