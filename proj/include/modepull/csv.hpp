#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "modepull/fit.hpp"
#include "modepull/solver.hpp"

namespace modepull {

/// Lines starting with '#' are comments; the first content line is the
/// header. Values are written with 17 significant digits so a
/// write-then-read round trip is lossless.

void write_measurement_csv(std::ostream& os, const MeasurementSeries& series,
                           const std::vector<std::string>& comment_lines);

/// Requires columns delta_f_e_hz and delta_f_d_hz; an optional weight
/// column is honored and unknown columns are ignored. Malformed rows are
/// rejected with a CsvError listing their line numbers.
MeasurementSeries read_measurement_csv(std::istream& is, const std::string& source_name);

void write_response_csv(std::ostream& os, const ResponseCurve& curve,
                        const std::vector<std::string>& comment_lines);

std::string format_full_precision(double value);

}  // namespace modepull
