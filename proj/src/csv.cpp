#include "modepull/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace modepull {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        // trim surrounding whitespace
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos
                             ? std::string()
                             : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) {
        return false;
    }
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(out);
}

std::string join_line_numbers(const std::vector<std::size_t>& lines) {
    std::ostringstream os;
    for (std::size_t i = 0; i < lines.size() && i < 20; ++i) {
        if (i > 0) {
            os << ", ";
        }
        os << lines[i];
    }
    if (lines.size() > 20) {
        os << ", ... (" << lines.size() << " total)";
    }
    return os.str();
}

}  // namespace

std::string format_full_precision(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_measurement_csv(std::ostream& os, const MeasurementSeries& series,
                           const std::vector<std::string>& comment_lines) {
    for (const auto& line : comment_lines) {
        os << "# " << line << "\n";
    }
    bool any_weight = false;
    for (const auto& p : series.points()) {
        if (p.weight != 1.0) {
            any_weight = true;
            break;
        }
    }
    os << "delta_f_e_hz,delta_f_d_hz";
    if (any_weight) {
        os << ",weight";
    }
    os << "\n";
    for (const auto& p : series.points()) {
        os << format_full_precision(p.delta_f_e_hz) << ','
           << format_full_precision(p.delta_f_d_hz);
        if (any_weight) {
            os << ',' << format_full_precision(p.weight);
        }
        os << "\n";
    }
}

MeasurementSeries read_measurement_csv(std::istream& is, const std::string& source_name) {
    std::string line;
    std::size_t line_number = 0;
    bool have_header = false;
    int col_e = -1;
    int col_d = -1;
    int col_w = -1;
    std::size_t header_fields = 0;
    std::vector<MeasurementPoint> points;
    std::vector<std::size_t> bad_lines;

    while (std::getline(is, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_fields(line);
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (fields[i] == "delta_f_e_hz") {
                    col_e = static_cast<int>(i);
                } else if (fields[i] == "delta_f_d_hz") {
                    col_d = static_cast<int>(i);
                } else if (fields[i] == "weight") {
                    col_w = static_cast<int>(i);
                }
            }
            if (col_e < 0 || col_d < 0) {
                throw CsvError(source_name +
                               ": header must contain delta_f_e_hz and delta_f_d_hz");
            }
            header_fields = fields.size();
            have_header = true;
            continue;
        }

        MeasurementPoint p;
        bool ok = fields.size() == header_fields;
        ok = ok && parse_double(fields[static_cast<std::size_t>(col_e)], p.delta_f_e_hz);
        ok = ok && parse_double(fields[static_cast<std::size_t>(col_d)], p.delta_f_d_hz);
        if (ok && col_w >= 0) {
            ok = parse_double(fields[static_cast<std::size_t>(col_w)], p.weight) &&
                 p.weight >= 0.0;
        }
        if (!ok) {
            bad_lines.push_back(line_number);
            continue;
        }
        points.push_back(p);
    }

    if (!have_header) {
        throw CsvError(source_name + ": no header line found");
    }
    if (!bad_lines.empty()) {
        throw CsvError(source_name + ": malformed rows at line(s) " +
                       join_line_numbers(bad_lines));
    }
    return MeasurementSeries(std::move(points), source_name);
}

void write_response_csv(std::ostream& os, const ResponseCurve& curve,
                        const std::vector<std::string>& comment_lines) {
    for (const auto& line : comment_lines) {
        os << "# " << line << "\n";
    }
    os << "delta_f_e_hz,delta_f_d_hz,pf,branch_id\n";
    for (const auto& s : curve.samples) {
        os << format_full_precision(s.delta_f_e_hz) << ','
           << format_full_precision(s.delta_f_d_hz) << ',' << format_full_precision(s.pf)
           << ',' << s.branch_id << "\n";
    }
}

}  // namespace modepull
