#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/time_grid.hpp"

namespace evinv {

/// Formats one double with `precision` significant digits, shortest form.
inline std::string format_value(double x, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

/// Writes a two column series as CSV: header `t,<value_header>`, one row
/// per node, comma separated, LF line endings, no trailing delimiter.
/// With the default 17 significant digits the values round-trip exactly.
inline void write_series_csv(const std::string& path, const std::string& value_header,
                             std::span<const double> t, std::span<const double> value,
                             int precision = 17) {
    if (t.size() != value.size()) {
        throw numeric_error("csv write: column lengths differ");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw config_error("out: cannot open '" + path + "' for writing");
    }
    out << "t," << value_header << '\n';
    for (std::size_t n = 0; n < t.size(); ++n) {
        out << format_value(t[n], precision) << ',' << format_value(value[n], precision)
            << '\n';
    }
    if (!out.flush()) {
        throw config_error("out: failed writing '" + path + "'");
    }
}

namespace detail {

inline bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

} // namespace detail

/// Reads a measurement trace written by write_series_csv (or produced
/// externally in the same shape). The file must carry a header row, one
/// sample per grid node, and node times that match the grid to within
/// 1e-9 * T; anything else is rejected with the offending line cited.
inline std::vector<double> read_series_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("phi_path: cannot open '" + path + "'");
    }

    std::vector<double> values;
    values.reserve(grid.node_count());
    const double tol = 1e-9 * grid.t_final();

    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto comma = line.find(',');
        const std::string where = "'" + path + "' line " + std::to_string(line_no);
        if (comma == std::string::npos) {
            throw config_error(where + ": expected two comma separated fields");
        }
        const std::string left = line.substr(0, comma);
        const std::string right = line.substr(comma + 1);
        if (right.find(',') != std::string::npos) {
            throw config_error(where + ": expected exactly two fields");
        }

        if (!saw_header) {
            if (left != "t") {
                throw config_error(where + ": header must start with 't,'");
            }
            saw_header = true;
            continue;
        }

        double t = 0.0, v = 0.0;
        if (!detail::parse_double(left, t) || !detail::parse_double(right, v)) {
            throw config_error(where + ": malformed number");
        }
        if (!std::isfinite(v)) {
            throw config_error(where + ": value is not finite");
        }
        const std::size_t n = values.size();
        if (n >= grid.node_count()) {
            throw config_error(where + ": more rows than grid nodes (" +
                               std::to_string(grid.node_count()) + ")");
        }
        if (std::abs(t - grid.node(n)) > tol) {
            throw config_error(where + ": node time " + format_value(t) +
                               " does not match grid node " + format_value(grid.node(n)));
        }
        values.push_back(v);
    }
    if (!saw_header) {
        throw config_error("'" + path + "': empty file, expected a CSV header");
    }
    if (values.size() != grid.node_count()) {
        throw config_error("'" + path + "': found " + std::to_string(values.size()) +
                           " samples, grid has " + std::to_string(grid.node_count()) +
                           " nodes");
    }
    return values;
}

} // namespace evinv
