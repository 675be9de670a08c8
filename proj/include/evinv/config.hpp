#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/presets.hpp"
#include "evinv/problem.hpp"
#include "evinv/time_grid.hpp"

namespace evinv {

/// Everything a run needs, parsed from a flat key=value file. `#` starts
/// a comment, blank lines are skipped, keys may appear at most once.
struct Config {
    std::string mode = "invert";
    std::string preset;
    double t_final = 1.0;
    std::size_t n_steps = 200;
    double length = 0.0;
    std::size_t interior_nodes = 64;
    Stepper stepper = Stepper::CrankNicolson;
    GammaModel gamma;
    double noise_level = 0.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int csv_precision = 17;
    std::size_t smoothing_window = 0;
    double phi_floor = 1e-12;
    std::string phi_path;
    unsigned threads = 0;
    std::vector<std::size_t> levels;

    std::optional<std::size_t> inline_dim;
    std::vector<double> inline_matrix;
    std::vector<double> inline_u0;
    std::vector<double> inline_weight;
    std::vector<double> inline_source;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double to_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw config_error(key + ": expected a number, got '" + value + "'");
    }
    return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
    if (value.empty() || value[0] == '-') {
        throw config_error(key + ": expected a nonnegative integer, got '" + value + "'");
    }
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long x = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw config_error(key + ": expected a nonnegative integer, got '" + value + "'");
    }
    return static_cast<std::uint64_t>(x);
}

inline std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(to_double(key, trim(field)));
    }
    if (out.empty()) {
        throw config_error(key + ": expected a comma separated list of numbers");
    }
    return out;
}

inline std::vector<std::size_t> to_size_list(const std::string& key,
                                             const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(static_cast<std::size_t>(to_u64(key, trim(field))));
    }
    if (out.empty()) {
        throw config_error(key + ": expected a comma separated list of integers");
    }
    return out;
}

inline Stepper to_stepper(const std::string& value) {
    if (value == "crank_nicolson") return Stepper::CrankNicolson;
    if (value == "implicit_euler") return Stepper::ImplicitEuler;
    throw config_error("stepper: expected crank_nicolson or implicit_euler, got '" +
                       value + "'");
}

} // namespace detail

/// Checks cross-field consistency after all keys are read. Throws
/// config_error naming the first offending field.
inline void validate_config(const Config& cfg) {
    static const std::set<std::string> modes = {"forward", "invert", "roundtrip",
                                                "convergence"};
    if (modes.count(cfg.mode) == 0) {
        throw config_error("mode: expected forward, invert, roundtrip or convergence, "
                           "got '" + cfg.mode + "'");
    }
    if (!(cfg.t_final > 0.0)) {
        throw config_error("T: final time must be positive");
    }
    if (cfg.n_steps < 2) {
        throw config_error("N: number of steps must be >= 2");
    }
    if (cfg.noise_level < 0.0) {
        throw config_error("noise_level: must be >= 0");
    }
    if (cfg.csv_precision < 1 || cfg.csv_precision > 17) {
        throw config_error("csv_precision: must lie in [1, 17]");
    }
    if (cfg.smoothing_window != 0 &&
        (cfg.smoothing_window < 3 || cfg.smoothing_window % 2 == 0)) {
        throw config_error("smoothing_window: must be 0 or an odd integer >= 3");
    }
    if (!(cfg.phi_floor > 0.0)) {
        throw config_error("phi_floor: must be positive");
    }
    if (cfg.mode == "convergence") {
        if (cfg.levels.size() < 2) {
            throw config_error("levels: convergence mode needs at least two step counts");
        }
        for (std::size_t n : cfg.levels) {
            if (n < 2) {
                throw config_error("levels: every step count must be >= 2");
            }
        }
    }
    if (cfg.inline_dim) {
        const std::size_t d = *cfg.inline_dim;
        if (d == 0) {
            throw config_error("inline_dim: must be >= 1");
        }
        if (cfg.inline_matrix.size() != d * d) {
            throw config_error("inline_matrix: expected " + std::to_string(d * d) +
                               " entries (row major), got " +
                               std::to_string(cfg.inline_matrix.size()));
        }
        if (cfg.inline_u0.size() != d) {
            throw config_error("inline_u0: expected " + std::to_string(d) +
                               " entries, got " + std::to_string(cfg.inline_u0.size()));
        }
        if (cfg.inline_weight.size() != d) {
            throw config_error("inline_weight: expected " + std::to_string(d) +
                               " entries, got " +
                               std::to_string(cfg.inline_weight.size()));
        }
        if (!cfg.inline_source.empty() && cfg.inline_source.size() != d) {
            throw config_error("inline_source: expected " + std::to_string(d) +
                               " entries, got " +
                               std::to_string(cfg.inline_source.size()));
        }
    } else if (cfg.preset.empty()) {
        throw config_error("preset: required unless an inline system is given");
    }
}

/// Parses key=value text. Unknown and duplicate keys are rejected so a
/// typo cannot silently fall back to a default.
inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::set<std::string> seen;
    bool gamma_kind_sinusoid = false;

    std::stringstream ss(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(ss, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line " + std::to_string(line_no) +
                               ": expected key=value, got '" + line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error("line " + std::to_string(line_no) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw config_error("duplicate key '" + key + "'");
        }

        if (key == "mode") {
            cfg.mode = value;
        } else if (key == "preset") {
            cfg.preset = value;
        } else if (key == "T") {
            cfg.t_final = detail::to_double(key, value);
        } else if (key == "N") {
            cfg.n_steps = static_cast<std::size_t>(detail::to_u64(key, value));
        } else if (key == "L") {
            cfg.length = detail::to_double(key, value);
        } else if (key == "M") {
            cfg.interior_nodes = static_cast<std::size_t>(detail::to_u64(key, value));
        } else if (key == "stepper") {
            cfg.stepper = detail::to_stepper(value);
        } else if (key == "gamma_kind") {
            if (value == "constant") {
                cfg.gamma.kind = GammaModel::Kind::constant;
            } else if (value == "sinusoid") {
                cfg.gamma.kind = GammaModel::Kind::sinusoid;
                gamma_kind_sinusoid = true;
            } else {
                throw config_error("gamma_kind: expected constant or sinusoid, got '" +
                                   value + "'");
            }
        } else if (key == "gamma_value") {
            cfg.gamma.value = detail::to_double(key, value);
        } else if (key == "gamma_base") {
            cfg.gamma.base = detail::to_double(key, value);
        } else if (key == "gamma_amp") {
            cfg.gamma.amp = detail::to_double(key, value);
        } else if (key == "gamma_freq") {
            cfg.gamma.freq = detail::to_double(key, value);
        } else if (key == "noise_level") {
            cfg.noise_level = detail::to_double(key, value);
        } else if (key == "seed") {
            cfg.seed = detail::to_u64(key, value);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "csv_precision") {
            cfg.csv_precision = static_cast<int>(detail::to_u64(key, value));
        } else if (key == "smoothing_window") {
            cfg.smoothing_window = static_cast<std::size_t>(detail::to_u64(key, value));
        } else if (key == "phi_floor") {
            cfg.phi_floor = detail::to_double(key, value);
        } else if (key == "phi_path") {
            cfg.phi_path = value;
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(detail::to_u64(key, value));
        } else if (key == "levels") {
            cfg.levels = detail::to_size_list(key, value);
        } else if (key == "inline_dim") {
            cfg.inline_dim = static_cast<std::size_t>(detail::to_u64(key, value));
        } else if (key == "inline_matrix") {
            cfg.inline_matrix = detail::to_double_list(key, value);
        } else if (key == "inline_u0") {
            cfg.inline_u0 = detail::to_double_list(key, value);
        } else if (key == "inline_weight") {
            cfg.inline_weight = detail::to_double_list(key, value);
        } else if (key == "inline_source") {
            cfg.inline_source = detail::to_double_list(key, value);
        } else {
            throw config_error("unknown key '" + key + "'");
        }
    }

    // `gamma_value` only feeds a constant model; catching the mismatch
    // here beats silently sampling zeros later.
    if (gamma_kind_sinusoid && seen.count("gamma_value")) {
        throw config_error("gamma_value: not used when gamma_kind = sinusoid "
                           "(use gamma_base / gamma_amp / gamma_freq)");
    }
    validate_config(cfg);
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("config: cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Assembles the evolution problem a config describes: one of the named
/// presets, or the inline constant system when inline_dim is present.
inline ProblemSpec build_problem(const Config& cfg) {
    TimeGrid grid(cfg.t_final, cfg.n_steps);
    if (cfg.inline_dim) {
        const std::size_t d = *cfg.inline_dim;
        ProblemSpec spec;
        MatrixFamily fam;
        fam.dim = d;
        DenseMatrix a(d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                a(i, j) = cfg.inline_matrix[i * d + j];
            }
        }
        fam.at_node.assign(grid.node_count(), a);
        spec.backend = std::move(fam);
        spec.u0 = cfg.inline_u0;
        spec.pairing.weight = cfg.inline_weight;
        spec.pairing.scale = 1.0;
        const StateVector f = cfg.inline_source.empty() ? StateVector(d, 0.0)
                                                        : StateVector(cfg.inline_source);
        spec.source.assign(grid.node_count(), f);
        spec.grid = grid;
        spec.stepper = cfg.stepper;
        return spec;
    }
    return make_preset(cfg.preset, grid, cfg.stepper, cfg.length, cfg.interior_nodes);
}

} // namespace evinv
