#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/problem.hpp"
#include "evinv/time_grid.hpp"

namespace evinv {

/// Closed-form coefficient families used to manufacture test problems.
struct GammaModel {
    enum class Kind { constant, sinusoid };

    Kind kind = Kind::constant;
    double value = 0.0;
    double base = 0.0;
    double amp = 0.0;
    double freq = 1.0;

    double operator()(double t) const {
        if (kind == Kind::constant) return value;
        return base + amp * std::sin(2.0 * std::numbers::pi * freq * t);
    }

    std::vector<double> sample(const TimeGrid& grid) const {
        std::vector<double> out(grid.node_count());
        for (std::size_t n = 0; n < out.size(); ++n) out[n] = (*this)(grid.node(n));
        return out;
    }
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "scalar_decay", "scalar_source", "heat_sine", "advection_reaction"};
    return names;
}

namespace detail {

inline ProblemSpec make_scalar(const TimeGrid& grid, Stepper stepper, double a_value,
                               double f_value) {
    ProblemSpec spec;
    MatrixFamily fam;
    fam.dim = 1;
    fam.at_node.assign(grid.node_count(), DenseMatrix(1, {a_value}));
    spec.backend = std::move(fam);
    spec.u0 = {1.0};
    spec.source.assign(grid.node_count(), StateVector{f_value});
    spec.pairing.weight = {1.0};
    spec.pairing.scale = 1.0;
    spec.grid = grid;
    spec.stepper = stepper;
    return spec;
}

inline ProblemSpec make_parabolic(const TimeGrid& grid, Stepper stepper, double length,
                                  std::size_t interior, double advection,
                                  double reaction, double source_amp) {
    Parabolic1D p;
    p.length = length;
    p.interior_nodes = interior;
    p.diffusion = [](double, double) { return 1.0; };
    p.advection = [advection](double, double) { return advection; };
    p.reaction = [reaction](double, double) { return reaction; };

    ProblemSpec spec;
    spec.grid = grid;
    spec.stepper = stepper;
    spec.u0.resize(interior);
    spec.pairing.weight.resize(interior);
    StateVector f(interior);
    for (std::size_t i = 0; i < interior; ++i) {
        // Interior row i sits at grid node i+1; the boundaries are clamped.
        const double s = std::sin(std::numbers::pi * p.x(i + 1) / length);
        spec.u0[i] = s;
        spec.pairing.weight[i] = s;
        f[i] = source_amp * s;
    }
    spec.pairing.scale = p.dx();
    spec.source.assign(grid.node_count(), f);
    spec.backend = std::move(p);
    return spec;
}

} // namespace detail

/// Builds one of the named model problems on the given grid. `length` and
/// `interior_nodes` only apply to the spatial presets.
inline ProblemSpec make_preset(const std::string& name, const TimeGrid& grid,
                               Stepper stepper, double length = 0.0,
                               std::size_t interior_nodes = 64) {
    if (name == "scalar_decay") {
        return detail::make_scalar(grid, stepper, -1.0, 0.0);
    }
    if (name == "scalar_source") {
        return detail::make_scalar(grid, stepper, 0.0, 1.0);
    }
    if (name == "heat_sine") {
        const double l = length > 0.0 ? length : std::numbers::pi;
        return detail::make_parabolic(grid, stepper, l, interior_nodes, 0.0, 0.0, 0.0);
    }
    if (name == "advection_reaction") {
        const double l = length > 0.0 ? length : 1.0;
        return detail::make_parabolic(grid, stepper, l, interior_nodes, 0.5, -0.2, 0.5);
    }
    std::string known;
    for (const auto& p : preset_names()) {
        if (!known.empty()) known += ", ";
        known += p;
    }
    throw config_error("preset: unknown preset '" + name + "' (known: " + known + ")");
}

} // namespace evinv
