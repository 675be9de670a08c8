#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/linalg.hpp"
#include "evinv/time_grid.hpp"

namespace evinv {

/// State of the evolving system at one instant. For the parabolic backend
/// these are the values at interior spatial nodes (Dirichlet boundary
/// values are identically zero and not stored).
using StateVector = std::vector<double>;

/// Discrete representative of the measurement functional: a weight vector
/// and a quadrature scale (1 for the matrix backend, dx for the parabolic
/// backend, where interior-node rectangle quadrature applies).
struct Pairing {
    StateVector weight;
    double scale = 1.0;
};

/// Discrete pairing <u, w> = scale * sum_i u_i * weight_i.
inline double pair(const StateVector& u, const Pairing& p) {
    if (u.size() != p.weight.size()) {
        throw numeric_error("pair: dimension mismatch (" + std::to_string(u.size()) +
                            " vs " + std::to_string(p.weight.size()) + ")");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * p.weight[i];
    return p.scale * s;
}

enum class Stepper { CrankNicolson, ImplicitEuler };

inline std::string to_string(Stepper s) {
    return s == Stepper::CrankNicolson ? "crank_nicolson" : "implicit_euler";
}

/// Generator supplied as a dense d x d matrix sampled at every time node.
struct MatrixFamily {
    std::size_t dim = 0;
    std::vector<DenseMatrix> at_node; // N+1 entries
};

/// One-dimensional second-order operator (a(x,t) u_x)_x + b(x,t) u_x + c(x,t) u
/// on [0, length] with homogeneous Dirichlet conditions, discretized on
/// interior_nodes equally spaced interior points.
struct Parabolic1D {
    double length = 1.0;
    std::size_t interior_nodes = 0;
    std::function<double(double, double)> diffusion; // a(x, t), must stay positive
    std::function<double(double, double)> advection; // b(x, t)
    std::function<double(double, double)> reaction;  // c(x, t)

    double dx() const { return length / static_cast<double>(interior_nodes + 1); }
    double x(std::size_t i) const { return static_cast<double>(i) * dx(); }
};

using Backend = std::variant<MatrixFamily, Parabolic1D>;

/// Declarative description of one problem instance: generator backend,
/// initial state, source table, measurement functional, grid and scheme.
struct ProblemSpec {
    Backend backend;
    StateVector u0;
    std::vector<StateVector> source; // f(t_n), N+1 entries
    Pairing pairing;
    TimeGrid grid;
    Stepper stepper = Stepper::CrankNicolson;

    std::size_t dim() const {
        if (const auto* m = std::get_if<MatrixFamily>(&backend)) return m->dim;
        return std::get<Parabolic1D>(backend).interior_nodes;
    }
};

/// Scalar measurement trace phi(t_n) = <u(t_n), w>.
struct MeasurementSeries {
    enum class Provenance { synthetic, external };

    std::vector<double> phi;
    Provenance provenance = Provenance::synthetic;
    std::optional<std::uint64_t> noise_seed;
};

namespace detail {

inline bool all_finite(const StateVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

/// Checks every structural invariant of a ProblemSpec and reports the
/// violations found; an empty result means the problem is consistent.
inline std::vector<std::string> validate_spec(const ProblemSpec& spec) {
    std::vector<std::string> out;
    const std::size_t nodes = spec.grid.node_count();
    const std::size_t d = spec.dim();

    if (const auto* m = std::get_if<MatrixFamily>(&spec.backend)) {
        if (m->dim == 0) out.push_back("backend: matrix dimension must be positive");
        if (m->at_node.size() != nodes) {
            out.push_back("backend.at_node: length " + std::to_string(m->at_node.size()) +
                          ", expected N+1 = " + std::to_string(nodes));
        }
        for (std::size_t n = 0; n < m->at_node.size(); ++n) {
            if (m->at_node[n].dim() != m->dim) {
                out.push_back("backend.at_node[" + std::to_string(n) + "]: dimension mismatch");
                break;
            }
            bool finite = true;
            for (double a : m->at_node[n].data())
                if (!std::isfinite(a)) { finite = false; break; }
            if (!finite) {
                out.push_back("backend.at_node[" + std::to_string(n) + "]: non-finite entry");
                break;
            }
        }
    } else {
        const auto& p = std::get<Parabolic1D>(spec.backend);
        if (!(p.length > 0.0)) out.push_back("backend.length: must be positive");
        if (p.interior_nodes < 1) out.push_back("backend.interior_nodes: must be >= 1");
        if (!p.diffusion || !p.advection || !p.reaction) {
            out.push_back("backend: coefficient functions a, b, c must all be set");
        }
    }

    if (spec.u0.size() != d) {
        out.push_back("u0: dimension " + std::to_string(spec.u0.size()) +
                      ", expected " + std::to_string(d));
    }
    if (spec.pairing.weight.size() != d) {
        out.push_back("pairing.weight: dimension " + std::to_string(spec.pairing.weight.size()) +
                      ", expected " + std::to_string(d));
    }
    if (spec.u0.size() != spec.pairing.weight.size()) {
        out.push_back("u0/weight dimension mismatch");
    }
    if (!(spec.pairing.scale > 0.0)) {
        out.push_back("pairing.scale: must be positive");
    }
    if (spec.source.size() != nodes) {
        out.push_back("source: length " + std::to_string(spec.source.size()) +
                      ", expected N+1 = " + std::to_string(nodes));
    }
    for (std::size_t n = 0; n < spec.source.size(); ++n) {
        if (spec.source[n].size() != d) {
            out.push_back("source[" + std::to_string(n) + "]: dimension mismatch");
            break;
        }
    }
    if (!detail::all_finite(spec.u0)) out.push_back("u0: non-finite entry");
    if (!detail::all_finite(spec.pairing.weight)) out.push_back("pairing.weight: non-finite entry");
    for (std::size_t n = 0; n < spec.source.size(); ++n) {
        if (!detail::all_finite(spec.source[n])) {
            out.push_back("source[" + std::to_string(n) + "]: non-finite entry");
            break;
        }
    }
    return out;
}

} // namespace evinv
