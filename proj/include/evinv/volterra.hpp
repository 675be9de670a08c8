#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/kernels.hpp"
#include "evinv/problem.hpp"
#include "evinv/time_grid.hpp"

namespace evinv {

/// Solution samples of the second-kind integral equation, together with
/// the largest index up to which every sample is strictly positive.
struct XiSeries {
    std::vector<double> xi;
    std::size_t positivity_horizon = 0;
};

struct VolterraOptions {
    /// Hard lower bound on |phi_n| and on the quadrature denominator.
    double phi_floor = 1e-12;
};

namespace detail {

/// Largest n with xi_j > 0 for all j <= n; requires xi_0 > 0.
inline std::size_t scan_positivity(std::span<const double> xi) {
    std::size_t horizon = 0;
    while (horizon + 1 < xi.size() && xi[horizon + 1] > 0.0) ++horizon;
    return horizon;
}

inline void check_inputs(const KernelSet& k, const MeasurementSeries& phi,
                         const TimeGrid& grid, const VolterraOptions& opt) {
    const std::size_t nodes = grid.node_count();
    if (k.alpha.size() != nodes || k.beta.rows() != nodes) {
        throw numeric_error("kernel size does not match the time grid");
    }
    if (phi.phi.size() != nodes) {
        throw numeric_error("measurement series has " + std::to_string(phi.phi.size()) +
                            " samples, expected " + std::to_string(nodes));
    }
    for (std::size_t n = 0; n < nodes; ++n) {
        if (!(std::abs(phi.phi[n]) >= opt.phi_floor)) {
            throw hypothesis_error("measurement not separated from zero at node " +
                                   std::to_string(n));
        }
    }
    const bool sign_ok = (k.alpha[0] > 0.0 && phi.phi[0] > 0.0) ||
                         (k.alpha[0] < 0.0 && phi.phi[0] < 0.0);
    if (!sign_ok) {
        throw hypothesis_error(
            "alpha(0) and phi(0) must be nonzero and of equal sign; got alpha_0 = " +
            std::to_string(k.alpha[0]) + ", phi_0 = " + std::to_string(phi.phi[0]));
    }
}

} // namespace detail

/// Forward-marching solution of the discretized second-kind equation
///
///   phi_n xi_n = alpha_n + h [ beta_{n,0} xi_0 / 2
///                              + sum_{j=1}^{n-1} beta_{n,j} xi_j
///                              + beta_{n,n} xi_n / 2 ],
///
/// i.e. composite trapezoid quadrature of the integral term, solved for
/// xi_n one node at a time starting from xi_0 = alpha_0 / phi_0. The
/// per-node denominator phi_n - h beta_{n,n}/2 must stay away from zero;
/// refining h always achieves that for bounded kernels.
inline XiSeries solve_stepwise(const KernelSet& k, const MeasurementSeries& phi,
                               const TimeGrid& grid, const VolterraOptions& opt = {}) {
    detail::check_inputs(k, phi, grid, opt);
    const std::size_t nodes = grid.node_count();
    const double h = grid.dt();

    XiSeries out;
    out.xi.resize(nodes);
    out.xi[0] = k.alpha[0] / phi.phi[0];
    for (std::size_t n = 1; n < nodes; ++n) {
        double acc = 0.5 * k.beta.at(n, 0) * out.xi[0];
        for (std::size_t j = 1; j < n; ++j) acc += k.beta.at(n, j) * out.xi[j];
        const double denom = phi.phi[n] - h * k.beta.at(n, n) * 0.5;
        if (!(std::abs(denom) >= opt.phi_floor)) {
            throw numeric_error("quadrature denominator degenerate at node " +
                                std::to_string(n) + ", refine h");
        }
        out.xi[n] = (k.alpha[n] + h * acc) / denom;
    }
    out.positivity_horizon = detail::scan_positivity(out.xi);
    return out;
}

/// Independent check on solve_stepwise: materializes the full triangular
/// linear system with the same trapezoid weights and solves it by plain
/// forward substitution. The two routes are algebraically identical, so
/// any disagreement beyond roundoff indicates a defect.
inline XiSeries solve_dense_oracle(const KernelSet& k, const MeasurementSeries& phi,
                                   const TimeGrid& grid, const VolterraOptions& opt = {}) {
    detail::check_inputs(k, phi, grid, opt);
    const std::size_t nodes = grid.node_count();
    const double h = grid.dt();

    // Row n of the system: sum_{j<=n} L(n,j) xi_j = alpha_n.
    LowerTriangular system(nodes);
    system.at(0, 0) = phi.phi[0];
    for (std::size_t n = 1; n < nodes; ++n) {
        system.at(n, 0) = -h * 0.5 * k.beta.at(n, 0);
        for (std::size_t j = 1; j < n; ++j) system.at(n, j) = -h * k.beta.at(n, j);
        system.at(n, n) = phi.phi[n] - h * 0.5 * k.beta.at(n, n);
        if (!(std::abs(system.at(n, n)) >= opt.phi_floor)) {
            throw numeric_error("quadrature denominator degenerate at node " +
                                std::to_string(n) + ", refine h");
        }
    }

    XiSeries out;
    out.xi.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        double s = k.alpha[n];
        for (std::size_t j = 0; j < n; ++j) s -= system.at(n, j) * out.xi[j];
        out.xi[n] = s / system.at(n, n);
    }
    out.positivity_horizon = detail::scan_positivity(out.xi);
    return out;
}

} // namespace evinv
