#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/linalg.hpp"
#include "evinv/parallel.hpp"
#include "evinv/problem.hpp"
#include "evinv/propagator.hpp"

namespace evinv {

/// Full state history of one forward run, with the measurement trace it
/// induces. phi_n = <states_n, w> by construction.
struct TrajectoryRecord {
    enum class Method { direct, mild };

    std::vector<StateVector> states;
    MeasurementSeries phi;
    Method method = Method::direct;
    std::vector<double> gamma_used;
};

inline constexpr std::size_t whole_grid = std::numeric_limits<std::size_t>::max();

namespace detail {

inline void check_gamma_samples(std::span<const double> gamma, std::size_t needed,
                                const char* who) {
    if (gamma.size() < needed) {
        throw numeric_error(std::string(who) + ": gamma sampled on " +
                            std::to_string(gamma.size()) + " nodes, need " +
                            std::to_string(needed));
    }
}

/// Cumulative trapezoid of gamma: I_n = integral of gamma over [0, t_n],
/// returned as xi_n = exp(-I_n).
inline std::vector<double> xi_from_gamma(std::span<const double> gamma, double h,
                                         std::size_t last) {
    std::vector<double> xi(last + 1);
    xi[0] = 1.0;
    double integral = 0.0;
    for (std::size_t n = 1; n <= last; ++n) {
        integral += 0.5 * h * (gamma[n - 1] + gamma[n]);
        xi[n] = std::exp(-integral);
    }
    return xi;
}

} // namespace detail

/// Time-steps the perturbed generator A(t) + gamma(t) I with the problem's
/// scheme, adding the source with weights consistent with that scheme:
/// (f_n + f_{n+1}) h/2 for Crank-Nicolson, f_{n+1} h for implicit Euler.
/// `up_to` limits the run to nodes 0..up_to (whole grid by default); the
/// returned record then carries up_to+1 states.
inline TrajectoryRecord forward_direct(std::span<const double> gamma,
                                       const ProblemSpec& spec,
                                       std::size_t up_to = whole_grid) {
    const auto problems = validate_spec(spec);
    if (!problems.empty()) {
        throw config_error("invalid problem spec: " + problems.front());
    }
    const std::size_t last = up_to == whole_grid ? spec.grid.n_steps()
                                                 : std::min(up_to, spec.grid.n_steps());
    detail::check_gamma_samples(gamma, last + 1, "forward_direct");
    const double h = spec.grid.dt();
    const bool cn = spec.stepper == Stepper::CrankNicolson;
    const double w = cn ? 0.5 * h : h;
    const std::size_t d = spec.dim();

    TrajectoryRecord rec;
    rec.method = TrajectoryRecord::Method::direct;
    rec.gamma_used.assign(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(last + 1));
    rec.states.reserve(last + 1);
    rec.states.push_back(spec.u0);
    rec.phi.phi.reserve(last + 1);
    rec.phi.phi.push_back(pair(spec.u0, spec.pairing));
    rec.phi.provenance = MeasurementSeries::Provenance::synthetic;

    const auto* fam = std::get_if<MatrixFamily>(&spec.backend);
    const auto* par = std::get_if<Parabolic1D>(&spec.backend);

    StateVector u = spec.u0;
    StateVector rhs(d);
    for (std::size_t n = 0; n < last; ++n) {
        // Explicit part plus source quadrature.
        if (cn) {
            if (fam) {
                fam->at_node[n].multiply(u, rhs);
            } else {
                assemble_parabolic_operator(*par, spec.grid.node(n)).multiply(u, rhs);
            }
            for (std::size_t i = 0; i < d; ++i) {
                rhs[i] = u[i] + w * (rhs[i] + gamma[n] * u[i]) +
                         w * (spec.source[n][i] + spec.source[n + 1][i]);
            }
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                rhs[i] = u[i] + w * spec.source[n + 1][i];
            }
        }

        // Implicit solve with the perturbed operator at t_{n+1}.
        const double iw = cn ? 0.5 * h : h;
        const std::string where = "time node " + std::to_string(n + 1);
        if (fam) {
            DenseMatrix lhs(d);
            const DenseMatrix& a = fam->at_node[n + 1];
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    lhs(i, j) = (i == j ? 1.0 - iw * gamma[n + 1] : 0.0) - iw * a(i, j);
                }
            }
            DenseLu::factor(lhs, where).solve_in_place(rhs);
        } else {
            Tridiagonal a = assemble_parabolic_operator(*par, spec.grid.node(n + 1));
            Tridiagonal lhs(d);
            for (std::size_t i = 0; i < d; ++i) {
                lhs.diag[i] = 1.0 - iw * (a.diag[i] + gamma[n + 1]);
                lhs.sub[i] = -iw * a.sub[i];
                lhs.sup[i] = -iw * a.sup[i];
            }
            TridiagonalLu::factor(lhs, where).solve_in_place(rhs);
        }

        u = rhs;
        rec.states.push_back(u);
        rec.phi.phi.push_back(pair(u, spec.pairing));
    }
    return rec;
}

/// Variation-of-constants form of the same run: with xi built from gamma,
///
///   u(t_n) = (1/xi_n) [ U(t_n,0) u0 + h sum''_j xi_j U(t_n,t_j) f(t_j) ],
///
/// where sum'' carries trapezoid weights (half at j = 0 and j = n). Uses
/// the unperturbed propagator only, so it is an independent second route
/// to the forward solution. Columns j are propagated in parallel in
/// fixed-size batches and reduced in ascending j order, which makes the
/// result identical to a sequential sum for any thread count.
inline TrajectoryRecord forward_mild(std::span<const double> gamma,
                                     const ProblemSpec& spec, const Propagator& prop,
                                     unsigned threads = 0) {
    const std::size_t n_steps = spec.grid.n_steps();
    detail::check_gamma_samples(gamma, n_steps + 1, "forward_mild");
    const double h = spec.grid.dt();
    const std::size_t d = spec.dim();
    const std::size_t nodes = n_steps + 1;

    const std::vector<double> xi = detail::xi_from_gamma(gamma, h, n_steps);

    // accum[n] collects h sum'' xi_j U(t_n, t_j) f(t_j) over all j <= n.
    std::vector<StateVector> accum(nodes, StateVector(d, 0.0));

    constexpr std::size_t batch = 16;
    std::vector<std::vector<StateVector>> slot(std::min(batch, nodes));
    for (std::size_t begin = 0; begin < nodes; begin += batch) {
        const std::size_t width = std::min(batch, nodes - begin);
        parallel_for(width, threads, [&](std::size_t c) {
            const std::size_t j = begin + c;
            auto& column = slot[c];
            column.assign(nodes - j, StateVector());
            StateVector v = spec.source[j];
            column[0] = v;
            for (std::size_t n = j; n < n_steps; ++n) {
                v = prop.step(v, n);
                column[n + 1 - j] = v;
            }
        });
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t j = begin + c;
            const auto& column = slot[c];
            for (std::size_t n = std::max<std::size_t>(j, 1); n < nodes; ++n) {
                const double weight = (j == 0 || j == n) ? 0.5 * h : h;
                const double scale = weight * xi[j];
                const StateVector& term = column[n - j];
                StateVector& acc = accum[n];
                for (std::size_t i = 0; i < d; ++i) acc[i] += scale * term[i];
            }
        }
    }

    TrajectoryRecord rec;
    rec.method = TrajectoryRecord::Method::mild;
    rec.gamma_used.assign(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(nodes));
    rec.states.resize(nodes);
    rec.phi.phi.resize(nodes);
    rec.phi.provenance = MeasurementSeries::Provenance::synthetic;

    StateVector from_u0 = spec.u0;
    for (std::size_t n = 0; n < nodes; ++n) {
        if (n > 0) from_u0 = prop.step(from_u0, n - 1);
        StateVector u(d);
        const double inv_xi = 1.0 / xi[n];
        for (std::size_t i = 0; i < d; ++i) u[i] = inv_xi * (from_u0[i] + accum[n][i]);
        rec.phi.phi[n] = pair(u, spec.pairing);
        rec.states[n] = std::move(u);
    }
    return rec;
}

/// Applies multiplicative noise phi_n * (1 + eps_n) with eps_n drawn
/// uniformly from [-noise_level, +noise_level] by a seeded generator;
/// noise_level 0 returns the exact pairing values. Identical seed and
/// inputs give a bitwise identical series.
inline MeasurementSeries synthesize_phi(const TrajectoryRecord& traj, double noise_level,
                                        std::uint64_t seed) {
    if (noise_level < 0.0) {
        throw config_error("noise_level: must be >= 0");
    }
    MeasurementSeries out;
    out.provenance = MeasurementSeries::Provenance::synthetic;
    out.phi = traj.phi.phi;
    if (noise_level == 0.0) return out;

    out.noise_seed = seed;
    std::mt19937_64 rng(seed);
    for (double& sample : out.phi) {
        // Top 53 bits -> uniform in [0, 1); fully determined by the seed.
        const double unit =
            static_cast<double>(rng() >> 11) * 0x1.0p-53;
        sample *= 1.0 + noise_level * (2.0 * unit - 1.0);
    }
    return out;
}

} // namespace evinv
