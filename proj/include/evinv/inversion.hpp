#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/forward.hpp"
#include "evinv/kernels.hpp"
#include "evinv/problem.hpp"
#include "evinv/propagator.hpp"
#include "evinv/time_grid.hpp"
#include "evinv/volterra.hpp"

namespace evinv {

/// Recovered coefficient samples. Entries past valid_last are NaN: the
/// reconstruction is only defined while xi stays positive.
struct GammaSeries {
    std::vector<double> gamma;
    std::size_t valid_last = 0;
};

/// Largest node index n such that xi_0..xi_n are all strictly positive.
/// The series must start positive; recovery has no foothold otherwise.
inline std::size_t positivity_horizon(std::span<const double> xi) {
    if (xi.empty() || !(xi[0] > 0.0)) {
        throw hypothesis_error(
            "no positivity at t=0: xi must start positive for recovery");
    }
    std::size_t n = 0;
    while (n + 1 < xi.size() && xi[n + 1] > 0.0) ++n;
    return n;
}

/// Differentiates -ln xi on the grid: second order central differences
/// inside, second order one-sided stencils at both ends of the valid
/// range. Needs at least three positive samples.
inline GammaSeries recover_gamma(const XiSeries& xi, const TimeGrid& grid) {
    if (xi.xi.size() != grid.node_count()) {
        throw numeric_error("recover_gamma: xi sampled on " +
                            std::to_string(xi.xi.size()) + " nodes, grid has " +
                            std::to_string(grid.node_count()));
    }
    const std::size_t m = positivity_horizon(xi.xi);
    if (m < 2) {
        throw hypothesis_error(
            "positivity horizon ends at node " + std::to_string(m) +
            ": too few positive xi samples to differentiate, refine the grid "
            "or shorten the interval");
    }

    const double h = grid.dt();
    std::vector<double> logxi(m + 1);
    for (std::size_t n = 0; n <= m; ++n) logxi[n] = std::log(xi.xi[n]);

    GammaSeries out;
    out.valid_last = m;
    out.gamma.assign(grid.node_count(), std::numeric_limits<double>::quiet_NaN());
    out.gamma[0] = -(-3.0 * logxi[0] + 4.0 * logxi[1] - logxi[2]) / (2.0 * h);
    for (std::size_t n = 1; n < m; ++n) {
        out.gamma[n] = -(logxi[n + 1] - logxi[n - 1]) / (2.0 * h);
    }
    out.gamma[m] = -(3.0 * logxi[m] - 4.0 * logxi[m - 1] + logxi[m - 2]) / (2.0 * h);
    return out;
}

enum class CheckStatus { pass, warn, fail };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::warn: return "warn";
        case CheckStatus::fail: return "fail";
    }
    return "unknown";
}

struct HypothesisEntry {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    std::string detail;
};

/// Outcome of the preflight checks. `fail` entries mean the recursion is
/// expected to break down; `warn` entries mean a sufficient condition for
/// a stronger guarantee could not be confirmed from the data at hand.
struct HypothesisReport {
    std::vector<HypothesisEntry> entries;
    bool local_solvability_expected = false;
    bool global_solvability_expected = false;

    const HypothesisEntry* find(const std::string& name) const {
        for (const auto& e : entries) {
            if (e.name == name) return &e;
        }
        return nullptr;
    }

    std::string render() const {
        std::string out;
        for (const auto& e : entries) {
            const char* tag = e.status == CheckStatus::pass   ? "[PASS]"
                              : e.status == CheckStatus::warn ? "[WARN]"
                                                              : "[FAIL]";
            out += tag;
            out += ' ';
            out += e.name;
            if (!e.detail.empty()) {
                out += ": ";
                out += e.detail;
            }
            out += '\n';
        }
        out += "local_solvability_expected: ";
        out += local_solvability_expected ? "yes" : "no";
        out += '\n';
        out += "global_solvability_expected: ";
        out += global_solvability_expected ? "yes" : "no";
        out += '\n';
        return out;
    }
};

struct HypothesisOptions {
    double phi_floor = 1e-12;
    double phi0_rel_tol = 1e-8;
    double growth_warn_ratio = 1e3;
};

namespace detail {

inline double norm2(const StateVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace detail

/// Runs every preflight check against one problem + measurement pair.
/// Kernel values must come from the same propagator that is passed in.
inline HypothesisReport check_hypotheses(const ProblemSpec& spec, const Propagator& prop,
                                         const KernelSet& k, const MeasurementSeries& phi,
                                         const HypothesisOptions& opt = {}) {
    const std::size_t nodes = spec.grid.node_count();
    if (phi.phi.size() != nodes || k.alpha.size() != nodes) {
        throw numeric_error("check_hypotheses: series lengths do not match the grid");
    }

    HypothesisReport rep;
    char buf[160];

    // 1. |phi| bounded away from zero on the whole window.
    {
        double lo = std::numeric_limits<double>::infinity();
        std::size_t at = 0;
        for (std::size_t n = 0; n < nodes; ++n) {
            const double a = std::abs(phi.phi[n]);
            if (a < lo) {
                lo = a;
                at = n;
            }
        }
        const bool ok = lo >= opt.phi_floor;
        std::snprintf(buf, sizeof buf, "min |phi| = %.3e at node %zu (floor %.1e)", lo,
                      at, opt.phi_floor);
        rep.entries.push_back({"phi_separated_from_zero",
                               ok ? CheckStatus::pass : CheckStatus::fail, buf});
    }

    // 2. The measurement at t=0 must reproduce <u0, w>.
    {
        const double expected = pair(spec.u0, spec.pairing);
        const double diff = std::abs(phi.phi[0] - expected);
        const double tol = opt.phi0_rel_tol * std::max(1.0, std::abs(expected));
        const bool ok = diff <= tol;
        std::snprintf(buf, sizeof buf, "|phi_0 - <u0,w>| = %.3e (tol %.3e)", diff, tol);
        rep.entries.push_back({"phi0_matches_initial_pairing",
                               ok ? CheckStatus::pass : CheckStatus::fail, buf});
    }

    // 3. alpha and phi should carry the same sign; a mismatch at node 0
    //    breaks the very first quotient, later mismatches only flag that
    //    the solution will cross zero.
    {
        std::optional<std::size_t> first_bad;
        for (std::size_t n = 0; n < nodes; ++n) {
            const double prod = k.alpha[n] * phi.phi[n];
            if (!(prod > 0.0)) {
                first_bad = n;
                break;
            }
        }
        if (!first_bad) {
            rep.entries.push_back({"alpha_phi_sign_agreement", CheckStatus::pass,
                                   "sign(alpha_n) = sign(phi_n) at every node"});
        } else {
            std::snprintf(buf, sizeof buf, "first sign mismatch at node %zu", *first_bad);
            rep.entries.push_back({"alpha_phi_sign_agreement",
                                   *first_bad == 0 ? CheckStatus::fail : CheckStatus::warn,
                                   buf});
        }
    }

    // 4. Positivity of every kernel ingredient: alpha > 0, phi > 0,
    //    beta >= 0. Together these keep the recursion positive for all t.
    {
        std::size_t bad_alpha = 0, bad_phi = 0, bad_beta = 0;
        for (std::size_t n = 0; n < nodes; ++n) {
            if (!(k.alpha[n] > 0.0)) ++bad_alpha;
            if (!(phi.phi[n] > 0.0)) ++bad_phi;
            for (std::size_t j = 0; j <= n; ++j) {
                if (k.beta.at(n, j) < 0.0) ++bad_beta;
            }
        }
        const bool ok = bad_alpha == 0 && bad_phi == 0 && bad_beta == 0;
        std::snprintf(buf, sizeof buf,
                      "violations: alpha <= 0 at %zu nodes, phi <= 0 at %zu nodes, "
                      "beta < 0 at %zu entries",
                      bad_alpha, bad_phi, bad_beta);
        rep.entries.push_back({"global_positivity_kernels",
                               ok ? CheckStatus::pass : CheckStatus::warn,
                               ok ? "alpha > 0, phi > 0, beta >= 0 throughout" : buf});
    }

    // 5. Sign structure of the data itself (sufficient, not necessary,
    //    for the kernel positivity above).
    {
        bool u0_nonneg = true, u0_nonzero = false, f_nonneg = true, w_pos = true;
        for (double x : spec.u0) {
            if (x < 0.0) u0_nonneg = false;
            if (x != 0.0) u0_nonzero = true;
        }
        for (const auto& fn : spec.source) {
            for (double x : fn) {
                if (x < 0.0) {
                    f_nonneg = false;
                    break;
                }
            }
        }
        for (double x : spec.pairing.weight) {
            if (!(x > 0.0)) w_pos = false;
        }
        if (spec.pairing.scale <= 0.0) w_pos = false;
        const bool ok = u0_nonneg && u0_nonzero && f_nonneg && w_pos;
        std::snprintf(buf, sizeof buf, "u0 >= 0: %s, u0 != 0: %s, f >= 0: %s, w > 0: %s",
                      u0_nonneg ? "yes" : "no", u0_nonzero ? "yes" : "no",
                      f_nonneg ? "yes" : "no", w_pos ? "yes" : "no");
        rep.entries.push_back({"nonnegative_problem_data",
                               ok ? CheckStatus::pass : CheckStatus::warn, buf});
    }

    // 6. Observed bound on the propagation growth, from one probe
    //    trajectory: max over n of ||v_n|| / min_{j <= n} ||v_j||
    //    underestimates sup ||U(t,s)|| but catches strong growth.
    {
        StateVector probe = spec.u0;
        if (detail::norm2(probe) == 0.0) probe.assign(spec.dim(), 1.0);
        double running_min = detail::norm2(probe);
        double observed = 1.0;
        bool degenerate = running_min == 0.0;
        for (std::size_t n = 0; n < spec.grid.n_steps() && !degenerate; ++n) {
            probe = prop.step(probe, n);
            const double nn = detail::norm2(probe);
            if (nn == 0.0) {
                degenerate = true;
                break;
            }
            observed = std::max(observed, nn / running_min);
            running_min = std::min(running_min, nn);
        }
        if (degenerate) {
            rep.entries.push_back({"propagator_norm_bound", CheckStatus::warn,
                                   "probe trajectory hit zero, growth not measurable"});
        } else {
            const bool calm = observed <= opt.growth_warn_ratio;
            std::snprintf(buf, sizeof buf, "observed growth ratio %.3e (warn above %.1e)",
                          observed, opt.growth_warn_ratio);
            rep.entries.push_back({"propagator_norm_bound",
                                   calm ? CheckStatus::pass : CheckStatus::warn, buf});
        }
    }

    // 7. Discrete H1 energy of the trace. Finite samples cannot certify
    //    the regularity assumption, so this entry is informational.
    {
        const double h = spec.grid.dt();
        double e0 = 0.0, e1 = 0.0;
        for (std::size_t n = 0; n < nodes; ++n) e0 += phi.phi[n] * phi.phi[n];
        for (std::size_t n = 0; n + 1 < nodes; ++n) {
            const double d = (phi.phi[n + 1] - phi.phi[n]) / h;
            e1 += d * d;
        }
        const double energy = std::sqrt(h * (e0 + e1));
        std::snprintf(buf, sizeof buf, "discrete H1 norm of phi = %.6e", energy);
        rep.entries.push_back({"phi_sobolev_energy", CheckStatus::pass, buf});
    }

    // 8. Sign preservation of the scheme itself.
    {
        const MMatrixReport& mm = prop.mmatrix();
        if (!mm.applicable) {
            if (spec.stepper == Stepper::CrankNicolson &&
                std::holds_alternative<Parabolic1D>(spec.backend)) {
                rep.entries.push_back(
                    {"discrete_maximum_principle", CheckStatus::warn,
                     "crank_nicolson does not certify nonnegative states; switch to "
                     "implicit_euler if sign preservation matters"});
            } else {
                rep.entries.push_back({"discrete_maximum_principle", CheckStatus::pass,
                                       "not applicable to this backend"});
            }
        } else if (mm.ok()) {
            rep.entries.push_back({"discrete_maximum_principle", CheckStatus::pass,
                                   "implicit steps are inverse-positive at every node"});
        } else {
            std::snprintf(buf, sizeof buf,
                          "inverse positivity not certified at %zu of %zu steps",
                          mm.violating_steps.size(), spec.grid.n_steps());
            rep.entries.push_back(
                {"discrete_maximum_principle", CheckStatus::warn, buf});
        }
    }

    const auto status = [&](const char* name) {
        const HypothesisEntry* e = rep.find(name);
        return e ? e->status : CheckStatus::fail;
    };
    rep.local_solvability_expected =
        status("phi0_matches_initial_pairing") == CheckStatus::pass &&
        status("alpha_phi_sign_agreement") != CheckStatus::fail;
    rep.global_solvability_expected =
        rep.local_solvability_expected &&
        status("global_positivity_kernels") == CheckStatus::pass &&
        status("phi_separated_from_zero") == CheckStatus::pass;
    return rep;
}

/// Residual of a recovered coefficient: re-simulate with it and compare
/// the induced trace against the measured one over the valid range.
struct ResidualReport {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::size_t last_node = 0;
};

inline ResidualReport verify_by_forward(const GammaSeries& gamma, const ProblemSpec& spec,
                                        const MeasurementSeries& phi) {
    if (phi.phi.size() != spec.grid.node_count()) {
        throw numeric_error("verify_by_forward: measurement length does not match grid");
    }
    const std::size_t last = std::min(gamma.valid_last, spec.grid.n_steps());
    const TrajectoryRecord sim = forward_direct(gamma.gamma, spec, last);

    ResidualReport rep;
    rep.last_node = last;
    double scale = 0.0;
    for (std::size_t n = 0; n <= last; ++n) {
        scale = std::max(scale, std::abs(phi.phi[n]));
    }
    for (std::size_t n = 0; n <= last; ++n) {
        rep.max_abs = std::max(rep.max_abs, std::abs(sim.phi.phi[n] - phi.phi[n]));
    }
    rep.max_rel = scale > 0.0 ? rep.max_abs / scale : rep.max_abs;
    return rep;
}

} // namespace evinv
