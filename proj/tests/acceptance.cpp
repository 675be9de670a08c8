// Acceptance suite for the coefficient-recovery library. Each criterion
// prints exactly one [PASS]/[FAIL] line with the measured figure next to
// the tolerance it is held against; the process exits nonzero if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evinv/evinv.hpp"

using namespace evinv;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %-34s %s\n", ok ? "PASS" : "FAIL", index, name,
                detail.c_str());
    if (!ok) ++g_failures;
}

void run_criterion(int index, const char* name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [ok, detail] = body();
        report(index, name, ok, detail);
    } catch (const std::exception& e) {
        report(index, name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* pattern, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

ProblemSpec scalar_decay_spec(std::size_t n_steps, Stepper stepper) {
    return make_preset("scalar_decay", TimeGrid(1.0, n_steps), stepper);
}

GammaModel sinusoid_model(double base, double amp, double freq) {
    GammaModel g;
    g.kind = GammaModel::Kind::sinusoid;
    g.base = base;
    g.amp = amp;
    g.freq = freq;
    return g;
}

struct Inverted {
    XiSeries xi;
    GammaSeries gamma;
};

Inverted invert(const ProblemSpec& spec, const MeasurementSeries& phi) {
    Propagator prop(spec);
    const KernelSet k = assemble_kernels(prop, spec);
    Inverted out;
    out.xi = solve_stepwise(k, phi, spec.grid);
    out.gamma = recover_gamma(out.xi, spec.grid);
    return out;
}

/// Simulates the trace on a fine grid (same T, same preset) and keeps
/// every stride-th sample; fine and coarse nodes coincide exactly.
MeasurementSeries subsampled_trace(const std::string& preset, std::size_t m,
                                   const GammaModel& model, std::size_t fine_steps,
                                   std::size_t coarse_steps) {
    const std::size_t stride = fine_steps / coarse_steps;
    ProblemSpec fine =
        make_preset(preset, TimeGrid(1.0, fine_steps), Stepper::CrankNicolson, 0.0, m);
    const TrajectoryRecord traj = forward_direct(model.sample(fine.grid), fine);
    MeasurementSeries phi;
    phi.phi.resize(coarse_steps + 1);
    for (std::size_t n = 0; n <= coarse_steps; ++n) {
        phi.phi[n] = traj.phi.phi[n * stride];
    }
    return phi;
}

double max_interior_error(const GammaSeries& g, const std::vector<double>& truth) {
    double worst = 0.0;
    for (std::size_t n = 1; n < g.valid_last; ++n) {
        worst = std::max(worst, std::abs(g.gamma[n] - truth[n]));
    }
    return worst;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<unreadable:" + path + ">";
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------
// 1. Constant coefficient on the scalar decay problem, clean data.
std::pair<bool, std::string> constant_scalar_recovery() {
    ProblemSpec spec = scalar_decay_spec(200, Stepper::CrankNicolson);
    const std::vector<double> gamma_true(spec.grid.node_count(), 0.5);
    const MeasurementSeries phi = forward_direct(gamma_true, spec).phi;
    const Inverted inv = invert(spec, phi);

    double worst = 0.0;
    for (std::size_t n = 0; n <= inv.gamma.valid_last; ++n) {
        worst = std::max(worst, std::abs(inv.gamma.gamma[n] - 0.5));
    }
    return {inv.gamma.valid_last == 200 && worst <= 1e-4,
            fmt("max |err| = %.3e (tol %.0e)", worst, 1e-4)};
}

// 2. Zero coefficient with a pure source: xi must be identically one and
//    the recovered coefficient identically zero, to tight tolerances.
std::pair<bool, std::string> zero_coefficient_identity() {
    ProblemSpec spec = make_preset("scalar_source", TimeGrid(1.0, 200),
                                   Stepper::CrankNicolson);
    const std::vector<double> gamma_true(spec.grid.node_count(), 0.0);
    const MeasurementSeries phi = forward_direct(gamma_true, spec).phi;
    const Inverted inv = invert(spec, phi);

    double xi_err = 0.0, g_err = 0.0;
    for (std::size_t n = 0; n < spec.grid.node_count(); ++n) {
        xi_err = std::max(xi_err, std::abs(inv.xi.xi[n] - 1.0));
    }
    for (std::size_t n = 0; n <= inv.gamma.valid_last; ++n) {
        g_err = std::max(g_err, std::abs(inv.gamma.gamma[n]));
    }
    return {xi_err <= 1e-12 && g_err <= 1e-10,
            fmt("|xi-1| = %.2e (tol 1e-12), |gamma| = %.2e (tol 1e-10)", xi_err, g_err)};
}

// 3. Manufactured sinusoidal coefficient on the 1d heat problem, data
//    generated on a four-times-finer grid and subsampled.
std::pair<bool, std::string> parabolic_manufactured_recovery() {
    const GammaModel model = sinusoid_model(1.0, 0.5, 1.0);
    const MeasurementSeries phi = subsampled_trace("heat_sine", 64, model, 1024, 256);
    ProblemSpec spec =
        make_preset("heat_sine", TimeGrid(1.0, 256), Stepper::CrankNicolson, 0.0, 64);
    const Inverted inv = invert(spec, phi);

    const std::vector<double> truth = model.sample(spec.grid);
    double scale = 0.0;
    for (double v : truth) scale = std::max(scale, std::abs(v));
    const double rel = max_interior_error(inv.gamma, truth) / scale;
    return {inv.gamma.valid_last == 256 && rel <= 2e-2,
            fmt("max rel interior err = %.3e (tol %.0e)", rel, 2e-2)};
}

// 4a. Grid refinement on the scalar problem: error falls at second order.
std::pair<bool, std::string> scalar_convergence() {
    const GammaModel model = sinusoid_model(0.5, 0.25, 1.0);
    std::vector<double> errs;
    for (std::size_t n : {200u, 400u, 800u}) {
        ProblemSpec spec = scalar_decay_spec(n, Stepper::CrankNicolson);
        const std::vector<double> truth = model.sample(spec.grid);
        const MeasurementSeries phi = forward_direct(truth, spec).phi;
        errs.push_back(max_interior_error(invert(spec, phi).gamma, truth));
    }
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];
    return {r1 >= 3.0 && r2 >= 3.0,
            fmt("error ratios %.2f, %.2f (need >= 3)", r1, r2)};
}

// 4b. Same study on the parabolic problem against one fixed fine-grid
//     data set.
std::pair<bool, std::string> parabolic_convergence() {
    const GammaModel model = sinusoid_model(1.0, 0.5, 1.0);
    std::vector<double> errs;
    for (std::size_t n : {64u, 128u, 256u}) {
        const MeasurementSeries phi = subsampled_trace("heat_sine", 32, model, 1024, n);
        ProblemSpec spec =
            make_preset("heat_sine", TimeGrid(1.0, n), Stepper::CrankNicolson, 0.0, 32);
        const std::vector<double> truth = model.sample(spec.grid);
        errs.push_back(max_interior_error(invert(spec, phi).gamma, truth));
    }
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];
    return {r1 >= 3.0 && r2 >= 3.0,
            fmt("error ratios %.2f, %.2f (need >= 3)", r1, r2)};
}

// 5. The marching solver and the materialized triangular solve agree on
//    every preset.
std::pair<bool, std::string> solver_route_agreement() {
    const GammaModel model = sinusoid_model(0.5, 0.2, 1.0);
    double worst = 0.0;
    for (const auto& name : preset_names()) {
        ProblemSpec spec =
            make_preset(name, TimeGrid(1.0, 100), Stepper::CrankNicolson, 0.0, 24);
        const MeasurementSeries phi =
            forward_direct(model.sample(spec.grid), spec).phi;
        Propagator prop(spec);
        const KernelSet k = assemble_kernels(prop, spec);
        const XiSeries a = solve_stepwise(k, phi, spec.grid);
        const XiSeries b = solve_dense_oracle(k, phi, spec.grid);
        for (std::size_t n = 0; n < spec.grid.node_count(); ++n) {
            const double diff =
                std::abs(a.xi[n] - b.xi[n]) / std::max(1.0, std::abs(b.xi[n]));
            worst = std::max(worst, diff);
        }
    }
    return {worst <= 1e-10, fmt("max rel gap = %.2e (tol %.0e)", worst, 1e-10)};
}

// 6. Positive kernels and measurements force a positive solution: one
//    thousand random instances, every node checked.
std::pair<bool, std::string> randomized_positivity() {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> phi_r(0.5, 2.0);
    std::uniform_real_distribution<double> beta_r(0.0, 1.0);
    std::uniform_real_distribution<double> alpha_r(0.1, 5.0);
    std::uniform_int_distribution<std::size_t> n_r(5, 50);

    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        TimeGrid grid(1.0, n_r(rng));
        KernelSet k;
        k.alpha.resize(grid.node_count());
        k.beta = LowerTriangular(grid.node_count());
        MeasurementSeries phi;
        phi.phi.resize(grid.node_count());
        for (std::size_t n = 0; n < grid.node_count(); ++n) {
            k.alpha[n] = alpha_r(rng);
            phi.phi[n] = phi_r(rng);
            for (std::size_t j = 0; j <= n; ++j) k.beta.at(n, j) = beta_r(rng);
        }
        const XiSeries xi = solve_stepwise(k, phi, grid);
        for (double v : xi.xi) {
            if (!(v > 0.0)) {
                return {false, "nonpositive solution in trial " + std::to_string(trial)};
            }
            ++checked;
        }
        if (xi.positivity_horizon != grid.n_steps()) {
            return {false, "horizon short of the final node in trial " +
                               std::to_string(trial)};
        }
    }
    return {true, std::to_string(checked) + " samples positive over 1000 instances"};
}

// 7. The sign-preserving scheme keeps nonnegative data nonnegative: two
//    hundred random parabolic forward runs under implicit Euler.
std::pair<bool, std::string> sign_preserving_states() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t m = 24;

    for (int trial = 0; trial < 200; ++trial) {
        ProblemSpec spec = make_preset("heat_sine", TimeGrid(1.0, 40),
                                       Stepper::ImplicitEuler, 0.0, m);
        for (double& x : spec.u0) x = unit(rng);
        StateVector f(m);
        for (double& x : f) x = unit(rng);
        spec.source.assign(spec.grid.node_count(), f);

        Propagator prop(spec);
        if (!prop.mmatrix().ok()) {
            return {false, "sign certificate unexpectedly absent"};
        }
        const double gamma_c = (trial % 2 == 0) ? 0.0 : 0.5;
        const std::vector<double> gamma(spec.grid.node_count(), gamma_c);
        const TrajectoryRecord traj = forward_direct(gamma, spec);
        for (const auto& state : traj.states) {
            for (double x : state) {
                if (x < 0.0) {
                    return {false, "negative state in trial " + std::to_string(trial)};
                }
            }
        }
    }
    return {true, "200 runs, every state entry nonnegative"};
}

// 8. Consistent data anchors the solution at one, and the preflight
//    checker flags a one-in-a-million corruption of the anchor.
std::pair<bool, std::string> anchor_consistency() {
    const GammaModel model = sinusoid_model(0.4, 0.2, 1.0);
    double worst = 0.0;
    for (const auto& name : preset_names()) {
        ProblemSpec spec =
            make_preset(name, TimeGrid(1.0, 64), Stepper::CrankNicolson, 0.0, 16);
        const MeasurementSeries phi =
            forward_direct(model.sample(spec.grid), spec).phi;
        const Inverted inv = invert(spec, phi);
        worst = std::max(worst, std::abs(inv.xi.xi[0] - 1.0));
    }
    if (worst > 1e-14) {
        return {false, fmt("|xi_0 - 1| = %.2e (tol %.0e)", worst, 1e-14)};
    }

    ProblemSpec spec = scalar_decay_spec(64, Stepper::CrankNicolson);
    const std::vector<double> gamma(spec.grid.node_count(), 0.3);
    MeasurementSeries phi = forward_direct(gamma, spec).phi;
    phi.phi[0] *= 1.0 + 1e-6;
    Propagator prop(spec);
    const KernelSet k = assemble_kernels(prop, spec);
    const HypothesisReport rep = check_hypotheses(spec, prop, k, phi);
    const HypothesisEntry* entry = rep.find("phi0_matches_initial_pairing");
    const bool flagged = entry != nullptr && entry->status == CheckStatus::fail &&
                         !rep.local_solvability_expected;
    return {flagged, fmt("|xi_0 - 1| = %.2e (tol %.0e); 1e-6 anchor corruption flagged",
                         worst, 1e-14)};
}

// 9. Worker thread count changes nothing: bitwise identical kernels and
//    mild solutions in process, byte-identical CSV output from the
//    command line tool.
std::pair<bool, std::string> thread_determinism() {
    ProblemSpec spec = make_preset("heat_sine", TimeGrid(1.0, 128),
                                   Stepper::CrankNicolson, 0.0, 32);
    Propagator prop(spec);
    const KernelSet base = assemble_kernels(prop, spec, 1);
    const GammaModel model = sinusoid_model(0.5, 0.2, 1.0);
    const std::vector<double> gamma = model.sample(spec.grid);
    const TrajectoryRecord mild_base = forward_mild(gamma, spec, prop, 1);

    for (unsigned threads : {2u, 4u, 8u}) {
        const KernelSet k = assemble_kernels(prop, spec, threads);
        if (k.alpha != base.alpha) {
            return {false, "alpha differs at " + std::to_string(threads) + " threads"};
        }
        for (std::size_t n = 0; n < spec.grid.node_count(); ++n) {
            for (std::size_t j = 0; j <= n; ++j) {
                if (k.beta.at(n, j) != base.beta.at(n, j)) {
                    return {false, "beta differs at " + std::to_string(threads) +
                                       " threads"};
                }
            }
        }
        const TrajectoryRecord mild = forward_mild(gamma, spec, prop, threads);
        if (mild.states != mild_base.states) {
            return {false,
                    "mild states differ at " + std::to_string(threads) + " threads"};
        }
    }

    // Command line route: identical runs at 1, 2 and 4 threads.
    namespace fs = std::filesystem;
    const fs::path work = fs::temp_directory_path() / "evinv_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path cfg_path = work / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "mode = roundtrip\npreset = heat_sine\nT = 1\nN = 96\nM = 24\n"
               "gamma_kind = sinusoid\ngamma_base = 1\ngamma_amp = 0.5\n"
               "gamma_freq = 1\nnoise_level = 0.001\nseed = 5\n";
    }
    for (unsigned threads : {1u, 2u, 4u}) {
        const std::string cmd = std::string(EVINV_CLI_PATH) + " --config " +
                                cfg_path.string() + " --threads " +
                                std::to_string(threads) + " --out " +
                                (work / ("t" + std::to_string(threads))).string() +
                                " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            return {false, "tool run failed at " + std::to_string(threads) + " threads"};
        }
    }
    for (const char* file : {"phi.csv", "xi.csv", "gamma.csv"}) {
        const std::string one = slurp((work / "t1" / file).string());
        if (one.empty() || one[0] == '<') {
            return {false, std::string("missing output ") + file};
        }
        for (const char* other : {"t2", "t4"}) {
            if (slurp((work / other / file).string()) != one) {
                return {false, std::string(file) + " differs between thread counts"};
            }
        }
    }
    return {true, "kernels, mild runs and tool output all bit-identical"};
}

// 10. Re-simulation residual separates faithful recoveries from
//     corrupted ones.
std::pair<bool, std::string> residual_discrimination() {
    ProblemSpec spec = scalar_decay_spec(200, Stepper::CrankNicolson);
    const GammaModel model = sinusoid_model(0.5, 0.25, 1.0);
    const std::vector<double> truth = model.sample(spec.grid);
    const MeasurementSeries phi = forward_direct(truth, spec).phi;
    const Inverted inv = invert(spec, phi);

    const ResidualReport clean = verify_by_forward(inv.gamma, spec, phi);
    GammaSeries corrupted = inv.gamma;
    for (std::size_t n = 0; n <= corrupted.valid_last; ++n) {
        corrupted.gamma[n] += 1.0;
    }
    const ResidualReport broken = verify_by_forward(corrupted, spec, phi);

    return {clean.max_rel <= 5e-3 && broken.max_rel > 0.1,
            fmt("clean %.2e (tol 5e-3), corrupted %.2e (must exceed 1e-1)",
                clean.max_rel, broken.max_rel)};
}

} // namespace

int main() {
    std::printf("acceptance checks, fixed tolerances\n");
    run_criterion(1, "constant_scalar_recovery", constant_scalar_recovery);
    run_criterion(2, "zero_coefficient_identity", zero_coefficient_identity);
    run_criterion(3, "parabolic_manufactured_recovery", parabolic_manufactured_recovery);
    run_criterion(4, "scalar_convergence", scalar_convergence);
    run_criterion(5, "parabolic_convergence", parabolic_convergence);
    run_criterion(6, "solver_route_agreement", solver_route_agreement);
    run_criterion(7, "randomized_positivity", randomized_positivity);
    run_criterion(8, "sign_preserving_states", sign_preserving_states);
    run_criterion(9, "anchor_consistency", anchor_consistency);
    run_criterion(10, "thread_determinism", thread_determinism);
    run_criterion(11, "residual_discrimination", residual_discrimination);

    if (g_failures == 0) {
        std::printf("all acceptance criteria satisfied\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
