#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "evinv/kernels.hpp"
#include "evinv/presets.hpp"
#include "evinv/propagator.hpp"
#include "evinv/time_grid.hpp"
#include "evinv/volterra.hpp"

using namespace evinv;

namespace {

template <typename AlphaFn, typename BetaFn>
KernelSet kernels_from(const TimeGrid& grid, AlphaFn alpha, BetaFn beta) {
    KernelSet k;
    k.alpha.resize(grid.node_count());
    k.beta = LowerTriangular(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        k.alpha[n] = alpha(n);
        for (std::size_t j = 0; j <= n; ++j) k.beta.at(n, j) = beta(n, j);
    }
    return k;
}

MeasurementSeries constant_phi(const TimeGrid& grid, double value) {
    MeasurementSeries phi;
    phi.phi.assign(grid.node_count(), value);
    return phi;
}

/// Trapezoid residual of the discrete equation at every node.
double max_residual(const KernelSet& k, const MeasurementSeries& phi,
                    const TimeGrid& grid, const XiSeries& xi) {
    const double h = grid.dt();
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        double quad = 0.0;
        if (n > 0) {
            quad += 0.5 * k.beta.at(n, 0) * xi.xi[0];
            for (std::size_t j = 1; j < n; ++j) quad += k.beta.at(n, j) * xi.xi[j];
            quad += 0.5 * k.beta.at(n, n) * xi.xi[n];
        }
        worst = std::max(worst,
                         std::abs(phi.phi[n] * xi.xi[n] - k.alpha[n] - h * quad));
    }
    return worst;
}

} // namespace

TEST_CASE("three node unit-kernel case matches hand arithmetic") {
    // alpha = beta = phi = 1 on T = 1, N = 2 (h = 0.5):
    //   xi_0 = 1, xi_1 = 5/3, xi_2 = 25/9, worked by hand from the
    //   trapezoid recursion.
    TimeGrid grid(1.0, 2);
    const KernelSet k = kernels_from(grid, [](std::size_t) { return 1.0; },
                                     [](std::size_t, std::size_t) { return 1.0; });
    const XiSeries xi = solve_stepwise(k, constant_phi(grid, 1.0), grid);
    REQUIRE(xi.xi.size() == 3);
    CHECK(xi.xi[0] == 1.0);
    CHECK_THAT(xi.xi[1], Catch::Matchers::WithinRel(5.0 / 3.0, 1e-15));
    CHECK_THAT(xi.xi[2], Catch::Matchers::WithinRel(25.0 / 9.0, 1e-15));
    CHECK(xi.positivity_horizon == 2);
}

TEST_CASE("unit kernels reproduce the exponential") {
    // phi = alpha = beta = 1 solves xi(t) = 1 + integral of xi, so
    // xi = e^t; the trapezoid discretization is second order accurate.
    TimeGrid grid(1.0, 200);
    const KernelSet k = kernels_from(grid, [](std::size_t) { return 1.0; },
                                     [](std::size_t, std::size_t) { return 1.0; });
    const XiSeries xi = solve_stepwise(k, constant_phi(grid, 1.0), grid);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        CHECK_THAT(xi.xi[n],
                   Catch::Matchers::WithinRel(std::exp(grid.node(n)), 1e-5));
    }
}

TEST_CASE("constant-source kernels with phi = 1 + t give xi = 1") {
    // For the pure-source scalar problem the kernels are exactly one and
    // the exact trace is 1 + t; the trapezoid rule integrates constants
    // exactly, so xi = 1 up to roundoff.
    TimeGrid grid(1.0, 64);
    ProblemSpec spec = make_preset("scalar_source", grid, Stepper::CrankNicolson);
    Propagator prop(spec);
    const KernelSet k = assemble_kernels(prop, spec);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        CHECK(k.alpha[n] == 1.0);
        CHECK(k.beta.at(n, 0) == 1.0);
    }

    MeasurementSeries phi;
    phi.phi.resize(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        phi.phi[n] = 1.0 + grid.node(n);
    }
    const XiSeries xi = solve_stepwise(k, phi, grid);
    for (double v : xi.xi) CHECK_THAT(v, Catch::Matchers::WithinRel(1.0, 1e-13));
    CHECK(max_residual(k, phi, grid, xi) < 1e-14);
}

TEST_CASE("with no source the solution is the plain quotient") {
    TimeGrid grid(1.0, 32);
    ProblemSpec spec = make_preset("scalar_decay", grid, Stepper::CrankNicolson);
    Propagator prop(spec);
    const KernelSet k = assemble_kernels(prop, spec);

    MeasurementSeries phi;
    phi.phi.resize(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        phi.phi[n] = 1.0 + 0.1 * std::sin(double(n));
    }
    const XiSeries xi = solve_stepwise(k, phi, grid);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        CHECK(xi.xi[n] == k.alpha[n] / phi.phi[n]); // beta = 0, exact quotient
    }
}

TEST_CASE("marching solve agrees with the materialized triangular solve") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> phi_range(0.5, 2.0);
    std::uniform_real_distribution<double> beta_range(0.0, 1.0);
    std::uniform_real_distribution<double> alpha_range(0.2, 3.0);

    for (int trial = 0; trial < 25; ++trial) {
        TimeGrid grid(1.0, 40);
        const KernelSet k = kernels_from(
            grid, [&](std::size_t) { return alpha_range(rng); },
            [&](std::size_t, std::size_t) { return beta_range(rng); });
        MeasurementSeries phi;
        phi.phi.resize(grid.node_count());
        for (double& v : phi.phi) v = phi_range(rng);

        const XiSeries a = solve_stepwise(k, phi, grid);
        const XiSeries b = solve_dense_oracle(k, phi, grid);
        REQUIRE(a.xi.size() == b.xi.size());
        for (std::size_t n = 0; n < a.xi.size(); ++n) {
            CHECK_THAT(a.xi[n], Catch::Matchers::WithinRel(b.xi[n], 1e-12));
        }
        CHECK(a.positivity_horizon == b.positivity_horizon);
    }
}

TEST_CASE("positive data keeps the solution positive") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> phi_range(0.5, 2.0);
    std::uniform_real_distribution<double> beta_range(0.0, 1.0);
    std::uniform_real_distribution<double> alpha_range(0.1, 5.0);
    std::uniform_int_distribution<std::size_t> n_range(5, 50);

    for (int trial = 0; trial < 200; ++trial) {
        TimeGrid grid(1.0, n_range(rng));
        const KernelSet k = kernels_from(
            grid, [&](std::size_t) { return alpha_range(rng); },
            [&](std::size_t, std::size_t) { return beta_range(rng); });
        MeasurementSeries phi;
        phi.phi.resize(grid.node_count());
        for (double& v : phi.phi) v = phi_range(rng);

        const XiSeries xi = solve_stepwise(k, phi, grid);
        CHECK(xi.positivity_horizon == grid.n_steps());
        for (double v : xi.xi) CHECK(v > 0.0);
    }
}

TEST_CASE("solutions satisfy the discrete equation they came from") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.1, 1.5);
    TimeGrid grid(2.0, 80);
    const KernelSet k = kernels_from(
        grid, [&](std::size_t) { return unit(rng); },
        [&](std::size_t, std::size_t) { return unit(rng); });
    MeasurementSeries phi;
    phi.phi.resize(grid.node_count());
    for (double& v : phi.phi) v = unit(rng) + 0.5;

    const XiSeries xi = solve_stepwise(k, phi, grid);
    CHECK(max_residual(k, phi, grid, xi) < 1e-10);
}

TEST_CASE("input validation rejects unusable measurements") {
    TimeGrid grid(1.0, 4);
    const KernelSet k = kernels_from(grid, [](std::size_t) { return 1.0; },
                                     [](std::size_t, std::size_t) { return 0.0; });

    SECTION("length mismatch") {
        MeasurementSeries phi;
        phi.phi.assign(3, 1.0);
        CHECK_THROWS_AS(solve_stepwise(k, phi, grid), numeric_error);
    }
    SECTION("zero crossing violates separation") {
        MeasurementSeries phi = constant_phi(grid, 1.0);
        phi.phi[2] = 0.0;
        CHECK_THROWS_WITH(solve_stepwise(k, phi, grid),
                          Catch::Matchers::ContainsSubstring("node 2"));
    }
    SECTION("below the configured floor") {
        MeasurementSeries phi = constant_phi(grid, 1.0);
        phi.phi[3] = 1e-9;
        VolterraOptions opt;
        opt.phi_floor = 1e-6;
        CHECK_THROWS_AS(solve_stepwise(k, phi, grid, opt), hypothesis_error);
    }
    SECTION("sign disagreement at the anchor node") {
        MeasurementSeries phi = constant_phi(grid, -1.0);
        CHECK_THROWS_AS(solve_stepwise(k, phi, grid), hypothesis_error);
        CHECK_THROWS_AS(solve_dense_oracle(k, phi, grid), hypothesis_error);
    }
    SECTION("negative data on both sides is fine") {
        const KernelSet neg = kernels_from(grid, [](std::size_t) { return -2.0; },
                                           [](std::size_t, std::size_t) { return 0.0; });
        MeasurementSeries phi = constant_phi(grid, -1.0);
        const XiSeries xi = solve_stepwise(neg, phi, grid);
        for (double v : xi.xi) CHECK(v == 2.0);
    }
}

TEST_CASE("degenerate quadrature denominator is a numeric error") {
    TimeGrid grid(1.0, 4);
    const double h = grid.dt();
    KernelSet k = kernels_from(grid, [](std::size_t) { return 1.0; },
                               [](std::size_t, std::size_t) { return 0.0; });
    MeasurementSeries phi = constant_phi(grid, 1.0);
    k.beta.at(2, 2) = 2.0 * phi.phi[2] / h; // phi_2 - h beta_22 / 2 = 0
    CHECK_THROWS_WITH(solve_stepwise(k, phi, grid),
                      Catch::Matchers::ContainsSubstring("refine h"));
    CHECK_THROWS_AS(solve_dense_oracle(k, phi, grid), numeric_error);
}

TEST_CASE("positivity horizon tracks the first sign loss") {
    TimeGrid grid(1.0, 4);
    const KernelSet k = kernels_from(grid, [](std::size_t n) {
        return n < 3 ? 1.0 : -1.0; // alpha flips sign at node 3
    },
                                     [](std::size_t, std::size_t) { return 0.0; });
    const XiSeries xi = solve_stepwise(k, constant_phi(grid, 1.0), grid);
    CHECK(xi.positivity_horizon == 2);
    CHECK(xi.xi[3] == -1.0);
}
