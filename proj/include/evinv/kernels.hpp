#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/parallel.hpp"
#include "evinv/problem.hpp"
#include "evinv/propagator.hpp"

namespace evinv {

/// Packed lower-triangular matrix over the triangular node set
/// {(n, j) : 0 <= j <= n <= N}; row n holds n+1 entries.
class LowerTriangular {
public:
    LowerTriangular() = default;
    explicit LowerTriangular(std::size_t rows)
        : rows_(rows), a_(rows * (rows + 1) / 2, 0.0) {}

    std::size_t rows() const { return rows_; }

    double& at(std::size_t n, std::size_t j) { return a_[offset(n, j)]; }
    double at(std::size_t n, std::size_t j) const { return a_[offset(n, j)]; }

private:
    std::size_t offset(std::size_t n, std::size_t j) const {
        if (j > n || n >= rows_) {
            throw numeric_error("triangular index (" + std::to_string(n) + ", " +
                                std::to_string(j) + ") out of range");
        }
        return n * (n + 1) / 2 + j;
    }

    std::size_t rows_ = 0;
    std::vector<double> a_;
};

/// Discrete data of the measurement-side integral equation:
///   alpha_n   = <U(t_n, 0) u0, w>
///   beta_{n,j} = <U(t_n, t_j) f(t_j), w>,  j <= n.
struct KernelSet {
    std::vector<double> alpha;
    LowerTriangular beta;
};

/// Builds alpha by one forward propagation of u0 and beta column by
/// column: column j propagates f(t_j) from node j to N, pairing at every
/// node on the way. Columns are independent, so they run in parallel;
/// every entry has a fixed write location, which keeps the result
/// bit-identical for any thread count.
inline KernelSet assemble_kernels(const Propagator& prop, const ProblemSpec& spec,
                                  unsigned threads = 0) {
    const std::size_t n_steps = spec.grid.n_steps();
    const std::size_t nodes = n_steps + 1;

    KernelSet k;
    k.alpha.resize(nodes);
    k.beta = LowerTriangular(nodes);

    StateVector u = spec.u0;
    k.alpha[0] = pair(u, spec.pairing);
    for (std::size_t n = 0; n < n_steps; ++n) {
        u = prop.step(u, n);
        k.alpha[n + 1] = pair(u, spec.pairing);
    }

    parallel_for(nodes, threads, [&](std::size_t j) {
        try {
            StateVector v = spec.source[j];
            k.beta.at(j, j) = pair(v, spec.pairing);
            for (std::size_t n = j; n < n_steps; ++n) {
                v = prop.step(v, n);
                k.beta.at(n + 1, j) = pair(v, spec.pairing);
            }
        } catch (const error& e) {
            throw numeric_error("kernel column j = " + std::to_string(j) + ": " + e.what());
        }
    });

    return k;
}

} // namespace evinv
