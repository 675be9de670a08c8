#pragma once

#include <cstddef>

#include "evinv/errors.hpp"

namespace evinv {

/// Uniform partition of [0, T] into N steps of size dt = T/N.
///
/// Nodes are t_n = n*dt for n = 0..N, except that the last node is pinned
/// to T exactly so accumulated rounding never shortens the interval.
/// Kernel matrices over this grid live on the triangular index set
/// {(n, j) : 0 <= j <= n <= N}.
class TimeGrid {
public:
    /// Smallest valid grid; placeholder until a real one is assigned.
    TimeGrid() : TimeGrid(1.0, 2) {}

    TimeGrid(double t_final, std::size_t n_steps)
        : t_final_(t_final), n_steps_(n_steps) {
        if (!(t_final > 0.0)) {
            throw config_error("T: final time must be positive");
        }
        if (n_steps < 2) {
            throw config_error("N: number of steps must be >= 2");
        }
        dt_ = t_final / static_cast<double>(n_steps);
    }

    double t_final() const { return t_final_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t node_count() const { return n_steps_ + 1; }
    double dt() const { return dt_; }

    double node(std::size_t n) const {
        return n == n_steps_ ? t_final_ : static_cast<double>(n) * dt_;
    }

private:
    double t_final_;
    std::size_t n_steps_;
    double dt_;
};

} // namespace evinv
