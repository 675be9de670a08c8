#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evinv/errors.hpp"
#include "evinv/linalg.hpp"
#include "evinv/problem.hpp"

namespace evinv {

/// Second-order finite-difference discretization of
/// (a u_x)_x + b u_x + c u at time t, on the interior nodes of the
/// spatial grid. Diffusion uses conservative differencing with face
/// values a_{i+-1/2} = (a_i + a_{i+-1})/2, advection is centered, and
/// the homogeneous Dirichlet boundary rows are eliminated.
inline Tridiagonal assemble_parabolic_operator(const Parabolic1D& p, double t) {
    const std::size_t m = p.interior_nodes;
    const double dx = p.dx();
    const double inv_dx2 = 1.0 / (dx * dx);
    const double inv_2dx = 1.0 / (2.0 * dx);

    std::vector<double> a_node(m + 2);
    for (std::size_t i = 0; i <= m + 1; ++i) {
        a_node[i] = p.diffusion(p.x(i), t);
        if (!(a_node[i] > 0.0)) {
            throw numeric_error("ellipticity violated: a(x, t) <= 0 at node x_" +
                                std::to_string(i) + " = " + std::to_string(p.x(i)) +
                                ", t = " + std::to_string(t));
        }
    }

    Tridiagonal op(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = p.x(i + 1);
        const double a_plus = 0.5 * (a_node[i + 1] + a_node[i + 2]);
        const double a_minus = 0.5 * (a_node[i + 1] + a_node[i]);
        const double b = p.advection(x, t);
        const double c = p.reaction(x, t);
        op.diag[i] = -(a_plus + a_minus) * inv_dx2 + c;
        if (i + 1 < m) op.sup[i] = a_plus * inv_dx2 + b * inv_2dx;
        if (i > 0) op.sub[i] = a_minus * inv_dx2 - b * inv_2dx;
    }
    return op;
}

/// Sign-pattern certificate for inverse positivity of the implicit system
/// matrices I - h*A(t_{n+1}): nonpositive off-diagonal entries, positive
/// diagonal, and strict row dominance. When it holds at every step, a
/// nonnegative state stays nonnegative under implicit Euler.
struct MMatrixReport {
    bool applicable = false;               // implicit Euler + parabolic backend only
    std::vector<std::size_t> violating_steps;

    bool ok() const { return applicable && violating_steps.empty(); }
};

namespace detail {

struct PropDenseImpl {
    const MatrixFamily* family = nullptr;
    std::vector<DenseLu> lhs;
};

struct PropTriImpl {
    std::vector<Tridiagonal> op; // A(t_n) for every node
    std::vector<TridiagonalLu> lhs;
};

} // namespace detail

/// Discrete evolution family: the two-parameter solution operator of
/// u' = A(t) u realized as a sequence of one-step implicit maps.
///
/// Crank-Nicolson advances by (I - h/2 A(t_{n+1})) z = (I + h/2 A(t_n)) v,
/// implicit Euler by (I - h A(t_{n+1})) z = v. One factorization per time
/// step is built at construction and reused for every propagation, so the
/// O(N^2) solves of kernel assembly amortize the setup.
///
/// propagate(v, n, n) returns v unchanged, and stepping is composition of
/// one-step maps, so the discrete family satisfies the identity and
/// composition laws bitwise. Instances are immutable after construction
/// and safe to share across threads.
class Propagator {
public:
    explicit Propagator(const ProblemSpec& spec) : spec_(&spec) {
        const auto problems = validate_spec(spec);
        if (!problems.empty()) {
            throw config_error("invalid problem spec: " + problems.front());
        }
        const std::size_t n_steps = spec.grid.n_steps();
        const double h = spec.grid.dt();

        if (const auto* fam = std::get_if<MatrixFamily>(&spec.backend)) {
            detail::PropDenseImpl impl;
            impl.family = fam;
            impl.lhs.reserve(n_steps);
            for (std::size_t n = 0; n < n_steps; ++n) {
                const DenseMatrix& a_next = fam->at_node[n + 1];
                DenseMatrix lhs(fam->dim);
                const double w = implicit_weight() * h;
                for (std::size_t i = 0; i < fam->dim; ++i) {
                    for (std::size_t j = 0; j < fam->dim; ++j) {
                        lhs(i, j) = (i == j ? 1.0 : 0.0) - w * a_next(i, j);
                    }
                }
                impl.lhs.push_back(DenseLu::factor(lhs, node_name(n + 1)));
            }
            impl_ = std::move(impl);
        } else {
            const auto& par = std::get<Parabolic1D>(spec.backend);
            detail::PropTriImpl impl;
            impl.op.reserve(n_steps + 1);
            for (std::size_t n = 0; n <= n_steps; ++n) {
                impl.op.push_back(assemble_parabolic_operator(par, spec.grid.node(n)));
            }
            impl.lhs.reserve(n_steps);
            mmatrix_.applicable = (spec.stepper == Stepper::ImplicitEuler);
            for (std::size_t n = 0; n < n_steps; ++n) {
                Tridiagonal lhs = shift_identity(impl.op[n + 1], implicit_weight() * h);
                if (mmatrix_.applicable && !mmatrix_pattern_ok(lhs)) {
                    mmatrix_.violating_steps.push_back(n);
                }
                impl.lhs.push_back(TridiagonalLu::factor(lhs, node_name(n + 1)));
            }
            impl_ = std::move(impl);
        }
    }

    const ProblemSpec& spec() const { return *spec_; }
    const MMatrixReport& mmatrix() const { return mmatrix_; }

    /// One step from node n to node n+1.
    StateVector step(const StateVector& v, std::size_t n) const {
        check_step_index(n);
        StateVector z = rhs(v, n);
        solve_lhs(z, n);
        return z;
    }

    /// Applies steps from, from+1, ..., to-1 in order; identity when from == to.
    StateVector propagate(StateVector v, std::size_t from, std::size_t to) const {
        if (from > to || to > spec_->grid.n_steps()) {
            throw numeric_error("propagate: invalid index range " + std::to_string(from) +
                                " -> " + std::to_string(to));
        }
        for (std::size_t n = from; n < to; ++n) {
            StateVector z = rhs(v, n);
            solve_lhs(z, n);
            v = std::move(z);
        }
        return v;
    }

private:
    double implicit_weight() const {
        return spec_->stepper == Stepper::CrankNicolson ? 0.5 : 1.0;
    }

    static std::string node_name(std::size_t n) {
        return "time node " + std::to_string(n);
    }

    static Tridiagonal shift_identity(const Tridiagonal& a, double w) {
        Tridiagonal r(a.dim());
        for (std::size_t i = 0; i < a.dim(); ++i) {
            r.diag[i] = 1.0 - w * a.diag[i];
            r.sub[i] = -w * a.sub[i];
            r.sup[i] = -w * a.sup[i];
        }
        return r;
    }

    static bool mmatrix_pattern_ok(const Tridiagonal& lhs) {
        const std::size_t m = lhs.dim();
        for (std::size_t i = 0; i < m; ++i) {
            if (lhs.sub[i] > 0.0 || lhs.sup[i] > 0.0) return false;
            const double off = std::abs(lhs.sub[i]) + std::abs(lhs.sup[i]);
            if (!(lhs.diag[i] > 0.0) || !(lhs.diag[i] - off > 0.0)) return false;
        }
        return true;
    }

    void check_step_index(std::size_t n) const {
        if (n >= spec_->grid.n_steps()) {
            throw numeric_error("step: index " + std::to_string(n) + " out of range");
        }
    }

    // Explicit half of the scheme: v for implicit Euler,
    // (I + h/2 A(t_n)) v for Crank-Nicolson.
    StateVector rhs(const StateVector& v, std::size_t n) const {
        if (spec_->stepper == Stepper::ImplicitEuler) return v;
        const double w = 0.5 * spec_->grid.dt();
        StateVector out(v.size());
        if (const auto* dense = std::get_if<detail::PropDenseImpl>(&impl_)) {
            dense->family->at_node[n].multiply(v, out);
        } else {
            std::get<detail::PropTriImpl>(impl_).op[n].multiply(v, out);
        }
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] + w * out[i];
        return out;
    }

    void solve_lhs(StateVector& z, std::size_t n) const {
        if (const auto* dense = std::get_if<detail::PropDenseImpl>(&impl_)) {
            dense->lhs[n].solve_in_place(z);
        } else {
            std::get<detail::PropTriImpl>(impl_).lhs[n].solve_in_place(z);
        }
    }

    const ProblemSpec* spec_;
    std::variant<detail::PropDenseImpl, detail::PropTriImpl> impl_;
    MMatrixReport mmatrix_;
};

} // namespace evinv
