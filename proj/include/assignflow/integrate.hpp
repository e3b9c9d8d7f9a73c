#pragma once

#include "assignflow/types.hpp"

#include <functional>
#include <vector>

namespace assignflow {

// Runge-Kutta machinery: tableaux, symplectic partner construction, forward
// integration with stored internal stages, the discrete adjoint recursion
// traversed backwards in time, and the variational system used as a
// brute-force gradient oracle.

struct ButcherTableau {
    Matrix a;  // s x s stage coefficients
    Vector b;  // quadrature weights
    Vector c;  // abscissae

    int stages() const { return static_cast<int>(b.size()); }
    // Strictly lower-triangular coefficient matrix.
    bool is_explicit() const;

    static ButcherTableau explicit_euler();
    static ButcherTableau heun();
    static ButcherTableau classical_rk4();
    static ButcherTableau implicit_midpoint();
};

// Partner coefficients a'_ij = b_j - b_j a_ji / b_i, b' = b, c' = c. The
// pair (tableau, partner) integrates a partitioned system while conserving
// bilinear invariants. Throws for tableaux with a vanishing weight.
ButcherTableau symplectic_partner(const ButcherTableau& t);

// All s^2 + 2s partitioned symplecticity conditions
//   b_i a2_ij - b_i b2_j + b2_j a1_ji = 0,  b2_i = b_i,  c2_i = c_i
// within tol. Throws on a stage-count mismatch.
bool check_partitioned_symplectic(const ButcherTableau& t1, const ButcherTableau& t2, double tol);

struct TimeGrid {
    double t0 = 0.0;
    std::vector<double> step;  // per-step sizes, all positive

    static TimeGrid uniform(double t0, double t_end, int n_steps);
    int steps() const { return static_cast<int>(step.size()); }
    double t_end() const;
    // Node time t_n.
    double time(int n) const;
};

using OdeField = std::function<Vector(const Vector&, double)>;

// Forward trajectory with the internal stage states X_{n,i} retained; the
// discrete adjoint re-evaluates Jacobians at exactly these states.
struct Trajectory {
    std::vector<Vector> states;               // x_0 .. x_N
    std::vector<std::vector<Vector>> stages;  // stages[n][i] = X_{n,i}
};

// Fixed-point parameters for implicit tableaux (step sizes must satisfy the
// contraction condition; otherwise the iteration fails to converge).
inline constexpr int kFixedPointMaxSweeps = 50;
inline constexpr double kFixedPointTol = 1e-12;

Trajectory rk_integrate(const OdeField& field, const Vector& x0, const TimeGrid& grid,
                        const ButcherTableau& tableau);

// Jacobian-transpose action (X, t, y) -> d_x f(X, t)^T y.
using JacobianTransposeApply = std::function<Vector(const Vector&, double, const Vector&)>;

struct AdjointTrajectory {
    std::vector<Vector> costates;             // lambda_0 .. lambda_N
    std::vector<std::vector<Vector>> stages;  // stages[n][i] = Lambda_{n,i}
};

// Discrete adjoint of the forward scheme: the recursion
//   Lambda_{n,i} = lambda_{n+1} - h_n sum_j (a_ji b_j / b_i) l_{n,j}
//   l_{n,j}      = -d_x f(X_{n,j})^T Lambda_{n,j}
//   lambda_n     = lambda_{n+1} - h_n sum_j b_j l_{n,j}
// traversed backwards from the supplied terminal costate. Equivalent to
// integrating the adjoint system with the symplectic partner tableau. For an
// explicit forward tableau the stage sweep is explicit in reverse stage
// order; otherwise stages are resolved by fixed-point iteration.
AdjointTrajectory discrete_adjoint(const Trajectory& traj, const JacobianTransposeApply& dxf_t,
                                   const TimeGrid& grid, const ButcherTableau& forward,
                                   const Vector& lambda_end);

// Parameter-Jacobian-transpose action (X, t, y) -> d_p f(X, t)^T y.
using ParameterTransposeApply = std::function<Vector(const Vector&, double, const Vector&)>;

// Quadrature  sum_n h_n sum_i b_i d_p f(X_{n,i})^T Lambda_{n,i}.
Vector adjoint_gradient(const Trajectory& traj, const AdjointTrajectory& adj,
                        const ParameterTransposeApply& dpf_t, const TimeGrid& grid,
                        const ButcherTableau& forward);

// Jacobian action on a block of directions: (x, t, D) -> d_x f(x, t) D.
using JacobianApply = std::function<Matrix(const Vector&, double, const Matrix&)>;
// Parameter differential evaluated on a fixed set of directions:
// (x, t) -> matrix whose k-th column is d_p f(x, t) applied to direction k.
using ParameterJacobian = std::function<Matrix(const Vector&, double)>;

// Integrates the variational system  delta' = d_x f delta + d_p f, delta(0)=0
// alongside the state with the same tableau and grid; column k of the result
// is the exact derivative of the discrete x_N along parameter direction k.
Matrix variational_sensitivity(const OdeField& field, const JacobianApply& dxf,
                               const ParameterJacobian& dpf, const Vector& x0,
                               const TimeGrid& grid, const ButcherTableau& tableau);

// <f(x, t), lambda>; the bilinear quantity behind the two-point boundary
// value problem.
double pseudo_hamiltonian(const OdeField& field, const Vector& x, const Vector& lambda, double t);

using ManifoldField = std::function<Matrix(const Matrix&, double)>;

// Geometric Euler steps W_{k+1} = simplex_exp(W_k, h_k F(W_k, t_k)); every
// iterate is a valid assignment matrix by construction.
std::vector<Matrix> geometric_euler(const ManifoldField& field, const Matrix& w0,
                                    const TimeGrid& grid);

}  // namespace assignflow
