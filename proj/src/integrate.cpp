#include "assignflow/integrate.hpp"

#include "assignflow/manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace assignflow {

bool ButcherTableau::is_explicit() const {
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = i; j < a.cols(); ++j)
            if (a(i, j) != 0.0) return false;
    return true;
}

ButcherTableau ButcherTableau::explicit_euler() {
    ButcherTableau t;
    t.a = Matrix::Zero(1, 1);
    t.b = Vector::Constant(1, 1.0);
    t.c = Vector::Zero(1);
    return t;
}

ButcherTableau ButcherTableau::heun() {
    ButcherTableau t;
    t.a = Matrix::Zero(2, 2);
    t.a(1, 0) = 1.0;
    t.b = Vector::Constant(2, 0.5);
    t.c = Vector::Zero(2);
    t.c(1) = 1.0;
    return t;
}

ButcherTableau ButcherTableau::classical_rk4() {
    ButcherTableau t;
    t.a = Matrix::Zero(4, 4);
    t.a(1, 0) = 0.5;
    t.a(2, 1) = 0.5;
    t.a(3, 2) = 1.0;
    t.b.resize(4);
    t.b << 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0;
    t.c.resize(4);
    t.c << 0.0, 0.5, 0.5, 1.0;
    return t;
}

ButcherTableau ButcherTableau::implicit_midpoint() {
    ButcherTableau t;
    t.a = Matrix::Constant(1, 1, 0.5);
    t.b = Vector::Constant(1, 1.0);
    t.c = Vector::Constant(1, 0.5);
    return t;
}

ButcherTableau symplectic_partner(const ButcherTableau& t) {
    const int s = t.stages();
    for (int i = 0; i < s; ++i)
        if (t.b(i) == 0.0) throw std::invalid_argument("symplectic partner requires nonzero weights");

    ButcherTableau p;
    p.a.resize(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) p.a(i, j) = t.b(j) - t.b(j) * t.a(j, i) / t.b(i);
    p.b = t.b;
    p.c = t.c;
    return p;
}

bool check_partitioned_symplectic(const ButcherTableau& t1, const ButcherTableau& t2, double tol) {
    if (t1.stages() != t2.stages()) throw std::invalid_argument("stage count mismatch");
    const int s = t1.stages();
    for (int i = 0; i < s; ++i) {
        if (std::abs(t2.b(i) - t1.b(i)) > tol) return false;
        if (std::abs(t2.c(i) - t1.c(i)) > tol) return false;
        for (int j = 0; j < s; ++j) {
            const double cond = t1.b(i) * t2.a(i, j) - t1.b(i) * t2.b(j) + t2.b(j) * t1.a(j, i);
            if (std::abs(cond) > tol) return false;
        }
    }
    return true;
}

TimeGrid TimeGrid::uniform(double t0, double t_end, int n_steps) {
    if (n_steps <= 0 || t_end <= t0) throw std::invalid_argument("invalid time grid");
    TimeGrid g;
    g.t0 = t0;
    g.step.assign(static_cast<std::size_t>(n_steps), (t_end - t0) / n_steps);
    return g;
}

double TimeGrid::t_end() const {
    double t = t0;
    for (double h : step) t += h;
    return t;
}

double TimeGrid::time(int n) const {
    double t = t0;
    for (int k = 0; k < n; ++k) t += step[static_cast<std::size_t>(k)];
    return t;
}

namespace {

// Resolves the implicit stage system X_i = x_n + h sum_j a_ij f(X_j) by
// fixed-point sweeps; valid under the step-size contraction condition.
std::vector<Vector> implicit_stages(const OdeField& field, const Vector& xn, double t, double h,
                                    const ButcherTableau& tb) {
    const int s = tb.stages();
    std::vector<Vector> x_stage(static_cast<std::size_t>(s), xn);
    std::vector<Vector> k(static_cast<std::size_t>(s));
    const double scale = 1.0 + xn.norm();
    for (int sweep = 0; sweep < kFixedPointMaxSweeps; ++sweep) {
        for (int i = 0; i < s; ++i)
            k[static_cast<std::size_t>(i)] = field(x_stage[static_cast<std::size_t>(i)], t + tb.c(i) * h);
        double change = 0.0;
        for (int i = 0; i < s; ++i) {
            Vector next = xn;
            for (int j = 0; j < s; ++j) next += h * tb.a(i, j) * k[static_cast<std::size_t>(j)];
            change = std::max(change, (next - x_stage[static_cast<std::size_t>(i)]).norm());
            x_stage[static_cast<std::size_t>(i)] = std::move(next);
        }
        if (change <= kFixedPointTol * scale) return x_stage;
    }
    throw std::runtime_error("implicit stage iteration did not converge; reduce the step size");
}

}  // namespace

Trajectory rk_integrate(const OdeField& field, const Vector& x0, const TimeGrid& grid,
                        const ButcherTableau& tb) {
    const int s = tb.stages();
    const bool expl = tb.is_explicit();

    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(grid.steps()) + 1);
    traj.stages.reserve(static_cast<std::size_t>(grid.steps()));
    traj.states.push_back(x0);

    double t = grid.t0;
    for (int n = 0; n < grid.steps(); ++n) {
        const double h = grid.step[static_cast<std::size_t>(n)];
        const Vector& xn = traj.states.back();

        std::vector<Vector> x_stage;
        std::vector<Vector> k(static_cast<std::size_t>(s));
        if (expl) {
            x_stage.assign(static_cast<std::size_t>(s), Vector());
            for (int i = 0; i < s; ++i) {
                Vector xi = xn;
                for (int j = 0; j < i; ++j) xi += h * tb.a(i, j) * k[static_cast<std::size_t>(j)];
                k[static_cast<std::size_t>(i)] = field(xi, t + tb.c(i) * h);
                x_stage[static_cast<std::size_t>(i)] = std::move(xi);
            }
        } else {
            x_stage = implicit_stages(field, xn, t, h, tb);
            for (int i = 0; i < s; ++i)
                k[static_cast<std::size_t>(i)] = field(x_stage[static_cast<std::size_t>(i)], t + tb.c(i) * h);
        }

        Vector x_next = xn;
        for (int i = 0; i < s; ++i) x_next += h * tb.b(i) * k[static_cast<std::size_t>(i)];
        traj.stages.push_back(std::move(x_stage));
        traj.states.push_back(std::move(x_next));
        t += h;
    }
    return traj;
}

AdjointTrajectory discrete_adjoint(const Trajectory& traj, const JacobianTransposeApply& dxf_t,
                                   const TimeGrid& grid, const ButcherTableau& fwd,
                                   const Vector& lambda_end) {
    const int s = fwd.stages();
    for (int i = 0; i < s; ++i)
        if (fwd.b(i) == 0.0) throw std::invalid_argument("discrete adjoint requires nonzero weights");
    const int n_steps = grid.steps();
    if (static_cast<int>(traj.stages.size()) != n_steps)
        throw std::invalid_argument("trajectory does not match the time grid");

    // Backward stage couplings m(i,j) = a_ji b_j / b_i; strictly upper
    // triangular for an explicit forward tableau, so the reverse stage sweep
    // below is explicit (Euler and Heun fall out as the familiar schemes).
    Matrix m(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) m(i, j) = fwd.a(j, i) * fwd.b(j) / fwd.b(i);
    bool coupling_upper = true;
    for (int i = 0; i < s && coupling_upper; ++i)
        for (int j = 0; j <= i; ++j)
            if (m(i, j) != 0.0) { coupling_upper = false; break; }

    AdjointTrajectory adj;
    adj.costates.assign(static_cast<std::size_t>(n_steps) + 1, Vector());
    adj.stages.assign(static_cast<std::size_t>(n_steps), {});
    adj.costates.back() = lambda_end;

    std::vector<double> node_time(static_cast<std::size_t>(n_steps), grid.t0);
    for (int n = 1; n < n_steps; ++n)
        node_time[static_cast<std::size_t>(n)] =
            node_time[static_cast<std::size_t>(n) - 1] + grid.step[static_cast<std::size_t>(n) - 1];

    for (int n = n_steps - 1; n >= 0; --n) {
        const double h = grid.step[static_cast<std::size_t>(n)];
        const double tn = node_time[static_cast<std::size_t>(n)];
        const Vector& lam_next = adj.costates[static_cast<std::size_t>(n) + 1];
        const auto& x_stage = traj.stages[static_cast<std::size_t>(n)];

        std::vector<Vector> lam_stage(static_cast<std::size_t>(s), lam_next);
        std::vector<Vector> ell(static_cast<std::size_t>(s));
        if (coupling_upper) {
            for (int i = s - 1; i >= 0; --i) {
                Vector li = lam_next;
                for (int j = i + 1; j < s; ++j)
                    if (m(i, j) != 0.0) li -= h * m(i, j) * ell[static_cast<std::size_t>(j)];
                ell[static_cast<std::size_t>(i)] =
                    -dxf_t(x_stage[static_cast<std::size_t>(i)], tn + fwd.c(i) * h, li);
                lam_stage[static_cast<std::size_t>(i)] = std::move(li);
            }
        } else {
            const double scale = 1.0 + lam_next.norm();
            bool converged = false;
            for (int sweep = 0; sweep < kFixedPointMaxSweeps && !converged; ++sweep) {
                for (int i = 0; i < s; ++i)
                    ell[static_cast<std::size_t>(i)] = -dxf_t(x_stage[static_cast<std::size_t>(i)],
                                                              tn + fwd.c(i) * h,
                                                              lam_stage[static_cast<std::size_t>(i)]);
                double change = 0.0;
                for (int i = 0; i < s; ++i) {
                    Vector li = lam_next;
                    for (int j = 0; j < s; ++j) li -= h * m(i, j) * ell[static_cast<std::size_t>(j)];
                    change = std::max(change, (li - lam_stage[static_cast<std::size_t>(i)]).norm());
                    lam_stage[static_cast<std::size_t>(i)] = std::move(li);
                }
                converged = change <= kFixedPointTol * scale;
            }
            if (!converged)
                throw std::runtime_error("adjoint stage iteration did not converge; reduce the step size");
            for (int i = 0; i < s; ++i)
                ell[static_cast<std::size_t>(i)] = -dxf_t(x_stage[static_cast<std::size_t>(i)],
                                                          tn + fwd.c(i) * h,
                                                          lam_stage[static_cast<std::size_t>(i)]);
        }

        Vector lam = lam_next;
        for (int i = 0; i < s; ++i) lam -= h * fwd.b(i) * ell[static_cast<std::size_t>(i)];
        adj.stages[static_cast<std::size_t>(n)] = std::move(lam_stage);
        adj.costates[static_cast<std::size_t>(n)] = std::move(lam);
    }
    return adj;
}

Vector adjoint_gradient(const Trajectory& traj, const AdjointTrajectory& adj,
                        const ParameterTransposeApply& dpf_t, const TimeGrid& grid,
                        const ButcherTableau& fwd) {
    const int s = fwd.stages();
    Vector grad;
    double tn = grid.t0;
    for (int n = 0; n < grid.steps(); ++n) {
        const double h = grid.step[static_cast<std::size_t>(n)];
        for (int i = 0; i < s; ++i) {
            const Vector term = dpf_t(traj.stages[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)],
                                      tn + fwd.c(i) * h,
                                      adj.stages[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)]);
            if (grad.size() == 0) grad = Vector::Zero(term.size());
            grad += h * fwd.b(i) * term;
        }
        tn += h;
    }
    return grad;
}

Matrix variational_sensitivity(const OdeField& field, const JacobianApply& dxf,
                               const ParameterJacobian& dpf, const Vector& x0,
                               const TimeGrid& grid, const ButcherTableau& tb) {
    const Trajectory traj = rk_integrate(field, x0, grid, tb);
    const int s = tb.stages();

    Matrix delta = Matrix::Zero(x0.size(), dpf(x0, grid.t0).cols());
    double t = grid.t0;
    for (int n = 0; n < grid.steps(); ++n) {
        const double h = grid.step[static_cast<std::size_t>(n)];
        const auto& x_stage = traj.stages[static_cast<std::size_t>(n)];

        std::vector<Matrix> k(static_cast<std::size_t>(s));
        if (tb.is_explicit()) {
            for (int i = 0; i < s; ++i) {
                Matrix di = delta;
                for (int j = 0; j < i; ++j) di += h * tb.a(i, j) * k[static_cast<std::size_t>(j)];
                const double ti = t + tb.c(i) * h;
                k[static_cast<std::size_t>(i)] =
                    dxf(x_stage[static_cast<std::size_t>(i)], ti, di) + dpf(x_stage[static_cast<std::size_t>(i)], ti);
            }
        } else {
            std::vector<Matrix> d_stage(static_cast<std::size_t>(s), delta);
            bool converged = false;
            for (int sweep = 0; sweep < kFixedPointMaxSweeps && !converged; ++sweep) {
                for (int i = 0; i < s; ++i) {
                    const double ti = t + tb.c(i) * h;
                    k[static_cast<std::size_t>(i)] = dxf(x_stage[static_cast<std::size_t>(i)], ti,
                                                         d_stage[static_cast<std::size_t>(i)]) +
                                                     dpf(x_stage[static_cast<std::size_t>(i)], ti);
                }
                double change = 0.0;
                for (int i = 0; i < s; ++i) {
                    Matrix di = delta;
                    for (int j = 0; j < s; ++j) di += h * tb.a(i, j) * k[static_cast<std::size_t>(j)];
                    change = std::max(change, (di - d_stage[static_cast<std::size_t>(i)]).norm());
                    d_stage[static_cast<std::size_t>(i)] = std::move(di);
                }
                converged = change <= kFixedPointTol * (1.0 + delta.norm());
            }
            if (!converged)
                throw std::runtime_error("variational stage iteration did not converge; reduce the step size");
        }

        for (int i = 0; i < s; ++i) delta += h * tb.b(i) * k[static_cast<std::size_t>(i)];
        t += h;
    }
    return delta;
}

double pseudo_hamiltonian(const OdeField& field, const Vector& x, const Vector& lambda, double t) {
    return field(x, t).dot(lambda);
}

std::vector<Matrix> geometric_euler(const ManifoldField& field, const Matrix& w0,
                                    const TimeGrid& grid) {
    std::vector<Matrix> traj;
    traj.reserve(static_cast<std::size_t>(grid.steps()) + 1);
    traj.push_back(w0);
    double t = grid.t0;
    for (int n = 0; n < grid.steps(); ++n) {
        const double h = grid.step[static_cast<std::size_t>(n)];
        traj.push_back(simplex_exp(traj.back(), h * field(traj.back(), t)));
        t += h;
    }
    return traj;
}

}  // namespace assignflow
