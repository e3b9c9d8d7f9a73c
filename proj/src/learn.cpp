#include "assignflow/learn.hpp"

#include "assignflow/manifold.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace assignflow {

int TrainConfig::forward_steps() const {
    if (h <= 0.0 || t_end <= 0.0) throw std::invalid_argument("step size and horizon must be positive");
    const double ratio = t_end / h;
    const int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9 * ratio)
        throw std::invalid_argument("t_end must be an integral multiple of h");
    return n;
}

double kl_objective(const Matrix& v, const Matrix& wstar) {
    // KL(w*, softmax(v)) summed over rows; <w*, log w*> vanishes for unit
    // basis rows, leaving logsumexp(v_i) - <w*_i, v_i>.
    double total = 0.0;
    for (Index i = 0; i < v.rows(); ++i) {
        const double shift = v.row(i).maxCoeff();
        const double lse = shift + std::log((v.row(i).array() - shift).exp().sum());
        total += lse - wstar.row(i).dot(v.row(i));
    }
    return total;
}

Matrix kl_gradient(const Matrix& v, const Matrix& wstar) {
    Matrix grad(v.rows(), v.cols());
    for (Index i = 0; i < v.rows(); ++i) {
        const double shift = v.row(i).maxCoeff();
        const Eigen::ArrayXd e = (v.row(i).array() - shift).exp();
        grad.row(i) = (e / e.sum()).matrix().transpose();
    }
    return grad - wstar;
}

namespace {

// Forward node states V^(0..N); for Heun also the second stage states
// X_{n,2} = V^(n) + h F(V^(n)) needed by the adjoint pass.
struct ForwardPass {
    std::vector<Matrix> v;
    std::vector<Matrix> stage2;
};

ForwardPass run_forward(const Matrix& omega, const FlowContext& ctx, const TrainConfig& cfg) {
    const int n_steps = cfg.forward_steps();
    ForwardPass fwd;
    fwd.v.reserve(static_cast<std::size_t>(n_steps) + 1);
    fwd.v.push_back(Matrix::Zero(ctx.pixels(), ctx.labels()));
    if (cfg.integrator == Integrator::heun) fwd.stage2.reserve(static_cast<std::size_t>(n_steps));

    for (int n = 0; n < n_steps; ++n) {
        const Matrix& vn = fwd.v.back();
        if (cfg.integrator == Integrator::euler) {
            fwd.v.push_back(vn + cfg.h * modified_laf_field(vn, omega, ctx));
        } else {
            const Matrix k1 = modified_laf_field(vn, omega, ctx);
            Matrix x2 = vn + cfg.h * k1;
            const Matrix k2 = modified_laf_field(x2, omega, ctx);
            fwd.v.push_back(vn + 0.5 * cfg.h * (k1 + k2));
            fwd.stage2.push_back(std::move(x2));
        }
    }
    return fwd;
}

Matrix backward_gradient(const ForwardPass& fwd, const Matrix& omega, const FlowContext& ctx,
                         const Matrix& wstar, const TrainConfig& cfg) {
    const int n_steps = static_cast<int>(fwd.v.size()) - 1;
    Matrix grad = Matrix::Zero(omega.rows(), omega.cols());
    Matrix lambda = kl_gradient(fwd.v.back(), wstar);

    if (cfg.integrator == Integrator::euler) {
        // lambda^(j) = lambda^(j+1) + h dVF^T lambda^(j+1); the gradient term
        // pairs lambda^(j+1) with the stage state X_{j,1} = V^(j).
        for (int j = n_steps - 1; j >= 0; --j) {
            grad += cfg.h * domega_f_adjoint(lambda, fwd.v[static_cast<std::size_t>(j)], ctx);
            lambda += cfg.h * dv_f_adjoint(lambda, omega, ctx);
        }
    } else {
        // Heun adjoint, solved explicitly backwards via the intermediate
        // costate lt = lambda^(j+1) + h dVF^T lambda^(j+1).
        for (int j = n_steps - 1; j >= 0; --j) {
            const Matrix lt = lambda + cfg.h * dv_f_adjoint(lambda, omega, ctx);
            grad += 0.5 * cfg.h *
                    (domega_f_adjoint(lt, fwd.v[static_cast<std::size_t>(j)], ctx) +
                     domega_f_adjoint(lambda, fwd.stage2[static_cast<std::size_t>(j)], ctx));
            lambda += 0.5 * cfg.h * (dv_f_adjoint(lt, omega, ctx) + dv_f_adjoint(lambda, omega, ctx));
        }
    }
    return grad;
}

}  // namespace

Matrix integrate_linear_flow(const Matrix& omega, const FlowContext& ctx, const TrainConfig& cfg) {
    return run_forward(omega, ctx, cfg).v.back();
}

std::vector<Matrix> integrate_linear_flow_trajectory(const Matrix& omega, const FlowContext& ctx,
                                                     const TrainConfig& cfg) {
    return run_forward(omega, ctx, cfg).v;
}

double phi_value(const Matrix& omega, const FlowContext& ctx, const Matrix& wstar,
                 const TrainConfig& cfg) {
    return kl_objective(integrate_linear_flow(omega, ctx, cfg), wstar);
}

PhiResult phi_and_gradient(const Matrix& omega, const FlowContext& ctx, const Matrix& wstar,
                           const TrainConfig& cfg) {
    const ForwardPass fwd = run_forward(omega, ctx, cfg);
    PhiResult out;
    out.value = kl_objective(fwd.v.back(), wstar);
    out.grad = backward_gradient(fwd, omega, ctx, wstar, cfg);
    return out;
}

Matrix riemannian_step(const Matrix& omega, const Matrix& grad, double step) {
    return simplex_exp(omega, -step * replicator(omega, grad));
}

TrainResult train(const DistanceMatrix& dist, const Matrix& wstar, const NeighborhoodGraph& g,
                  const TrainConfig& cfg) {
    const FlowContext ctx = make_context(dist, g);

    Matrix omega = uniform_weights(g);
    ForwardPass fwd = run_forward(omega, ctx, cfg);
    double value = kl_objective(fwd.v.back(), wstar);
    Matrix grad = backward_gradient(fwd, omega, ctx, wstar, cfg);

    TrainResult result;
    result.objective_history.push_back(value);

    for (int k = 0; k < cfg.max_outer; ++k) {
        double step = cfg.h_prime;
        Matrix candidate;
        ForwardPass cand_fwd;
        double cand_value = value;
        bool accepted = false;
        for (int halving = 0; halving <= cfg.backtracking.max_halvings; ++halving) {
            candidate = riemannian_step(omega, grad, step);
            cand_fwd = run_forward(candidate, ctx, cfg);
            cand_value = kl_objective(cand_fwd.v.back(), wstar);
            if (cand_value < value) {
                accepted = true;
                break;
            }
            step *= cfg.backtracking.factor;
        }
        if (!accepted) {
            result.stalled = true;
            break;
        }

        omega = std::move(candidate);
        if (!is_assignment_matrix(omega, 1e-12))
            throw std::runtime_error("weight iterate left the parameter manifold");
        const double prev = value;
        value = cand_value;
        fwd = std::move(cand_fwd);
        grad = backward_gradient(fwd, omega, ctx, wstar, cfg);
        result.objective_history.push_back(value);
        ++result.iterations;

        const double rel_change = std::abs(value - prev) / (cfg.h_prime * std::abs(value));
        if (rel_change < cfg.rel_change_tol) break;
    }

    result.omega_star = std::move(omega);
    const Matrix w_end =
        simplex_exp(barycenter_matrix(ctx.pixels(), ctx.labels()), fwd.v.back());
    result.final_labeling = round_assignment(w_end, cfg.entropy_threshold);
    return result;
}

}  // namespace assignflow
