#pragma once

#include "assignflow/flow.hpp"
#include "assignflow/types.hpp"

#include <vector>

namespace assignflow {

// Training objective and optimizer: the KL discrepancy of the flow's
// terminal state to a ground-truth labeling, the discrete adjoint pass that
// produces its Euclidean gradient with respect to the weights, and the
// Riemannian gradient descent on the parameter manifold.

enum class Integrator { euler, heun };

struct Backtracking {
    double factor = 0.5;
    int max_halvings = 20;
};

struct TrainConfig {
    double rho = 0.5;
    int window = 7;
    double h = 0.1;        // forward step size; t_end / h must be integral
    double t_end = 6.0;
    double h_prime = 0.005;  // initial Riemannian step
    int max_outer = 50;
    double rel_change_tol = 0.01;
    Integrator integrator = Integrator::euler;
    Backtracking backtracking;
    double entropy_threshold = 0.1;

    // Number of forward steps; throws if t_end is not a multiple of h.
    int forward_steps() const;
};

struct TrainResult {
    Matrix omega_star;
    std::vector<double> objective_history;  // nonincreasing by construction
    LabelImage final_labeling;
    int iterations = 0;
    // Set when backtracking ran out of halvings without a decrease; the
    // best iterate seen so far is returned.
    bool stalled = false;
};

// C(V) = sum_i KL(wstar_i, softmax(v_i)). Rows of wstar must be unit basis
// vectors.
double kl_objective(const Matrix& v, const Matrix& wstar);

// Euclidean gradient softmax(V) - W*; rows sum to zero up to rounding.
Matrix kl_gradient(const Matrix& v, const Matrix& wstar);

// Terminal tangent state of the linear flow under the configured scheme.
Matrix integrate_linear_flow(const Matrix& omega, const FlowContext& ctx, const TrainConfig& cfg);
// Same, retaining every node state V^(0..N).
std::vector<Matrix> integrate_linear_flow_trajectory(const Matrix& omega, const FlowContext& ctx,
                                                     const TrainConfig& cfg);

struct PhiResult {
    double value = 0.0;
    Matrix grad;  // pixels x patch_size, rows sum to zero
};

// Objective value only (forward pass); used by the backtracking search.
double phi_value(const Matrix& omega, const FlowContext& ctx, const Matrix& wstar,
                 const TrainConfig& cfg);

// Forward integration followed by the discrete adjoint pass matched to the
// forward scheme; the returned gradient is the exact derivative of the
// discretized objective.
PhiResult phi_and_gradient(const Matrix& omega, const FlowContext& ctx, const Matrix& wstar,
                           const TrainConfig& cfg);

// One step of the discretized Riemannian flow:
// simplex_exp(omega, -step * replicator(omega, grad)) row-wise.
Matrix riemannian_step(const Matrix& omega, const Matrix& grad, double step);

TrainResult train(const DistanceMatrix& dist, const Matrix& wstar, const NeighborhoodGraph& g,
                  const TrainConfig& cfg);

}  // namespace assignflow
