#pragma once

#include "assignflow/graph.hpp"
#include "assignflow/types.hpp"

namespace assignflow {

// Data-dependent vector fields on the assignment manifold: the lifted
// distance (likelihood) matrix, geometrically averaged similarity, the
// nonlinear assignment flow, and the modified linear assignment flow
//   F(V, Omega) = Pi[L(W0)] + R_{S(W0)}[A_Omega V]
// together with its differentials and their adjoints.

struct DistanceMatrix {
    Matrix d;          // pixels x labels, nonnegative
    double rho = 1.0;  // distance scale; only d/rho enters the flow
};

// Row i: w_i .* e^{-d_i/rho} normalized.
Matrix likelihood(const Matrix& w, const DistanceMatrix& dist);

// Weighted geometric mean of likelihood vectors over each neighborhood,
// evaluated in the barycentric form
//   S_i = simplex_exp_{1/n}( sum_k omega_ik (simplex_exp_inv_{1/n}(w_k) - d_k/rho) ).
Matrix similarity(const Matrix& w, const Matrix& omega, const DistanceMatrix& dist,
                  const NeighborhoodGraph& g);

// Right-hand side of the nonlinear assignment flow, R_W[S(W)].
Matrix assignment_flow_field(const Matrix& w, const Matrix& omega, const DistanceMatrix& dist,
                             const NeighborhoodGraph& g);

// Quantities frozen at the barycenter initialization: the lifted distances,
// their tangent projection, and the similarity computed once with uniform
// weights. Immutable after construction and shareable across threads.
struct FlowContext {
    Matrix l0;      // L(W0)
    Matrix pi_l0;   // Pi[L(W0)]
    Matrix s0;      // S(W0) with the freeze weights (uniform by default)
    NeighborhoodGraph graph;

    Index pixels() const { return l0.rows(); }
    Index labels() const { return l0.cols(); }
};

FlowContext make_context(const DistanceMatrix& dist, const NeighborhoodGraph& g);
// Same, but freezing S(W0) with the given weights instead of uniform ones.
FlowContext make_context(const DistanceMatrix& dist, const NeighborhoodGraph& g,
                         const Matrix& omega0);

// Which constant term drives the linear flow. The original variant keeps
// Pi[S(W0)] and thereby averages the data already at t=0; it exists for the
// equivalence tests only and is not used by the learning pipeline.
enum class LinearFlowVariant { modified, original };

Matrix modified_laf_field(const Matrix& v, const Matrix& omega, const FlowContext& ctx);
Matrix linear_flow_field(const Matrix& v, const Matrix& omega, const FlowContext& ctx,
                         LinearFlowVariant variant);

// d_V F(V, Omega)[X] = R_{S(W0)}[A_Omega X]; independent of V.
Matrix dv_f(const Matrix& x, const Matrix& omega, const FlowContext& ctx);
// d_V F(V, Omega)^T[X] = A_Omega^T R_{S(W0)}[X].
Matrix dv_f_adjoint(const Matrix& x, const Matrix& omega, const FlowContext& ctx);
// d_Omega F(V, Omega)^T[X]: rows (i, k) = <(R_{S(W0)}[X])_i, V_{neighbor(i,k)}>,
// projected onto the parameter tangent space. Only the neighborhood slots of
// the underlying m x m product are ever formed.
Matrix domega_f_adjoint(const Matrix& x, const Matrix& v, const FlowContext& ctx);

}  // namespace assignflow
