#include "assignflow/flow.hpp"

#include "assignflow/manifold.hpp"

#include <stdexcept>

namespace assignflow {

Matrix likelihood(const Matrix& w, const DistanceMatrix& dist) {
    if (w.rows() != dist.d.rows() || w.cols() != dist.d.cols())
        throw std::invalid_argument("likelihood: shape mismatch");
    return simplex_exp(w, (-1.0 / dist.rho) * dist.d);
}

Matrix similarity(const Matrix& w, const Matrix& omega, const DistanceMatrix& dist,
                  const NeighborhoodGraph& g) {
    const Matrix bary = barycenter_matrix(w.rows(), w.cols());
    const Matrix z = simplex_exp_inv(bary, w) - (1.0 / dist.rho) * dist.d;
    return simplex_exp(bary, average_apply(omega, z, g));
}

Matrix assignment_flow_field(const Matrix& w, const Matrix& omega, const DistanceMatrix& dist,
                             const NeighborhoodGraph& g) {
    return replicator(w, similarity(w, omega, dist, g));
}

FlowContext make_context(const DistanceMatrix& dist, const NeighborhoodGraph& g) {
    return make_context(dist, g, uniform_weights(g));
}

FlowContext make_context(const DistanceMatrix& dist, const NeighborhoodGraph& g,
                         const Matrix& omega0) {
    FlowContext ctx;
    const Matrix w0 = barycenter_matrix(dist.d.rows(), dist.d.cols());
    ctx.l0 = likelihood(w0, dist);
    ctx.pi_l0 = project_tangent(ctx.l0);
    ctx.s0 = similarity(w0, omega0, dist, g);
    ctx.graph = g;
    return ctx;
}

Matrix modified_laf_field(const Matrix& v, const Matrix& omega, const FlowContext& ctx) {
    return ctx.pi_l0 + replicator(ctx.s0, average_apply(omega, v, ctx.graph));
}

Matrix linear_flow_field(const Matrix& v, const Matrix& omega, const FlowContext& ctx,
                         LinearFlowVariant variant) {
    const Matrix coupling = replicator(ctx.s0, average_apply(omega, v, ctx.graph));
    if (variant == LinearFlowVariant::modified) return ctx.pi_l0 + coupling;
    return project_tangent(ctx.s0) + coupling;
}

Matrix dv_f(const Matrix& x, const Matrix& omega, const FlowContext& ctx) {
    return replicator(ctx.s0, average_apply(omega, x, ctx.graph));
}

Matrix dv_f_adjoint(const Matrix& x, const Matrix& omega, const FlowContext& ctx) {
    return average_transpose_apply(omega, replicator(ctx.s0, x), ctx.graph);
}

Matrix domega_f_adjoint(const Matrix& x, const Matrix& v, const FlowContext& ctx) {
    return project_param_tangent(average_adjoint(replicator(ctx.s0, x), v, ctx.graph));
}

}  // namespace assignflow
