#pragma once

#include "assignflow/types.hpp"

namespace assignflow {

// Primitives of the open probability simplex and the row-wise product
// manifold of assignment matrices. All maps act row by row on m x n
// matrices: rows of an assignment matrix are strictly positive and sum to
// one, rows of a tangent matrix sum to zero.

// Uniform assignment (every row 1/n).
Matrix barycenter_matrix(Index rows, Index cols);

// Floors entries at kSimplexFloor and renormalizes rows to unit sum.
Matrix clamp_to_simplex(Matrix w);

bool is_assignment_matrix(const Matrix& w, double tol = 1e-12);
bool is_tangent_matrix(const Matrix& v, double tol = 1e-12);

// Row-wise orthogonal projection onto the tangent space (subtracts the row
// mean; kernel is the span of the all-ones vector).
Matrix project_tangent(const Matrix& z);

// Row-wise replicator map: row_i = w_i .* z_i - w_i <w_i, z_i>.
Matrix replicator(const Matrix& w, const Matrix& z);

// Geodesic exponential map of the e-connection and its inverse:
//   lifted_exp(w, v)_i     = w_i e^{v_i/w_i} / <w_i, e^{v_i/w_i}>
//   lifted_exp_inv(w, q)_i = R_{w_i} log(q_i / w_i)
Matrix lifted_exp(const Matrix& w, const Matrix& v);
Matrix lifted_exp_inv(const Matrix& w, const Matrix& q);

// Composition of the exponential map with the replicator, defined on all of
// R^n and invariant under constant row shifts:
//   simplex_exp(w, z)_i     = w_i e^{z_i} / <w_i, e^{z_i}>
//   simplex_exp_inv(w, q)_i = project_tangent(log(q_i / w_i))
Matrix simplex_exp(const Matrix& w, const Matrix& z);
Matrix simplex_exp_inv(const Matrix& w, const Matrix& q);

// Fisher-Rao inner product at p of two tangent vectors.
double fisher_rao(const Vector& p, const Vector& u, const Vector& v);

// Argmax labeling with deterministic tie-break toward the smallest label
// index; a pixel is flagged integral when its row entropy (nats) is below
// the threshold.
LabelImage round_assignment(const Matrix& w, double entropy_threshold = 0.1);

}  // namespace assignflow
