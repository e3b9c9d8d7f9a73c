#pragma once

#include "assignflow/types.hpp"

namespace assignflow {

// Grid graph with square w x w neighborhoods (self-loop included). Border
// pixels use replicate padding so every neighborhood holds exactly w*w
// entries; the slot order is row-major within the window and fixed, so
// weight-matrix columns keep a stable meaning across training, coreset
// construction and prediction.
struct NeighborhoodGraph {
    int height = 0;
    int width = 0;
    int window = 0;
    Eigen::MatrixXi neighbors;  // pixels x patch_size, pixel indices

    Index pixels() const { return neighbors.rows(); }
    int patch_size() const { return static_cast<int>(neighbors.cols()); }
};

// Throws std::invalid_argument for an even or non-positive window.
NeighborhoodGraph build_grid_graph(int height, int width, int window);

// (A_Omega M)_i = sum_k omega_ik M_{neighbor(i,k)}. Applied as a gather
// stencil; the m x m averaging matrix is never materialized.
Matrix average_apply(const Matrix& omega, const Matrix& m, const NeighborhoodGraph& g);

// Transpose stencil of average_apply in the matrix argument:
// result_row(nb) += omega_ik u_i over all slots (i,k) with neighbor nb.
Matrix average_transpose_apply(const Matrix& omega, const Matrix& u, const NeighborhoodGraph& g);

// Adjoint of omega -> A_Omega M restricted to neighborhood slots:
// entry (i,k) = <u_i, v_{neighbor(i,k)}>.
Matrix average_adjoint(const Matrix& u, const Matrix& v, const NeighborhoodGraph& g);

// Row-wise centering on the parameter manifold's tangent space (width is
// the neighborhood size rather than the label count).
Matrix project_param_tangent(const Matrix& m);

// Uniform weights, one row per pixel.
Matrix uniform_weights(const NeighborhoodGraph& g);

}  // namespace assignflow
