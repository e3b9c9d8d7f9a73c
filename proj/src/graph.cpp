#include "assignflow/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace assignflow {

NeighborhoodGraph build_grid_graph(int height, int width, int window) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("window must be odd and >= 1");

    NeighborhoodGraph g;
    g.height = height;
    g.width = width;
    g.window = window;
    const int radius = window / 2;
    const int n = window * window;
    g.neighbors.resize(static_cast<Index>(height) * width, n);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Index i = static_cast<Index>(y) * width + x;
            int slot = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, width - 1);
                    g.neighbors(i, slot++) = yy * width + xx;
                }
            }
        }
    }
    return g;
}

namespace {

void check_shapes(const Matrix& omega, const Matrix& m, const NeighborhoodGraph& g) {
    if (omega.rows() != g.pixels() || omega.cols() != g.patch_size() || m.rows() != g.pixels())
        throw std::invalid_argument("shape mismatch against neighborhood graph");
}

}  // namespace

// The stencil loops below run slot-outer / column-inner so weight and
// neighbor columns stream sequentially; only the gathered rows jump.

Matrix average_apply(const Matrix& omega, const Matrix& m, const NeighborhoodGraph& g) {
    check_shapes(omega, m, g);
    const Index pixels = g.pixels();
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (int k = 0; k < g.patch_size(); ++k) {
        const double* w = omega.col(k).data();
        const int* nb = g.neighbors.col(k).data();
        for (Index j = 0; j < m.cols(); ++j) {
            const double* src = m.col(j).data();
            double* dst = out.col(j).data();
            for (Index i = 0; i < pixels; ++i) dst[i] += w[i] * src[nb[i]];
        }
    }
    return out;
}

Matrix average_transpose_apply(const Matrix& omega, const Matrix& u, const NeighborhoodGraph& g) {
    check_shapes(omega, u, g);
    const Index pixels = g.pixels();
    Matrix out = Matrix::Zero(u.rows(), u.cols());
    for (int k = 0; k < g.patch_size(); ++k) {
        const double* w = omega.col(k).data();
        const int* nb = g.neighbors.col(k).data();
        for (Index j = 0; j < u.cols(); ++j) {
            const double* src = u.col(j).data();
            double* dst = out.col(j).data();
            for (Index i = 0; i < pixels; ++i) dst[nb[i]] += w[i] * src[i];
        }
    }
    return out;
}

Matrix average_adjoint(const Matrix& u, const Matrix& v, const NeighborhoodGraph& g) {
    if (u.rows() != g.pixels() || v.rows() != g.pixels() || u.cols() != v.cols())
        throw std::invalid_argument("shape mismatch against neighborhood graph");
    const Index pixels = g.pixels();
    Matrix out = Matrix::Zero(g.pixels(), g.patch_size());
    for (int k = 0; k < g.patch_size(); ++k) {
        const int* nb = g.neighbors.col(k).data();
        double* dst = out.col(k).data();
        for (Index j = 0; j < u.cols(); ++j) {
            const double* ucol = u.col(j).data();
            const double* vcol = v.col(j).data();
            for (Index i = 0; i < pixels; ++i) dst[i] += ucol[i] * vcol[nb[i]];
        }
    }
    return out;
}

Matrix project_param_tangent(const Matrix& m) {
    return m.colwise() - m.rowwise().mean();
}

Matrix uniform_weights(const NeighborhoodGraph& g) {
    return Matrix::Constant(g.pixels(), g.patch_size(), 1.0 / g.patch_size());
}

}  // namespace assignflow
