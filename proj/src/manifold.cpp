#include "assignflow/manifold.hpp"

#include <cmath>

namespace assignflow {

Matrix barycenter_matrix(Index rows, Index cols) {
    return Matrix::Constant(rows, cols, 1.0 / static_cast<double>(cols));
}

Matrix clamp_to_simplex(Matrix w) {
    w = w.cwiseMax(kSimplexFloor);
    for (Index i = 0; i < w.rows(); ++i) w.row(i) /= w.row(i).sum();
    return w;
}

bool is_assignment_matrix(const Matrix& w, double tol) {
    if (w.size() == 0) return false;
    if ((w.array() <= 0.0).any()) return false;
    return ((w.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

bool is_tangent_matrix(const Matrix& v, double tol) {
    if (v.size() == 0) return false;
    for (Index i = 0; i < v.rows(); ++i) {
        const double scale = std::max(1.0, v.row(i).cwiseAbs().maxCoeff());
        if (std::abs(v.row(i).sum()) > tol * scale) return false;
    }
    return true;
}

Matrix project_tangent(const Matrix& z) {
    return z.colwise() - z.rowwise().mean();
}

Matrix replicator(const Matrix& w, const Matrix& z) {
    const Matrix wz = w.cwiseProduct(z);
    return wz - w.cwiseProduct(wz.rowwise().sum().replicate(1, w.cols()));
}

namespace {

// Row-wise w .* e^z normalized, with the row maximum of z subtracted before
// exponentiation.
Matrix stabilized_exp(const Matrix& w, const Matrix& z) {
    Matrix out(w.rows(), w.cols());
    for (Index i = 0; i < w.rows(); ++i) {
        const double shift = z.row(i).maxCoeff();
        out.row(i) = w.row(i).cwiseProduct((z.row(i).array() - shift).exp().matrix());
        out.row(i) /= out.row(i).sum();
    }
    return clamp_to_simplex(std::move(out));
}

}  // namespace

Matrix lifted_exp(const Matrix& w, const Matrix& v) {
    return stabilized_exp(w, v.cwiseQuotient(w));
}

Matrix lifted_exp_inv(const Matrix& w, const Matrix& q) {
    return replicator(w, (q.cwiseQuotient(w)).array().log().matrix());
}

Matrix simplex_exp(const Matrix& w, const Matrix& z) {
    return stabilized_exp(w, z);
}

Matrix simplex_exp_inv(const Matrix& w, const Matrix& q) {
    return project_tangent((q.cwiseQuotient(w)).array().log().matrix());
}

double fisher_rao(const Vector& p, const Vector& u, const Vector& v) {
    return (u.cwiseProduct(v).cwiseQuotient(p)).sum();
}

LabelImage round_assignment(const Matrix& w, double entropy_threshold) {
    LabelImage out;
    out.labels.resize(static_cast<std::size_t>(w.rows()));
    out.integral.resize(static_cast<std::size_t>(w.rows()));
    for (Index i = 0; i < w.rows(); ++i) {
        Index best = 0;
        w.row(i).maxCoeff(&best);  // first maximum wins on ties
        double entropy = 0.0;
        for (Index j = 0; j < w.cols(); ++j) {
            const double p = w(i, j);
            if (p > 0.0) entropy -= p * std::log(p);
        }
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        out.integral[static_cast<std::size_t>(i)] = entropy < entropy_threshold ? 1 : 0;
    }
    return out;
}

}  // namespace assignflow
