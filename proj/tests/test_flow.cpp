#include "assignflow/flow.hpp"

#include "assignflow/manifold.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace assignflow;

namespace {

Matrix random_assignment(Index m, Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix w(m, n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) w(i, j) = u(rng);
        w.row(i) /= w.row(i).sum();
    }
    return w;
}

Matrix random_weights(const NeighborhoodGraph& g, std::mt19937_64& rng) {
    return random_assignment(g.pixels(), g.patch_size(), rng);
}

Matrix random_tangent(Index m, Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix z(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) z(i, j) = gauss(rng);
    return project_tangent(z);
}

DistanceMatrix random_distances(Index m, Index n, double rho, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    DistanceMatrix dist;
    dist.rho = rho;
    dist.d.resize(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) dist.d(i, j) = u(rng);
    return dist;
}

// Direct form of the similarity map: geodesic averaging based at W_i.
Matrix similarity_direct(const Matrix& w, const Matrix& omega, const DistanceMatrix& dist,
                         const NeighborhoodGraph& g) {
    const Matrix like = likelihood(w, dist);
    Matrix out(w.rows(), w.cols());
    for (Index i = 0; i < w.rows(); ++i) {
        Matrix acc = Matrix::Zero(1, w.cols());
        for (int k = 0; k < g.patch_size(); ++k) {
            const Index nb = g.neighbors(i, k);
            acc += omega(i, k) * lifted_exp_inv(w.row(i), like.row(nb));
        }
        out.row(i) = lifted_exp(w.row(i), acc);
    }
    return out;
}

}  // namespace

TEST_CASE("likelihood lifts distances") {
    std::mt19937_64 rng(1);
    const Matrix w = random_assignment(4, 3, rng);
    DistanceMatrix zero{Matrix::Zero(4, 3), 0.7};
    CHECK((likelihood(w, zero) - w).cwiseAbs().maxCoeff() < 1e-12);

    DistanceMatrix dist{Matrix::Zero(1, 2), 0.7};
    dist.d << 0.0, 0.7 * std::log(2.0);
    const Matrix l = likelihood(barycenter_matrix(1, 2), dist);
    CHECK(l(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(l(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // only d / rho enters
    DistanceMatrix doubled{2.0 * dist.d, 2.0 * dist.rho};
    CHECK((likelihood(barycenter_matrix(1, 2), doubled) - l).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("similarity collapses to the likelihood for trivial neighborhoods") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 1);
    std::mt19937_64 rng(2);
    const Matrix w = random_assignment(4, 3, rng);
    const DistanceMatrix dist = random_distances(4, 3, 0.5, rng);
    const Matrix s = similarity(w, uniform_weights(g), dist, g);
    CHECK((s - likelihood(w, dist)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("similarity of identical rows with locally constant distances") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 3);
    std::mt19937_64 rng(3);
    Matrix w = random_assignment(1, 3, rng).replicate(4, 1);
    DistanceMatrix dist{Matrix::Zero(4, 3), 1.0};
    dist.d.rowwise() = Eigen::RowVector3d(0.3, 1.1, 0.2);
    const Matrix s = similarity(w, random_weights(g, rng), dist, g);
    CHECK((s - likelihood(w, dist)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("similarity agrees with a hand-computed two-pixel geometric mean") {
    // 2 x 1 image, full coupling through a hand-built two-slot graph
    NeighborhoodGraph g;
    g.height = 2;
    g.width = 1;
    g.window = 0;
    g.neighbors.resize(2, 2);
    g.neighbors << 0, 1, 1, 0;  // slot order: self, other
    std::mt19937_64 rng(4);
    const Matrix w = random_assignment(2, 2, rng);
    const DistanceMatrix dist = random_distances(2, 2, 0.8, rng);
    const Matrix omega = Matrix::Constant(2, 2, 0.5);
    const Matrix s = similarity(w, omega, dist, g);

    const Matrix like = likelihood(w, dist);
    for (Index i = 0; i < 2; ++i) {
        // geometric mean of the two likelihood rows, renormalized
        Eigen::RowVector2d gm =
            (like.row(i).array().log() * 0.5 + like.row(1 - i).array().log() * 0.5).exp();
        gm /= gm.sum();
        CHECK((s.row(i) - gm).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("barycentric similarity equals the geodesic form") {
    const NeighborhoodGraph g = build_grid_graph(3, 3, 3);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix w = random_assignment(g.pixels(), 3, rng);
        const Matrix omega = random_weights(g, rng);
        const DistanceMatrix dist = random_distances(g.pixels(), 3, 0.9, rng);
        const Matrix a = similarity(w, omega, dist, g);
        const Matrix b = similarity_direct(w, omega, dist, g);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("assignment flow field is tangent and matches the one-pixel case") {
    const NeighborhoodGraph g1 = build_grid_graph(1, 1, 1);
    std::mt19937_64 rng(6);
    const Matrix w = random_assignment(1, 2, rng);
    const DistanceMatrix dist = random_distances(1, 2, 0.5, rng);
    const Matrix field = assignment_flow_field(w, uniform_weights(g1), dist, g1);
    CHECK((field - replicator(w, likelihood(w, dist))).cwiseAbs().maxCoeff() < 1e-13);

    const NeighborhoodGraph g = build_grid_graph(3, 3, 3);
    const Matrix w9 = random_assignment(9, 3, rng);
    const DistanceMatrix dist9 = random_distances(9, 3, 1.0, rng);
    const Matrix f9 = assignment_flow_field(w9, random_weights(g, rng), dist9, g);
    CHECK(is_tangent_matrix(f9, 1e-12));

    // a row already at the similarity direction yields a small field
    Matrix wfix = w9;
    const Matrix sfix = similarity(wfix, uniform_weights(g), dist9, g);
    const Matrix ffix = replicator(sfix, sfix);
    CHECK(ffix.cwiseAbs().maxCoeff() < 0.3);  // R_p p stays bounded on the simplex
}

TEST_CASE("make_context freezes barycenter quantities") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 1);
    DistanceMatrix zero{Matrix::Zero(4, 2), 0.5};
    const FlowContext ctx0 = make_context(zero, g);
    CHECK((ctx0.l0 - barycenter_matrix(4, 2)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(ctx0.pi_l0.cwiseAbs().maxCoeff() < 1e-13);

    std::mt19937_64 rng(7);
    const DistanceMatrix dist = random_distances(4, 2, 0.5, rng);
    const FlowContext ctx = make_context(dist, g);
    CHECK((ctx.s0 - ctx.l0).cwiseAbs().maxCoeff() < 1e-12);  // window 1
    CHECK(is_assignment_matrix(ctx.s0, 1e-11));
    CHECK(is_assignment_matrix(ctx.l0, 1e-11));
}

TEST_CASE("modified flow field is affine with the data term as offset") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 3);
    std::mt19937_64 rng(8);
    const DistanceMatrix dist = random_distances(4, 2, 1.0, rng);
    const FlowContext ctx = make_context(dist, g);
    const Matrix omega = random_weights(g, rng);

    CHECK((modified_laf_field(Matrix::Zero(4, 2), omega, ctx) - ctx.pi_l0).cwiseAbs().maxCoeff() <
          1e-14);

    const Matrix v1 = random_tangent(4, 2, rng);
    const Matrix v2 = random_tangent(4, 2, rng);
    const Matrix f0 = modified_laf_field(Matrix::Zero(4, 2), omega, ctx);
    const Matrix lhs = modified_laf_field(v1 + v2, omega, ctx) - f0;
    const Matrix rhs = (modified_laf_field(v1, omega, ctx) - f0) + (modified_laf_field(v2, omega, ctx) - f0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    // d_V F equals the affine increment exactly
    CHECK((dv_f(v1, omega, ctx) - (modified_laf_field(v1, omega, ctx) - f0)).cwiseAbs().maxCoeff() <
          1e-14);

    // the original-variant constant term is the projected similarity
    const Matrix orig = linear_flow_field(Matrix::Zero(4, 2), omega, ctx, LinearFlowVariant::original);
    CHECK((orig - project_tangent(ctx.s0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("one-pixel modified flow matches scalar arithmetic") {
    const NeighborhoodGraph g = build_grid_graph(1, 2, 1);
    DistanceMatrix dist{Matrix::Zero(2, 2), 1.0};
    dist.d << 0.0, 1.0, 0.5, 0.0;
    const FlowContext ctx = make_context(dist, g);
    Matrix v(2, 2);
    v << 0.2, -0.2, -0.1, 0.1;
    const Matrix omega = uniform_weights(g);  // single slot, weight 1
    const Matrix f = modified_laf_field(v, omega, ctx);
    for (Index i = 0; i < 2; ++i) {
        const double s = ctx.s0(i, 0), l = ctx.l0(i, 0);
        // R_{s}(v) row for n=2: s(1-s)(v0 - v1) in the first slot
        const double coupling = s * (1.0 - s) * (v(i, 0) - v(i, 1));
        const double expected0 = (l - 0.5) + coupling;
        CHECK(f(i, 0) == doctest::Approx(expected0).epsilon(1e-12));
        CHECK(f(i, 1) == doctest::Approx(-expected0).epsilon(1e-12));
    }
}

TEST_CASE("dv_f matches finite differences") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 3);
    std::mt19937_64 rng(9);
    const DistanceMatrix dist = random_distances(4, 3, 0.7, rng);
    const FlowContext ctx = make_context(dist, g);
    const Matrix omega = random_weights(g, rng);
    const Matrix v = random_tangent(4, 3, rng);
    const Matrix x = random_tangent(4, 3, rng);

    CHECK(dv_f(Matrix::Zero(4, 3), omega, ctx).cwiseAbs().maxCoeff() < 1e-14);

    const double eps = 1e-7;
    const Matrix fd =
        (modified_laf_field(v + eps * x, omega, ctx) - modified_laf_field(v - eps * x, omega, ctx)) /
        (2.0 * eps);
    CHECK((dv_f(x, omega, ctx) - fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("adjoint maps satisfy the duality identities") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 3);
    std::mt19937_64 rng(10);
    const DistanceMatrix dist = random_distances(4, 3, 0.7, rng);
    const FlowContext ctx = make_context(dist, g);

    for (int trial = 0; trial < 25; ++trial) {
        const Matrix omega = random_weights(g, rng);
        const Matrix x = random_tangent(4, 3, rng);
        const Matrix y = random_tangent(4, 3, rng);
        const double lhs = (dv_f(y, omega, ctx).cwiseProduct(x)).sum();
        const double rhs = (y.cwiseProduct(dv_f_adjoint(x, omega, ctx))).sum();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

        const Matrix v = random_tangent(4, 3, rng);
        const Matrix psi = project_param_tangent(random_tangent(4, 9, rng));
        const Matrix dpsi = replicator(ctx.s0, average_apply(psi, v, g));  // d_Omega F [Psi]
        const double lhs2 = (dpsi.cwiseProduct(x)).sum();
        const double rhs2 = (psi.cwiseProduct(domega_f_adjoint(x, v, ctx))).sum();
        CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-12));
    }

    // structural zeros and tangency
    const Matrix x = random_tangent(4, 3, rng);
    CHECK(domega_f_adjoint(x, Matrix::Zero(4, 3), ctx).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(dv_f_adjoint(Matrix::Zero(4, 3), uniform_weights(g), ctx).cwiseAbs().maxCoeff() < 1e-14);
    const Matrix douts = domega_f_adjoint(x, random_tangent(4, 3, rng), ctx);
    CHECK(douts.rowwise().sum().cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("window-1 dv_f_adjoint reduces to the replicator") {
    const NeighborhoodGraph g = build_grid_graph(2, 2, 1);
    std::mt19937_64 rng(12);
    const DistanceMatrix dist = random_distances(4, 3, 0.7, rng);
    const FlowContext ctx = make_context(dist, g);
    const Matrix x = random_tangent(4, 3, rng);
    CHECK((dv_f_adjoint(x, uniform_weights(g), ctx) - replicator(ctx.s0, x)).cwiseAbs().maxCoeff() <
          1e-13);
}
