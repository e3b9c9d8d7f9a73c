#include "assignflow/learn.hpp"

#include "assignflow/datagen.hpp"
#include "assignflow/manifold.hpp"
#include "assignflow/predict.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace assignflow;

namespace {

Matrix one_hot(const std::vector<int>& labels, int n) {
    Matrix w = Matrix::Zero(static_cast<Index>(labels.size()), n);
    for (std::size_t i = 0; i < labels.size(); ++i) w(static_cast<Index>(i), labels[i]) = 1.0;
    return w;
}

Matrix random_tangent(Index m, Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix z(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) z(i, j) = g(rng);
    return project_tangent(z);
}

}  // namespace

TEST_CASE("kl objective closed-form values") {
    Matrix wstar(1, 2);
    wstar << 1.0, 0.0;
    CHECK(kl_objective(Matrix::Zero(1, 2), wstar) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    const Matrix wstar4 = one_hot({0, 2, 3}, 4);
    CHECK(kl_objective(Matrix::Zero(3, 4), wstar4) ==
          doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-14));

    Matrix v(1, 2);
    v << 10.0, 0.0;
    CHECK(kl_objective(v, wstar) == doctest::Approx(std::log(1.0 + std::exp(-10.0))).epsilon(1e-10));
}

TEST_CASE("kl gradient at zero is uniform minus ground truth, exactly") {
    const Matrix wstar = one_hot({0, 1, 2, 0}, 3);
    const Matrix grad = kl_gradient(Matrix::Zero(4, 3), wstar);
    const Matrix expected = Matrix::Constant(4, 3, 1.0 / 3.0) - wstar;
    CHECK((grad - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kl gradient matches finite differences") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix wstar = one_hot({trial % 3, (trial + 1) % 3}, 3);
        const Matrix v = random_tangent(2, 3, rng);
        const Matrix grad = kl_gradient(v, wstar);
        CHECK(grad.rowwise().sum().cwiseAbs().maxCoeff() < 1e-13);

        const Matrix dir = random_tangent(2, 3, rng);
        const double eps = 1e-6;
        const double fd =
            (kl_objective(v + eps * dir, wstar) - kl_objective(v - eps * dir, wstar)) / (2.0 * eps);
        const double analytic = (grad.cwiseProduct(dir)).sum();
        CHECK(analytic == doctest::Approx(fd).epsilon(1e-8));
    }
}

namespace {

struct SmallInstance {
    NeighborhoodGraph graph;
    FlowContext ctx;
    Matrix wstar;
    TrainConfig cfg;
};

SmallInstance make_instance(std::uint64_t seed, int height, int width, int window) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    SmallInstance inst;
    inst.graph = build_grid_graph(height, width, window);
    DistanceMatrix dist;
    dist.rho = 0.7;
    dist.d.resize(inst.graph.pixels(), 2);
    for (Index i = 0; i < dist.d.rows(); ++i) {
        dist.d(i, 0) = u(rng);
        dist.d(i, 1) = u(rng);
    }
    inst.ctx = make_context(dist, inst.graph);
    std::vector<int> labels(static_cast<std::size_t>(inst.graph.pixels()));
    for (auto& l : labels) l = rng() % 2;
    inst.wstar = one_hot(labels, 2);
    inst.cfg.rho = dist.rho;
    inst.cfg.window = window;
    inst.cfg.h = 0.5;
    inst.cfg.t_end = 2.0;
    return inst;
}

}  // namespace

TEST_CASE("phi gradient matches finite differences in random directions") {
    SmallInstance inst = make_instance(101, 3, 3, 3);
    std::mt19937_64 rng(55);

    for (const Integrator integ : {Integrator::euler, Integrator::heun}) {
        inst.cfg.integrator = integ;
        const Matrix omega = uniform_weights(inst.graph);
        const PhiResult res = phi_and_gradient(omega, inst.ctx, inst.wstar, inst.cfg);
        CHECK(res.grad.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);

        for (int trial = 0; trial < 5; ++trial) {
            const Matrix psi = project_param_tangent(random_tangent(omega.rows(), omega.cols(), rng));
            const double eps = 1e-6;
            const double up = phi_value(omega + eps * psi, inst.ctx, inst.wstar, inst.cfg);
            const double down = phi_value(omega - eps * psi, inst.ctx, inst.wstar, inst.cfg);
            const double fd = (up - down) / (2.0 * eps);
            const double analytic = (res.grad.cwiseProduct(psi)).sum();
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("Euler and Heun gradients approach each other as h shrinks") {
    SmallInstance inst = make_instance(202, 3, 3, 3);
    const Matrix omega = uniform_weights(inst.graph);
    auto gap = [&](double h) {
        inst.cfg.h = h;
        inst.cfg.integrator = Integrator::euler;
        const Matrix ge = phi_and_gradient(omega, inst.ctx, inst.wstar, inst.cfg).grad;
        inst.cfg.integrator = Integrator::heun;
        const Matrix gh = phi_and_gradient(omega, inst.ctx, inst.wstar, inst.cfg).grad;
        return (ge - gh).norm();
    };
    const double coarse = gap(0.5);
    const double fine = gap(0.125);
    CHECK(fine < 0.5 * coarse);  // first-order gap
}

TEST_CASE("gradient nearly vanishes when the flow already hits the target") {
    // sharply separated distances drive the flow to a near-integral state by
    // T; rounding its own output and using that as ground truth puts the
    // objective near its minimum, where the gradient must be tiny
    const NeighborhoodGraph g = build_grid_graph(3, 3, 3);
    std::mt19937_64 rng(303);
    DistanceMatrix dist;
    dist.rho = 0.7;
    dist.d = Matrix::Constant(g.pixels(), 2, 4.0);
    std::vector<int> gt(static_cast<std::size_t>(g.pixels()));
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt[i] = static_cast<int>(rng() % 2);
        dist.d(static_cast<Index>(i), gt[i]) = 0.0;
    }
    const FlowContext ctx = make_context(dist, g);
    TrainConfig cfg;
    cfg.rho = dist.rho;
    cfg.window = 3;
    cfg.h = 0.5;
    cfg.t_end = 6.0;

    const Matrix omega = uniform_weights(g);
    const Matrix v_end = integrate_linear_flow(omega, ctx, cfg);
    const Matrix w_end = simplex_exp(barycenter_matrix(v_end.rows(), v_end.cols()), v_end);
    const LabelImage rounded = round_assignment(w_end, 0.1);

    const Matrix aligned = one_hot(rounded.labels, 2);
    const PhiResult res_aligned = phi_and_gradient(omega, ctx, aligned, cfg);

    std::vector<int> flipped(rounded.labels);
    for (auto& l : flipped) l = 1 - l;
    const PhiResult res_flipped = phi_and_gradient(omega, ctx, one_hot(flipped, 2), cfg);

    CHECK(res_aligned.value < 0.01 * res_flipped.value);
    CHECK(res_aligned.grad.norm() < 0.01 * res_flipped.grad.norm());
}

TEST_CASE("riemannian_step moves along the negative Riemannian gradient") {
    Matrix omega(1, 2);
    omega << 0.5, 0.5;
    CHECK((riemannian_step(omega, Matrix::Zero(1, 2), 1.0) - omega).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((riemannian_step(omega, Matrix::Constant(1, 2, 3.7), 1.0) - omega).cwiseAbs().maxCoeff() <
          1e-13);

    Matrix grad(1, 2);
    grad << 1.0, 0.0;
    const Matrix stepped = riemannian_step(omega, grad, 1.0);
    const double z = 0.5 * std::exp(-0.25) + 0.5 * std::exp(0.25);
    CHECK(stepped(0, 0) == doctest::Approx(0.5 * std::exp(-0.25) / z).epsilon(1e-12));
    CHECK(stepped(0, 1) == doctest::Approx(0.5 * std::exp(0.25) / z).epsilon(1e-12));
}

TEST_CASE("training decreases the objective and sharpens the labeling") {
    const Scene scene = gen_letter('L', 8);
    const NeighborhoodGraph g = build_grid_graph(8, 8, 3);
    const DistanceMatrix dist = hamming_distance_matrix(scene.image, 0.5);
    const Matrix wstar = one_hot(scene.ground_truth.labels, 2);

    TrainConfig cfg;
    cfg.rho = 0.5;
    cfg.window = 3;
    cfg.h = 0.5;
    cfg.t_end = 4.0;
    cfg.h_prime = 0.05;
    cfg.max_outer = 8;
    cfg.rel_change_tol = 1e-9;  // keep iterating for the whole budget
    const TrainResult result = train(dist, wstar, g, cfg);

    REQUIRE(result.objective_history.size() >= 2);
    for (std::size_t i = 1; i < result.objective_history.size(); ++i)
        CHECK(result.objective_history[i] < result.objective_history[i - 1]);
    CHECK(is_assignment_matrix(result.omega_star, 1e-11));
    CHECK(static_cast<int>(result.objective_history.size()) == result.iterations + 1);

    // trained weights fit the ground truth at least as well as uniform ones
    const FlowContext ctx = make_context(dist, g);
    const double phi_uniform = phi_value(uniform_weights(g), ctx, wstar, cfg);
    CHECK(result.objective_history.back() < phi_uniform);
}

TEST_CASE("train validates the step count") {
    TrainConfig cfg;
    cfg.h = 0.4;
    cfg.t_end = 1.0;  // not an integral number of steps
    CHECK_THROWS_AS(cfg.forward_steps(), std::invalid_argument);
}
