#include "assignflow/predict.hpp"

#include "assignflow/datagen.hpp"
#include "assignflow/manifold.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace assignflow;

TEST_CASE("letter features are flattened patches with replicate padding") {
    Image img(7, 7);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) img.at(y, x) = y * 7 + x;
    const Matrix f = extract_letter_features(img);
    CHECK(f.cols() == 49);

    // the center pixel's patch reproduces the whole image
    const Index center = 3 * 7 + 3;
    for (int k = 0; k < 49; ++k) CHECK(f(center, k) == doctest::Approx(static_cast<double>(k)));

    // corner pixel: hand-enumerated replicate padding, top-left 7x7 window
    // anchored at (0,0) clamps negative offsets to row/column 0
    const Index corner = 0;
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
            const int yy = std::max(0, dy), xx = std::max(0, dx);
            const int slot = (dy + 3) * 7 + (dx + 3);
            CHECK(f(corner, slot) == doctest::Approx(static_cast<double>(yy * 7 + xx)));
        }

    // constant image gives identical rows
    Image flat(5, 5, 0.42);
    const Matrix fc = extract_letter_features(flat);
    CHECK((fc.rowwise() - fc.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter features annihilate constants and respond to edges") {
    Image flat(9, 9, 0.37);
    const Matrix f0 = extract_filter_features(flat);
    CHECK(f0.cols() == 108);
    CHECK(f0.cwiseAbs().maxCoeff() < 1e-12);

    // vertical step edge: the 0-degree (x-derivative) response dominates
    Image edge(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) edge.at(y, x) = x < 8 ? 0.0 : 1.0;
    const Matrix fe = extract_filter_features(edge);
    const Index pixel = 8 * 16 + 8;  // on the edge
    const int center_slot = 4;       // patch offset (0,0) in the 3x3 window
    double best = -1.0;
    int best_o = -1;
    for (int o = 0; o < kFilterOrientations; ++o) {
        const double r = fe(pixel, center_slot * kFilterOrientations + o);
        if (r > best) {
            best = r;
            best_o = o;
        }
    }
    CHECK(best_o == 0);
}

TEST_CASE("kmeans recovers separated clusters deterministically") {
    Matrix pts(4, 1);
    pts << 0.0, 0.2, 10.0, 10.2;
    const Matrix c = kmeans(pts, 2, 7);
    double lo = std::min(c(0, 0), c(1, 0)), hi = std::max(c(0, 0), c(1, 0));
    CHECK(lo == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(hi == doctest::Approx(10.1).epsilon(1e-12));

    // k = #points returns the points themselves
    const Matrix all = kmeans(pts, 4, 3);
    std::vector<double> sorted = {all(0, 0), all(1, 0), all(2, 0), all(3, 0)};
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[0] == doctest::Approx(0.0));
    CHECK(sorted[3] == doctest::Approx(10.2));

    // deterministic per seed
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    Matrix cloud(50, 3);
    for (Index i = 0; i < cloud.rows(); ++i)
        for (Index j = 0; j < 3; ++j) cloud(i, j) = g(rng);
    const Matrix a = kmeans(cloud, 5, 42);
    const Matrix b = kmeans(cloud, 5, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(kmeans(pts, 5, 0), std::invalid_argument);
}

TEST_CASE("kmeans objective is nonincreasing over Lloyd iterations") {
    // verified indirectly: the final objective never exceeds the seeding one
    std::mt19937_64 rng(123);
    std::normal_distribution<double> g;
    Matrix cloud(80, 2);
    for (Index i = 0; i < cloud.rows(); ++i)
        for (Index j = 0; j < 2; ++j) cloud(i, j) = g(rng);
    const Matrix c = kmeans(cloud, 6, 5);
    auto objective = [&](const Matrix& centroids) {
        double total = 0.0;
        for (Index i = 0; i < cloud.rows(); ++i)
            total += (centroids.rowwise() - cloud.row(i)).rowwise().squaredNorm().minCoeff();
        return total;
    };
    // seeding-only centroids: k rows sampled from the cloud by the same rule
    double seeded_obj = objective(cloud.topRows(6));
    CHECK(objective(c) <= seeded_obj + 1e-9);
}

TEST_CASE("distance_from_prototypes takes the class-wise minimum") {
    PrototypeSet set;
    Matrix c0(2, 1), c1(1, 1);
    c0 << 0.0, 2.0;
    c1 << 5.0;
    set.per_class = {c0, c1};
    Matrix f(1, 1);
    f << 1.0;
    const DistanceMatrix d = distance_from_prototypes(f, set, 1.0);
    CHECK(d.d(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.d(0, 1) == doctest::Approx(4.0).epsilon(1e-12));

    // a feature equal to a prototype has distance zero to its class
    Matrix f2(1, 1);
    f2 << 2.0;
    CHECK(distance_from_prototypes(f2, set, 1.0).d(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("hamming distances and the lifted likelihood") {
    Image img(1, 2);
    img.at(0, 0) = 1.0;  // foreground
    img.at(0, 1) = 0.0;  // background
    const DistanceMatrix d = hamming_distance_matrix(img, 0.5);
    CHECK(d.d(0, 0) == 1.0);
    CHECK(d.d(0, 1) == 0.0);
    CHECK(d.d(1, 0) == 0.0);
    CHECK(d.d(1, 1) == 1.0);

    const Matrix like = likelihood(barycenter_matrix(2, 2), d);
    const double z = 1.0 + std::exp(-2.0);
    CHECK(like(0, 0) == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-12));  // ~0.1192
    CHECK(like(0, 1) == doctest::Approx(1.0 / z).epsilon(1e-12));             // ~0.8808
}

TEST_CASE("geometric mean of weight patches") {
    Vector w1(2), w2(2);
    w1 << 0.8, 0.2;
    w2 << 0.2, 0.8;
    const Vector single = geometric_mean_weights({w1}, {3.0});
    CHECK((single - w1).cwiseAbs().maxCoeff() < 1e-12);

    const Vector twice = geometric_mean_weights({w1, w1}, {1.0, 1.0});
    CHECK((twice - w1).cwiseAbs().maxCoeff() < 1e-12);

    const Vector balanced = geometric_mean_weights({w1, w2}, {1.0, 1.0});
    CHECK(balanced(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(balanced(1) == doctest::Approx(0.5).epsilon(1e-12));

    // permutation equivariance
    const Vector swapped = geometric_mean_weights({w2, w1}, {1.0, 1.0});
    CHECK((balanced - swapped).cwiseAbs().maxCoeff() < 1e-13);

    CHECK_THROWS_AS(geometric_mean_weights({}, {}), std::invalid_argument);
}

TEST_CASE("coreset construction and prediction round trip") {
    // one training pixel per class, k = 1: the coreset holds those pairs
    TrainingOutput out;
    out.keys.resize(2, 3);
    out.keys << 0.0, 0.0, 1.0, 1.0, 1.0, 0.0;
    out.weights.resize(2, 2);
    out.weights << 0.7, 0.3, 0.4, 0.6;
    out.pixel_class = {0, 1};
    const Coreset coreset = build_coreset({out}, 2, 1, 1, 11);
    REQUIRE(coreset.keys.rows() == 2);
    CHECK(is_assignment_matrix(coreset.weights, 1e-11));

    const Matrix predicted = predict_weights(out.keys, coreset);
    CHECK((predicted - out.weights).cwiseAbs().maxCoeff() < 1e-12);

    // identical weight patches within a cluster are reproduced exactly
    TrainingOutput big;
    big.keys.resize(4, 2);
    big.keys << 0.0, 0.0, 0.1, 0.0, 5.0, 5.0, 5.1, 5.0;
    big.weights.resize(4, 2);
    big.weights << 0.9, 0.1, 0.9, 0.1, 0.2, 0.8, 0.2, 0.8;
    big.pixel_class = {0, 0, 0, 0};
    const Coreset c2 = build_coreset({big}, 1, 2, 1, 5);
    for (Index e = 0; e < c2.weights.rows(); ++e) {
        const bool low = std::abs(c2.weights(e, 0) - 0.9) < 1e-10;
        const bool high = std::abs(c2.weights(e, 0) - 0.2) < 1e-10;
        CHECK((low || high));
    }

    CHECK_THROWS_AS(build_coreset({}, 1, 1, 1, 0), std::invalid_argument);
    TrainingOutput missing = out;
    missing.pixel_class = {0, 0};
    CHECK_THROWS_AS(build_coreset({missing}, 2, 1, 1, 0), std::invalid_argument);

    // ties go to the lowest coreset index
    Coreset tied;
    tied.classes = 1;
    tied.key_patch = 1;
    tied.keys = Matrix::Zero(2, 2);
    tied.weights.resize(2, 2);
    tied.weights << 0.6, 0.4, 0.3, 0.7;
    tied.entry_class = {0, 0};
    const Matrix p = predict_weights(Matrix::Zero(1, 2), tied);
    CHECK(p(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("assignment patch keys one-hot encode label windows") {
    // 2x2 label map, patch 3, 2 labels
    const std::vector<int> labels = {0, 1, 1, 0};
    const Matrix keys = assignment_patch_keys(labels, 2, 3, 2, 2);
    CHECK(keys.cols() == 18);
    for (Index i = 0; i < keys.rows(); ++i) {
        for (int slot = 0; slot < 9; ++slot)
            CHECK(keys(i, slot * 2) + keys(i, slot * 2 + 1) == doctest::Approx(1.0));
    }
    // pixel 0, patch offset (0,0) -> replicated corner label 0
    CHECK(keys(0, 0 * 2 + 0) == 1.0);
    // pixel 0, patch offset (1,1) (slot 4) is pixel 0 itself
    CHECK(keys(0, 4 * 2 + 0) == 1.0);
    // pixel 0, offset (1,2) (slot 5) is pixel 1 with label 1
    CHECK(keys(0, 5 * 2 + 1) == 1.0);
}

TEST_CASE("prototype distances are 1-Lipschitz in the feature") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    PrototypeSet set;
    Matrix protos(6, 4);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 4; ++j) protos(i, j) = g(rng);
    set.per_class = {protos.topRows(3), protos.bottomRows(3)};

    for (int trial = 0; trial < 20; ++trial) {
        Matrix f(2, 4);
        for (Index i = 0; i < 2; ++i)
            for (Index j = 0; j < 4; ++j) f(i, j) = g(rng);
        const DistanceMatrix d = distance_from_prototypes(f, set, 1.0);
        const double feature_gap = (f.row(0) - f.row(1)).norm();
        for (Index c = 0; c < 2; ++c)
            CHECK(std::abs(d.d(0, c) - d.d(1, c)) <= feature_gap + 1e-10);
    }
}
