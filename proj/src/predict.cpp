#include "assignflow/predict.hpp"

#include "assignflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace assignflow {

Matrix image_patch_keys(const Image& img, int patch) {
    if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("patch size must be odd and >= 1");
    const int radius = patch / 2;
    Matrix keys(img.pixels(), static_cast<Index>(patch) * patch);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Index i = static_cast<Index>(y) * img.width + x;
            int slot = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, img.height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, img.width - 1);
                    keys(i, slot++) = img.at(yy, xx);
                }
            }
        }
    }
    return keys;
}

Matrix extract_letter_features(const Image& img) { return image_patch_keys(img, 7); }

namespace {

// 2D convolution with replicate padding; kernels are zero-mean so constant
// images produce exactly zero response.
Image convolve(const Image& img, const Matrix& kernel) {
    const int radius = static_cast<int>(kernel.rows()) / 2;
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, img.height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, img.width - 1);
                    acc += kernel(dy + radius, dx + radius) * img.at(yy, xx);
                }
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

Matrix zero_mean(Matrix k) {
    k.array() -= k.mean();
    return k;
}

// Directional Gaussian derivative kernels of first and second order along
// angle theta.
std::pair<Matrix, Matrix> oriented_kernels(double theta, int size, double sigma) {
    const int radius = size / 2;
    const double s2 = sigma * sigma;
    const double ct = std::cos(theta), st = std::sin(theta);
    Matrix first(size, size), second(size, size);
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double gauss = std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
            const double gx = -dx / s2 * gauss;
            const double gy = -dy / s2 * gauss;
            const double gxx = (dx * dx / (s2 * s2) - 1.0 / s2) * gauss;
            const double gyy = (dy * dy / (s2 * s2) - 1.0 / s2) * gauss;
            const double gxy = dx * dy / (s2 * s2) * gauss;
            first(dy + radius, dx + radius) = ct * gx + st * gy;
            second(dy + radius, dx + radius) = ct * ct * gxx + 2.0 * ct * st * gxy + st * st * gyy;
        }
    }
    return {zero_mean(std::move(first)), zero_mean(std::move(second))};
}

}  // namespace

Matrix extract_filter_features(const Image& img) {
    // 12 response maps: |first-order| and |second-order| outputs merged by a
    // per-orientation maximum.
    std::vector<Image> responses;
    responses.reserve(kFilterOrientations);
    for (int o = 0; o < kFilterOrientations; ++o) {
        const double theta = o * (M_PI / kFilterOrientations);
        const auto [k1, k2] = oriented_kernels(theta, kFilterSize, kFilterSigma);
        const Image r1 = convolve(img, k1);
        const Image r2 = convolve(img, k2);
        Image merged(img.height, img.width);
        for (std::size_t p = 0; p < merged.pix.size(); ++p)
            merged.pix[p] = std::max(std::abs(r1.pix[p]), std::abs(r2.pix[p]));
        responses.push_back(std::move(merged));
    }

    // 3 x 3 spatial patches of the response field: offset-major, one block of
    // 12 channels per offset.
    const int patch = 3, radius = 1;
    Matrix features(img.pixels(), static_cast<Index>(patch) * patch * kFilterOrientations);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Index i = static_cast<Index>(y) * img.width + x;
            int col = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, img.height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, img.width - 1);
                    for (int o = 0; o < kFilterOrientations; ++o)
                        features(i, col++) = responses[static_cast<std::size_t>(o)].at(yy, xx);
                }
            }
        }
    }
    return features;
}

namespace {

// Uniform double in [0, 1); hand-rolled so seeded runs do not depend on the
// standard library's distribution implementations.
double next_uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Eigen::VectorXi nearest_assignment(const Matrix& points, const Matrix& centroids) {
    // Squared distances via |x|^2 - 2 x.c + |c|^2; the |x|^2 term is constant
    // per row and dropped.
    const Matrix cross = points * centroids.transpose();
    const Vector c_norm = centroids.rowwise().squaredNorm();
    Eigen::VectorXi assign(points.rows());
    for (Index i = 0; i < points.rows(); ++i) {
        Index best = 0;
        (c_norm.transpose() - 2.0 * cross.row(i)).minCoeff(&best);
        assign(i) = static_cast<int>(best);
    }
    return assign;
}

}  // namespace

Matrix kmeans(const Matrix& points, int k, std::uint64_t seed) {
    const Index m = points.rows();
    if (k < 1 || k > m) throw std::invalid_argument("kmeans: need 1 <= k <= #points");
    std::mt19937_64 rng(seed);

    // k-means++ seeding.
    Matrix centroids(k, points.cols());
    std::vector<char> chosen(static_cast<std::size_t>(m), 0);
    Index first = static_cast<Index>(rng() % static_cast<std::uint64_t>(m));
    centroids.row(0) = points.row(first);
    chosen[static_cast<std::size_t>(first)] = 1;
    Vector dist2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int j = 1; j < k; ++j) {
        const double total = dist2.sum();
        Index pick = -1;
        if (total > 0.0) {
            double target = next_uniform(rng) * total;
            for (Index i = 0; i < m; ++i) {
                target -= dist2(i);
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = m - 1;
        } else {
            // All remaining mass is zero (duplicate points); take the first
            // unchosen index.
            for (Index i = 0; i < m; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            if (pick < 0) pick = 0;
        }
        centroids.row(j) = points.row(pick);
        chosen[static_cast<std::size_t>(pick)] = 1;
        dist2 = dist2.cwiseMin((points.rowwise() - centroids.row(j)).rowwise().squaredNorm());
    }

    // Lloyd iterations.
    Eigen::VectorXi assign = nearest_assignment(points, centroids);
    for (int iter = 0; iter < 100; ++iter) {
        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < m; ++i) {
            sums.row(assign(i)) += points.row(i);
            ++counts[static_cast<std::size_t>(assign(i))];
        }
        for (int j = 0; j < k; ++j)
            if (counts[static_cast<std::size_t>(j)] > 0)
                centroids.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
        Eigen::VectorXi next = nearest_assignment(points, centroids);
        if (next == assign) break;
        assign = std::move(next);
    }
    return centroids;
}

PrototypeSet build_prototypes(const Matrix& features, const std::vector<int>& pixel_class,
                              int classes, int k_per_class, std::uint64_t seed) {
    if (static_cast<Index>(pixel_class.size()) != features.rows())
        throw std::invalid_argument("build_prototypes: class labels do not match features");
    PrototypeSet set;
    for (int c = 0; c < classes; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < features.rows(); ++i)
            if (pixel_class[static_cast<std::size_t>(i)] == c) members.push_back(i);
        if (members.empty()) throw std::invalid_argument("build_prototypes: empty class");
        Matrix pts(static_cast<Index>(members.size()), features.cols());
        for (std::size_t r = 0; r < members.size(); ++r) pts.row(static_cast<Index>(r)) = features.row(members[r]);
        const int k = std::min<int>(k_per_class, static_cast<int>(members.size()));
        set.per_class.push_back(kmeans(pts, k, seed + static_cast<std::uint64_t>(c)));
    }
    return set;
}

DistanceMatrix distance_from_prototypes(const Matrix& features, const PrototypeSet& prototypes,
                                        double rho) {
    DistanceMatrix dist;
    dist.rho = rho;
    dist.d.resize(features.rows(), static_cast<Index>(prototypes.per_class.size()));
    const Vector f_norm = features.rowwise().squaredNorm();
    for (std::size_t c = 0; c < prototypes.per_class.size(); ++c) {
        const Matrix& protos = prototypes.per_class[c];
        const Matrix cross = features * protos.transpose();
        const Vector p_norm = protos.rowwise().squaredNorm();
        for (Index i = 0; i < features.rows(); ++i) {
            const double best =
                (p_norm.transpose() - 2.0 * cross.row(i)).minCoeff() + f_norm(i);
            dist.d(i, static_cast<Index>(c)) = std::sqrt(std::max(0.0, best));
        }
    }
    return dist;
}

DistanceMatrix hamming_distance_matrix(const Image& binary, double rho) {
    DistanceMatrix dist;
    dist.rho = rho;
    dist.d.resize(binary.pixels(), 2);
    for (Index i = 0; i < binary.pixels(); ++i) {
        const double fg = binary.pix[static_cast<std::size_t>(i)] > 0.5 ? 1.0 : 0.0;
        dist.d(i, 0) = fg;        // disagreement with background
        dist.d(i, 1) = 1.0 - fg;  // disagreement with foreground
    }
    return dist;
}

std::vector<int> local_rounding(const DistanceMatrix& dist) {
    std::vector<int> labels(static_cast<std::size_t>(dist.d.rows()));
    for (Index i = 0; i < dist.d.rows(); ++i) {
        Index best = 0;
        dist.d.row(i).minCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

Matrix assignment_patch_keys(const std::vector<int>& labels, int n_labels, int patch, int height,
                             int width) {
    if (static_cast<Index>(labels.size()) != static_cast<Index>(height) * width)
        throw std::invalid_argument("assignment_patch_keys: label count mismatch");
    const int radius = patch / 2;
    Matrix keys = Matrix::Zero(static_cast<Index>(height) * width,
                               static_cast<Index>(patch) * patch * n_labels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Index i = static_cast<Index>(y) * width + x;
            int slot = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, height - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, width - 1);
                    const int label = labels[static_cast<std::size_t>(yy) * width + xx];
                    keys(i, static_cast<Index>(slot) * n_labels + label) = 1.0;
                    ++slot;
                }
            }
        }
    }
    return keys;
}

Vector geometric_mean_weights(const std::vector<Vector>& patches,
                              const std::vector<double>& coeffs) {
    if (patches.empty() || patches.size() != coeffs.size())
        throw std::invalid_argument("geometric_mean_weights: empty or mismatched input");
    const double total = std::accumulate(coeffs.begin(), coeffs.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("geometric_mean_weights: coefficients sum to zero");

    Vector log_mean = Vector::Zero(patches.front().size());
    for (std::size_t i = 0; i < patches.size(); ++i)
        log_mean += (coeffs[i] / total) * patches[i].array().log().matrix();
    const Vector e = (log_mean.array() - log_mean.maxCoeff()).exp();
    Matrix row = (e / e.sum()).transpose();
    return clamp_to_simplex(std::move(row)).transpose();
}

Coreset build_coreset(const std::vector<TrainingOutput>& outputs, int classes, int k_per_class,
                      int key_patch, std::uint64_t seed) {
    if (outputs.empty()) throw std::invalid_argument("build_coreset: no training outputs");
    const Index key_dim = outputs.front().keys.cols();
    const Index weight_dim = outputs.front().weights.cols();

    std::vector<Vector> keys_out;
    std::vector<Vector> weights_out;
    std::vector<int> class_out;

    for (int c = 0; c < classes; ++c) {
        // Collect the class members across all training images.
        std::vector<std::pair<const TrainingOutput*, Index>> members;
        for (const auto& out : outputs)
            for (Index i = 0; i < out.keys.rows(); ++i)
                if (out.pixel_class[static_cast<std::size_t>(i)] == c) members.emplace_back(&out, i);
        if (members.empty()) throw std::invalid_argument("build_coreset: empty class");

        Matrix pts(static_cast<Index>(members.size()), key_dim);
        for (std::size_t r = 0; r < members.size(); ++r)
            pts.row(static_cast<Index>(r)) = members[r].first->keys.row(members[r].second);

        const int k = std::min<int>(k_per_class, static_cast<int>(members.size()));
        const Matrix centroids = kmeans(pts, k, seed + static_cast<std::uint64_t>(c));

        std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < members.size(); ++r) {
            Index best = 0;
            (centroids.rowwise() - pts.row(static_cast<Index>(r))).rowwise().squaredNorm().minCoeff(&best);
            clusters[static_cast<std::size_t>(best)].push_back(r);
        }

        for (int j = 0; j < k; ++j) {
            const auto& cluster = clusters[static_cast<std::size_t>(j)];
            if (cluster.empty()) continue;
            std::vector<Vector> patches;
            std::vector<double> coeffs;
            patches.reserve(cluster.size());
            coeffs.reserve(cluster.size());
            for (std::size_t r : cluster) {
                patches.push_back(members[r].first->weights.row(members[r].second).transpose());
                const double d = (pts.row(static_cast<Index>(r)) - centroids.row(j)).norm();
                coeffs.push_back(1.0 / (1e-6 + d));
            }
            keys_out.push_back(centroids.row(j).transpose());
            weights_out.push_back(geometric_mean_weights(patches, coeffs));
            class_out.push_back(c);
        }
    }

    Coreset coreset;
    coreset.classes = classes;
    coreset.key_patch = key_patch;
    coreset.keys.resize(static_cast<Index>(keys_out.size()), key_dim);
    coreset.weights.resize(static_cast<Index>(weights_out.size()), weight_dim);
    coreset.entry_class = std::move(class_out);
    for (std::size_t r = 0; r < keys_out.size(); ++r) {
        coreset.keys.row(static_cast<Index>(r)) = keys_out[r].transpose();
        coreset.weights.row(static_cast<Index>(r)) = weights_out[r].transpose();
    }
    return coreset;
}

Matrix predict_weights(const Matrix& keys, const Coreset& coreset) {
    if (keys.cols() != coreset.keys.cols())
        throw std::invalid_argument("predict_weights: key-patch dimension mismatch");
    const Eigen::VectorXi nearest = nearest_assignment(keys, coreset.keys);
    Matrix omega(keys.rows(), coreset.weights.cols());
    for (Index i = 0; i < keys.rows(); ++i) omega.row(i) = coreset.weights.row(nearest(i));
    return omega;
}

}  // namespace assignflow
