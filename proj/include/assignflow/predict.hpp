#pragma once

#include "assignflow/flow.hpp"
#include "assignflow/image.hpp"
#include "assignflow/types.hpp"

#include <cstdint>
#include <vector>

namespace assignflow {

// Feature extraction, prototype machinery, coreset construction from
// training outputs, and nearest-neighbor weight prediction for novel images.

// Per-pixel flattened patch x patch intensity window (replicate padding),
// offsets in row-major order.
Matrix image_patch_keys(const Image& img, int patch);

// The binary-letter pipeline uses raw 7 x 7 patches as features.
Matrix extract_letter_features(const Image& img);

// Oriented filter-bank features: 7 x 7 Gaussian-derivative kernels
// (sigma 1.1), first and second order, tuned to 12 orientations 15 degrees
// apart; absolute responses, per-orientation maximum over the two orders,
// then 3 x 3 patches of the 12 response maps. Layout: offset-major, channel
// within offset; dimension 3*3*12 = 108.
Matrix extract_filter_features(const Image& img);

inline constexpr double kFilterSigma = 1.1;
inline constexpr int kFilterSize = 7;
inline constexpr int kFilterOrientations = 12;

// Lloyd iterations from a k-means++ seeding; runs to the assignment fixpoint
// or 100 rounds. Deterministic for a fixed seed. Throws when k exceeds the
// number of points.
Matrix kmeans(const Matrix& points, int k, std::uint64_t seed);

struct PrototypeSet {
    std::vector<Matrix> per_class;  // class c: prototypes x feature dim
};

// Per-class k-means over the features of pixels carrying that class label.
PrototypeSet build_prototypes(const Matrix& features, const std::vector<int>& pixel_class,
                              int classes, int k_per_class, std::uint64_t seed);

// d(i, c) = min_j |f_i - l_jc|_2 over the class-c prototypes.
DistanceMatrix distance_from_prototypes(const Matrix& features, const PrototypeSet& prototypes,
                                        double rho);

// Two-label distance rows (d_H(pixel, background), d_H(pixel, foreground))
// for a binary image; foreground is intensity > 0.5.
DistanceMatrix hamming_distance_matrix(const Image& binary, double rho);

// Per-pixel argmin label of a distance matrix, ties toward the smaller
// label.
std::vector<int> local_rounding(const DistanceMatrix& dist);

// One-hot patch encoding of a label map: for every pixel the patch x patch
// window of labels (replicate padding), each encoded as n_labels indicator
// values; offset-major layout, dimension patch*patch*n_labels.
Matrix assignment_patch_keys(const std::vector<int>& labels, int n_labels, int patch, int height,
                             int width);

// normalize(exp(sum_k alpha_k log w_k / sum_k alpha_k)); coefficients must
// not all vanish.
Vector geometric_mean_weights(const std::vector<Vector>& patches,
                              const std::vector<double>& coeffs);

// One trained image: per-pixel coreset keys, the learned weights, and the
// ground-truth class of each pixel.
struct TrainingOutput {
    Matrix keys;
    Matrix weights;
    std::vector<int> pixel_class;
};

// Prototype (key patch, weight patch) pairs; keys are cluster centroids and
// each weight patch is the geometric mean of the member weight patches,
// weighted by 1 / (1e-6 + distance to centroid).
struct Coreset {
    int classes = 0;
    int key_patch = 0;
    Matrix keys;     // entries x key dim
    Matrix weights;  // entries x neighborhood size, strictly positive rows
    std::vector<int> entry_class;
};

Coreset build_coreset(const std::vector<TrainingOutput>& outputs, int classes, int k_per_class,
                      int key_patch, std::uint64_t seed);

// Per pixel: nearest coreset key in Euclidean distance (ties toward the
// lowest entry index); that entry's weight patch becomes the pixel's row.
Matrix predict_weights(const Matrix& keys, const Coreset& coreset);

}  // namespace assignflow
