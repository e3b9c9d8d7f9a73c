#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace assignflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Entries of points on the assignment/parameter manifold are floored at this
// value (and rows renormalized) to keep iterates away from the simplex
// boundary in floating point.
inline constexpr double kSimplexFloor = 1e-10;

// Per-pixel label assignment after rounding. `integral[i]` is set when the
// row entropy fell below the caller's threshold, i.e. the assignment was
// already close to a vertex of the simplex.
struct LabelImage {
    std::vector<int> labels;
    std::vector<std::uint8_t> integral;

    Index size() const { return static_cast<Index>(labels.size()); }
};

}  // namespace assignflow
