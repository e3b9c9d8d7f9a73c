#pragma once

#include "assignflow/image.hpp"
#include "assignflow/types.hpp"

#include <cstdint>

namespace assignflow {

// Deterministic synthetic data: binary letter images, random Voronoi scenes
// with three classes, and pattern-formation fixtures. Every generator is a
// pure function of its seed and parameters.

struct Scene {
    Image image;
    LabelImage ground_truth;
    int class_count = 0;
    std::uint64_t seed = 0;
    // Voronoi generator metadata: nearest-site index per pixel (empty for
    // other scene kinds).
    std::vector<int> regions;

    int height() const { return image.height; }
    int width() const { return image.width; }
};

// Binary letter on a size x size canvas (label 1 = foreground); the image
// doubles as its own ground truth. Uppercase glyphs E, F, H, I, L, T come
// from the blocky training font (axis-aligned strokes only); C, O, S, U are
// curvilinear test glyphs. Throws for unsupported glyphs.
Scene gen_letter(char glyph, int size = 16);

// Random Voronoi partition: cell boundaries rasterized as one-pixel lines
// (label 0), cells filled as homogeneous gray (label 1) or high-frequency
// texture (label 2). At least one cell of each fill class.
Scene gen_voronoi_scene(std::uint64_t seed, int height, int width, int cells);

enum class PatternKind { completion, transport };

// Input scene plus the target labeling the flow should reach at time T.
// completion: input strokes are a subset of the target set; transport: the
// input blob is disjoint from the target region. The scene's ground truth
// holds the target labeling.
struct PatternPair {
    Scene input;
    LabelImage target;
};

PatternPair gen_pattern_pair(PatternKind kind, int size = 32);

}  // namespace assignflow
