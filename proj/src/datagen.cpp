#include "assignflow/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace assignflow {

namespace {

double next_uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

// Box-Muller; avoids the unspecified std::normal_distribution algorithm so
// fixture bytes are stable across standard libraries.
double next_normal(std::mt19937_64& rng) {
    const double u1 = std::max(next_uniform(rng), 1e-300);
    const double u2 = next_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Stateless position hash in [0, 1); used for spatially correlated
// corruption masks.
double hash01(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return (x >> 11) * 0x1.0p-53;
}

constexpr int kGlyphCanvas = 16;

void fill_rect(Image& img, int y0, int x0, int y1, int x1) {
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) img.at(y, x) = 1.0;
}

// Ring sector: pixels whose distance to (cy, cx) lies within the band and
// whose angle lies inside [a0, a1] (radians, wrapped).
void fill_ring(Image& img, double cy, double cx, double r, double thickness, double a0, double a1) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dy = y - cy, dx = x - cx;
            const double d = std::sqrt(dy * dy + dx * dx);
            if (std::abs(d - r) > thickness * 0.5) continue;
            double angle = std::atan2(dy, dx);
            if (angle < 0.0) angle += 2.0 * M_PI;
            const bool inside = a0 <= a1 ? (angle >= a0 && angle <= a1)
                                         : (angle >= a0 || angle <= a1);
            if (inside) img.at(y, x) = 1.0;
        }
    }
}

Image render_glyph(char glyph) {
    Image img(kGlyphCanvas, kGlyphCanvas);
    switch (glyph) {
        // Blocky training font: unions of axis-aligned 2 px strokes.
        case 'E':
            fill_rect(img, 2, 3, 13, 4);
            fill_rect(img, 2, 3, 3, 12);
            fill_rect(img, 7, 3, 8, 10);
            fill_rect(img, 12, 3, 13, 12);
            break;
        case 'F':
            fill_rect(img, 2, 3, 13, 4);
            fill_rect(img, 2, 3, 3, 12);
            fill_rect(img, 7, 3, 8, 10);
            break;
        case 'H':
            fill_rect(img, 2, 3, 13, 4);
            fill_rect(img, 2, 11, 13, 12);
            fill_rect(img, 7, 3, 8, 12);
            break;
        case 'I':
            fill_rect(img, 2, 4, 3, 11);
            fill_rect(img, 12, 4, 13, 11);
            fill_rect(img, 2, 7, 13, 8);
            break;
        case 'L':
            fill_rect(img, 2, 3, 13, 4);
            fill_rect(img, 12, 3, 13, 12);
            break;
        case 'T':
            fill_rect(img, 2, 2, 3, 13);
            fill_rect(img, 2, 7, 13, 8);
            break;
        // Curvilinear test font.
        case 'O':
            fill_ring(img, 7.5, 7.5, 5.0, 2.4, 0.0, 2.0 * M_PI);
            break;
        case 'C':
            fill_ring(img, 7.5, 7.5, 5.0, 2.4, 0.30 * M_PI, 1.70 * M_PI);
            break;
        case 'S':
            fill_ring(img, 4.8, 7.5, 2.9, 2.2, 0.55 * M_PI, 1.85 * M_PI);
            fill_ring(img, 10.6, 7.5, 2.9, 2.2, 1.60 * M_PI, 0.90 * M_PI);
            break;
        case 'U':
            fill_ring(img, 7.0, 7.5, 4.8, 2.4, 0.05 * M_PI, 0.95 * M_PI);
            fill_rect(img, 2, 2, 7, 3);
            fill_rect(img, 2, 12, 7, 13);
            break;
        default:
            throw std::invalid_argument(std::string("unsupported glyph '") + glyph + "'");
    }
    return img;
}

}  // namespace

Scene gen_letter(char glyph, int size) {
    if (size < 4) throw std::invalid_argument("letter size too small");
    const Image canvas = render_glyph(glyph);

    Scene scene;
    scene.image = Image(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int sy = std::min(y * kGlyphCanvas / size, kGlyphCanvas - 1);
            const int sx = std::min(x * kGlyphCanvas / size, kGlyphCanvas - 1);
            scene.image.at(y, x) = canvas.at(sy, sx);
        }

    scene.class_count = 2;
    scene.ground_truth.labels.resize(static_cast<std::size_t>(size) * size);
    scene.ground_truth.integral.assign(scene.ground_truth.labels.size(), 1);
    for (std::size_t i = 0; i < scene.ground_truth.labels.size(); ++i)
        scene.ground_truth.labels[i] = scene.image.pix[i] > 0.5 ? 1 : 0;
    return scene;
}

Scene gen_voronoi_scene(std::uint64_t seed, int height, int width, int cells) {
    if (cells < 2) throw std::invalid_argument("voronoi scene needs at least 2 cells");
    std::mt19937_64 rng(seed);

    // Distinct sites with a minimal separation; perturb and retry when the
    // sampled geometry degenerates.
    std::vector<std::pair<int, int>> sites;
    for (int attempt = 0; attempt < 200 && static_cast<int>(sites.size()) < cells; ++attempt) {
        const int y = static_cast<int>(next_uniform(rng) * height);
        const int x = static_cast<int>(next_uniform(rng) * width);
        bool ok = true;
        for (const auto& s : sites) {
            const int dy = s.first - y, dx = s.second - x;
            if (dy * dy + dx * dx < 9) {
                ok = false;
                break;
            }
        }
        if (ok) sites.emplace_back(y, x);
    }
    if (static_cast<int>(sites.size()) < cells)
        throw std::runtime_error("voronoi site sampling failed; lower the cell count");

    // Nearest site per pixel, ties toward the lower site index.
    std::vector<int> cell(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            long best_d = std::numeric_limits<long>::max();
            int best = 0;
            for (int s = 0; s < cells; ++s) {
                const long dy = sites[static_cast<std::size_t>(s)].first - y;
                const long dx = sites[static_cast<std::size_t>(s)].second - x;
                const long d = dy * dy + dx * dx;
                if (d < best_d) {
                    best_d = d;
                    best = s;
                }
            }
            cell[static_cast<std::size_t>(y) * width + x] = best;
        }

    // Fill class per cell; force both classes to be represented.
    std::vector<int> fill(static_cast<std::size_t>(cells));
    for (auto& f : fill) f = next_uniform(rng) < 0.5 ? 1 : 2;
    if (std::count(fill.begin(), fill.end(), 1) == 0) fill[0] = 1;
    if (std::count(fill.begin(), fill.end(), 2) == 0) fill[fill[0] == 1 && cells > 1 ? 1 : 0] = 2;

    Scene scene;
    scene.seed = seed;
    scene.class_count = 3;
    scene.image = Image(height, width);
    scene.regions = cell;
    scene.ground_truth.labels.resize(cell.size());
    scene.ground_truth.integral.assign(cell.size(), 1);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            const bool boundary =
                (x + 1 < width && cell[i] != cell[i + 1]) ||
                (y + 1 < height && cell[i] != cell[i + static_cast<std::size_t>(width)]);
            // Texture alternates on 2x2 blocks so its frequency survives the
            // sigma-1.1 derivative filters; line pixels sit between the homog
            // gray level and the dark texture phase, and correlated stretches
            // of the line take on the look of the surrounding cell, so the
            // local evidence along lines is noisy and incomplete.
            int label;
            double value;
            const int fill_class = fill[static_cast<std::size_t>(cell[i])];
            const double checker = ((y / 2 + x / 2) % 2 == 0) ? 1.0 : -1.0;
            const double homog_value = 0.55 + 0.04 * next_normal(rng);
            const double texture_value = 0.55 + 0.28 * checker * (0.6 + 0.4 * next_uniform(rng)) +
                                         0.04 * next_normal(rng);
            if (boundary) {
                label = 0;
                const bool gap = hash01(seed * 141u + 17u, static_cast<std::uint64_t>(y / 3),
                                        static_cast<std::uint64_t>(x / 3)) < 0.45;
                if (gap)
                    value = fill_class == 1 ? homog_value : texture_value;
                else
                    value = 0.25 + 0.06 * next_normal(rng);
            } else if (fill_class == 1) {
                label = 1;
                value = homog_value;
            } else {
                label = 2;
                value = texture_value;
            }
            scene.ground_truth.labels[i] = label;
            scene.image.pix[i] = std::clamp(value, 0.0, 1.0);
        }
    }
    return scene;
}

PatternPair gen_pattern_pair(PatternKind kind, int size) {
    if (size < 16) throw std::invalid_argument("pattern size too small");
    PatternPair pair;
    pair.input.image = Image(size, size);
    pair.input.class_count = 2;

    Image target(size, size);
    if (kind == PatternKind::completion) {
        // Target: filled disk; input: a thin cross inside it.
        const double c = (size - 1) / 2.0;
        const double r = 0.30 * size;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (std::hypot(y - c, x - c) <= r) target.at(y, x) = 1.0;
        const int ci = size / 2;
        const int span = static_cast<int>(r) - 1;
        for (int d = -span; d <= span; ++d) {
            pair.input.image.at(ci, ci + d) = 1.0;
            pair.input.image.at(ci + d, ci) = 1.0;
        }
    } else {
        // Target: large block far from the small input blob; disjoint sets.
        const int q = size / 4;
        for (int y = q - 1; y <= q + 1; ++y)
            for (int x = q - 1; x <= q + 1; ++x) pair.input.image.at(y, x) = 1.0;
        const int t = 3 * size / 4;
        for (int y = t - 3; y <= t + 3; ++y)
            for (int x = t - 3; x <= t + 3; ++x) target.at(y, x) = 1.0;
    }

    pair.target.labels.resize(static_cast<std::size_t>(size) * size);
    pair.target.integral.assign(pair.target.labels.size(), 1);
    for (std::size_t i = 0; i < pair.target.labels.size(); ++i)
        pair.target.labels[i] = target.pix[i] > 0.5 ? 1 : 0;
    pair.input.ground_truth = pair.target;
    return pair;
}

}  // namespace assignflow
