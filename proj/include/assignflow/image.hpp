#pragma once

#include "assignflow/types.hpp"

#include <string>
#include <vector>

namespace assignflow {

// Single-channel image with intensities in [0, 1], row-major storage.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pix;

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), pix(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int y, int x) { return pix[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return pix[static_cast<std::size_t>(y) * width + x]; }
    Index pixels() const { return static_cast<Index>(height) * width; }
};

// 8-bit binary PGM (P5). Intensities are clamped to [0, 1] on write and
// mapped back to [0, 1] on read.
void write_pgm(const std::string& path, const Image& img);
Image read_pgm(const std::string& path);

// Label maps are stored as P5 with the raw label index per pixel.
void write_label_pgm(const std::string& path, const LabelImage& labels, int height, int width);
LabelImage read_label_pgm(const std::string& path, int* height = nullptr, int* width = nullptr);

// Color-coded labeling (P6). Labels 0/1/2 map to red/green/blue; two-label
// images use white/black so letter outputs read as print.
void write_label_ppm(const std::string& path, const LabelImage& labels, int height, int width,
                     int n_labels);

}  // namespace assignflow
