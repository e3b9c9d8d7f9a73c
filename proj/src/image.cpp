#include "assignflow/image.hpp"

#include "assignflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace assignflow {

namespace {

void skip_pnm_whitespace(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_pnm_int(std::istream& in) {
    skip_pnm_whitespace(in);
    int value = 0;
    if (!(in >> value)) throw IoError("malformed PNM header");
    return value;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    return in;
}

}  // namespace

void write_pgm(const std::string& path, const Image& img) {
    auto out = open_out(path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.pix) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        out.put(static_cast<char>(std::lround(clamped * 255.0)));
    }
}

Image read_pgm(const std::string& path) {
    auto in = open_in(path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError(path + ": not a P5 PGM");
    const int width = read_pnm_int(in);
    const int height = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (maxval <= 0 || maxval > 255) throw IoError(path + ": unsupported maxval");
    in.get();  // single whitespace after header

    Image img(height, width);
    for (auto& v : img.pix) {
        const int c = in.get();
        if (c == EOF) throw IoError(path + ": truncated pixel data");
        v = static_cast<double>(c) / maxval;
    }
    return img;
}

void write_label_pgm(const std::string& path, const LabelImage& labels, int height, int width) {
    auto out = open_out(path);
    out << "P5\n" << width << " " << height << "\n255\n";
    for (int label : labels.labels) out.put(static_cast<char>(label));
}

LabelImage read_label_pgm(const std::string& path, int* height, int* width) {
    auto in = open_in(path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError(path + ": not a P5 PGM");
    const int w = read_pnm_int(in);
    const int h = read_pnm_int(in);
    read_pnm_int(in);  // maxval
    in.get();

    LabelImage out;
    out.labels.resize(static_cast<std::size_t>(h) * w);
    out.integral.assign(out.labels.size(), 1);
    for (auto& label : out.labels) {
        const int c = in.get();
        if (c == EOF) throw IoError(path + ": truncated label data");
        label = c;
    }
    if (height) *height = h;
    if (width) *width = w;
    return out;
}

void write_label_ppm(const std::string& path, const LabelImage& labels, int height, int width,
                     int n_labels) {
    static const unsigned char kThreeClass[3][3] = {{220, 40, 40}, {40, 180, 40}, {40, 80, 220}};
    auto out = open_out(path);
    out << "P6\n" << width << " " << height << "\n255\n";
    for (int label : labels.labels) {
        unsigned char rgb[3];
        if (n_labels == 2) {
            const unsigned char v = label == 0 ? 255 : 0;
            rgb[0] = rgb[1] = rgb[2] = v;
        } else {
            const int idx = std::clamp(label, 0, 2);
            rgb[0] = kThreeClass[idx][0];
            rgb[1] = kThreeClass[idx][1];
            rgb[2] = kThreeClass[idx][2];
        }
        out.write(reinterpret_cast<const char*>(rgb), 3);
    }
}

}  // namespace assignflow
