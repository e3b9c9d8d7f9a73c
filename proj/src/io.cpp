#include "assignflow/io.hpp"

#include "assignflow/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace assignflow {

namespace {

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

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated binary file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated binary file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

Matrix get_matrix(std::istream& in) {
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = get_f64(in);
    return m;
}

void expect_magic(std::istream& in, const char* magic, const std::string& path) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw IoError(path + ": bad magic, expected " + magic);
}

}  // namespace

void write_weights(const std::string& path, const Matrix& omega) {
    auto out = open_out(path);
    out.write("AFW1", 4);
    put_matrix(out, omega);
}

Matrix read_weights(const std::string& path) {
    auto in = open_in(path);
    expect_magic(in, "AFW1", path);
    return get_matrix(in);
}

void write_coreset(const std::string& path, const Coreset& coreset) {
    auto out = open_out(path);
    out.write("AFC1", 4);
    put_u32(out, static_cast<std::uint32_t>(coreset.classes));
    put_u32(out, static_cast<std::uint32_t>(coreset.key_patch));
    put_u32(out, static_cast<std::uint32_t>(coreset.entry_class.size()));
    for (int c : coreset.entry_class) put_u32(out, static_cast<std::uint32_t>(c));
    put_matrix(out, coreset.keys);
    put_matrix(out, coreset.weights);
}

Coreset read_coreset(const std::string& path) {
    auto in = open_in(path);
    expect_magic(in, "AFC1", path);
    Coreset coreset;
    coreset.classes = static_cast<int>(get_u32(in));
    coreset.key_patch = static_cast<int>(get_u32(in));
    const std::uint32_t entries = get_u32(in);
    coreset.entry_class.resize(entries);
    for (auto& c : coreset.entry_class) c = static_cast<int>(get_u32(in));
    coreset.keys = get_matrix(in);
    coreset.weights = get_matrix(in);
    if (coreset.keys.rows() != static_cast<Index>(entries) ||
        coreset.weights.rows() != static_cast<Index>(entries))
        throw IoError(path + ": inconsistent coreset entry count");
    return coreset;
}

void write_prototypes(const std::string& path, const PrototypeSet& prototypes) {
    auto out = open_out(path);
    out.write("AFP1", 4);
    put_u32(out, static_cast<std::uint32_t>(prototypes.per_class.size()));
    for (const Matrix& m : prototypes.per_class) put_matrix(out, m);
}

PrototypeSet read_prototypes(const std::string& path) {
    auto in = open_in(path);
    expect_magic(in, "AFP1", path);
    PrototypeSet set;
    const std::uint32_t classes = get_u32(in);
    for (std::uint32_t c = 0; c < classes; ++c) set.per_class.push_back(get_matrix(in));
    return set;
}

void write_csv(const std::string& path, const Matrix& m) {
    auto out = open_out(path);
    out << std::setprecision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

void write_history_csv(const std::string& path, const std::vector<double>& values) {
    auto out = open_out(path);
    out << std::setprecision(17) << "iteration,objective\n";
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stod(it->second);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stoi(it->second);
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

ConfigMap read_config(const std::string& path) {
    static const char* kKnown[] = {"rho",         "window",         "h",
                                   "t_end",       "h_prime",        "max_outer",
                                   "rel_change_tol", "integrator",  "backtrack_factor",
                                   "backtrack_max_halvings", "entropy_threshold"};
    auto in = open_in(path);
    ConfigMap cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        bool known = false;
        for (const char* k : kKnown)
            if (key == k) known = true;
        if (!known) throw IoError(path + ": unknown config key '" + key + "'");
        cfg.values[key] = value;
    }
    return cfg;
}

LabelingReport compare_labelings(const LabelImage& predicted, const LabelImage& truth,
                                 int n_labels) {
    if (predicted.labels.size() != truth.labels.size())
        throw std::invalid_argument("compare_labelings: size mismatch");
    LabelingReport report;
    report.total = static_cast<long>(truth.labels.size());
    report.per_class.assign(static_cast<std::size_t>(n_labels), 0.0);
    report.class_pixels.assign(static_cast<std::size_t>(n_labels), 0);
    std::vector<long> class_correct(static_cast<std::size_t>(n_labels), 0);
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        const int t = truth.labels[i];
        ++report.class_pixels[static_cast<std::size_t>(t)];
        if (predicted.labels[i] == t) {
            ++report.correct;
            ++class_correct[static_cast<std::size_t>(t)];
        }
    }
    report.overall = report.total > 0 ? static_cast<double>(report.correct) / report.total : 0.0;
    for (int c = 0; c < n_labels; ++c)
        report.per_class[static_cast<std::size_t>(c)] =
            report.class_pixels[static_cast<std::size_t>(c)] > 0
                ? static_cast<double>(class_correct[static_cast<std::size_t>(c)]) /
                      report.class_pixels[static_cast<std::size_t>(c)]
                : 0.0;
    return report;
}

void write_report(const std::string& path, const LabelingReport& report) {
    nlohmann::json j;
    j["overall"] = report.overall;
    j["per_class"] = report.per_class;
    j["class_pixels"] = report.class_pixels;
    j["correct"] = report.correct;
    j["total"] = report.total;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["seed"] = manifest.seed;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["seconds"] = manifest.seconds;
    j["version"] = kVersion;
    auto out = open_out(dir + "/manifest.json");
    out << j.dump(2) << '\n';
}

}  // namespace assignflow
