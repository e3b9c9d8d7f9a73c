#pragma once

#include "assignflow/predict.hpp"
#include "assignflow/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace assignflow {

inline constexpr const char* kVersion = "assignflow 0.1.0";

// Little-endian binary containers. Weights: magic "AFW1", u32 rows, u32
// cols, row-major float64 payload. Coresets: magic "AFC1" with class count,
// key-patch size, dimensions, per-entry class indices, then keys and weight
// rows. Prototype sets: magic "AFP1", class count, feature dimension,
// per-class row blocks.
void write_weights(const std::string& path, const Matrix& omega);
Matrix read_weights(const std::string& path);

void write_coreset(const std::string& path, const Coreset& coreset);
Coreset read_coreset(const std::string& path);

void write_prototypes(const std::string& path, const PrototypeSet& prototypes);
PrototypeSet read_prototypes(const std::string& path);

// Plain-text matrix export for inspection.
void write_csv(const std::string& path, const Matrix& m);
void write_history_csv(const std::string& path, const std::vector<double>& values);

// Flat key=value configuration ('#' starts a comment); unknown keys are
// rejected so typos fail loudly.
struct ConfigMap {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
};

ConfigMap read_config(const std::string& path);

// Per-pixel agreement of a predicted labeling with ground truth.
struct LabelingReport {
    double overall = 0.0;
    std::vector<double> per_class;
    std::vector<long> class_pixels;
    long correct = 0;
    long total = 0;
};

LabelingReport compare_labelings(const LabelImage& predicted, const LabelImage& truth,
                                 int n_labels);
void write_report(const std::string& path, const LabelingReport& report);

// Every command drops exactly one manifest.json into its output directory:
// command line, configuration snapshot, seed, input/output paths, wall time
// and the build version.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double seconds = 0.0;
};

void write_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace assignflow
