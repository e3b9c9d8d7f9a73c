// Command-line front end: generate -> train -> coreset -> predict -> label ->
// evolve -> eval, with stable file formats. Exit codes: 0 ok, 2 bad
// arguments, 3 I/O failure, 4 numerical failure.

#include "assignflow/datagen.hpp"
#include "assignflow/errors.hpp"
#include "assignflow/image.hpp"
#include "assignflow/integrate.hpp"
#include "assignflow/io.hpp"
#include "assignflow/learn.hpp"
#include "assignflow/manifold.hpp"
#include "assignflow/predict.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace assignflow;

namespace {

bool log_enabled() {
    static const bool enabled = [] {
        const char* env = std::getenv("ASSIGNFLOW_LOG");
        return env != nullptr && std::string(env) != "" && std::string(env) != "0";
    }();
    return enabled;
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[assignflow] " << msg << "\n";
}

std::string zero_pad(int value) {
    std::ostringstream out;
    out.width(3);
    out.fill('0');
    out << value;
    return out.str();
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Options shared by every command that integrates the flow.
struct FlowOptions {
    std::string config_path;
    TrainConfig cfg;
    std::string integrator = "euler";
    std::string features = "auto";  // hamming | filterbank | auto
    std::string prototypes_path;

    void register_flags(CLI::App* cmd) {
        cmd->set_help_flag("--help", "print usage");
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--rho", cfg.rho, "distance scale");
        cmd->add_option("--window", cfg.window, "neighborhood window (odd)");
        cmd->add_option("--h", cfg.h, "forward step size");
        cmd->add_option("--t-end", cfg.t_end, "time horizon T");
        cmd->add_option("--h-prime", cfg.h_prime, "initial Riemannian step");
        cmd->add_option("--max-outer", cfg.max_outer, "outer iteration cap");
        cmd->add_option("--tol", cfg.rel_change_tol, "relative-change stopping threshold");
        cmd->add_option("--integrator", integrator, "euler | heun")
            ->check(CLI::IsMember({"euler", "heun"}));
        cmd->add_option("--features", features, "hamming | filterbank | auto")
            ->check(CLI::IsMember({"hamming", "filterbank", "auto"}));
        cmd->add_option("--prototypes", prototypes_path, "prototype file for filterbank distances");
    }

    // File values first, then explicit command-line flags override them.
    void finalize(const CLI::App* cmd) {
        if (!config_path.empty()) {
            const ConfigMap file = read_config(config_path);
            if (cmd->count("--rho") == 0) cfg.rho = file.get_double("rho", cfg.rho);
            if (cmd->count("--window") == 0) cfg.window = file.get_int("window", cfg.window);
            if (cmd->count("--h") == 0) cfg.h = file.get_double("h", cfg.h);
            if (cmd->count("--t-end") == 0) cfg.t_end = file.get_double("t_end", cfg.t_end);
            if (cmd->count("--h-prime") == 0) cfg.h_prime = file.get_double("h_prime", cfg.h_prime);
            if (cmd->count("--max-outer") == 0) cfg.max_outer = file.get_int("max_outer", cfg.max_outer);
            if (cmd->count("--tol") == 0)
                cfg.rel_change_tol = file.get_double("rel_change_tol", cfg.rel_change_tol);
            if (cmd->count("--integrator") == 0)
                integrator = file.get_string("integrator", integrator);
            cfg.backtracking.factor = file.get_double("backtrack_factor", cfg.backtracking.factor);
            cfg.backtracking.max_halvings =
                file.get_int("backtrack_max_halvings", cfg.backtracking.max_halvings);
            cfg.entropy_threshold = file.get_double("entropy_threshold", cfg.entropy_threshold);
        }
        cfg.integrator = integrator == "heun" ? Integrator::heun : Integrator::euler;
        if (cfg.window < 1 || cfg.window % 2 == 0)
            throw CLI::ValidationError("--window must be odd and >= 1");
        if (cfg.rho <= 0.0 || cfg.h <= 0.0 || cfg.t_end <= 0.0 || cfg.h_prime <= 0.0)
            throw CLI::ValidationError("rho, h, t-end and h-prime must be positive");
    }

    std::map<std::string, std::string> snapshot() const {
        std::map<std::string, std::string> snap;
        snap["rho"] = std::to_string(cfg.rho);
        snap["window"] = std::to_string(cfg.window);
        snap["h"] = std::to_string(cfg.h);
        snap["t_end"] = std::to_string(cfg.t_end);
        snap["h_prime"] = std::to_string(cfg.h_prime);
        snap["max_outer"] = std::to_string(cfg.max_outer);
        snap["rel_change_tol"] = std::to_string(cfg.rel_change_tol);
        snap["integrator"] = integrator;
        snap["features"] = features;
        return snap;
    }
};

struct LoadedScene {
    std::string stem;
    Image image;
    LabelImage gt;
    bool has_gt = false;
    int classes = 2;
};

std::vector<LoadedScene> load_scene_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("scene_", 0) == 0 && name.size() >= 4 &&
            name.substr(name.size() - 4) == ".pgm" && name.find("_gt") == std::string::npos)
            stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw IoError(dir + ": no scene_*.pgm files");

    std::vector<LoadedScene> scenes;
    for (const std::string& stem : stems) {
        LoadedScene scene;
        scene.stem = stem;
        scene.image = read_pgm(dir + "/" + stem + ".pgm");
        const std::string gt_path = dir + "/" + stem + "_gt.pgm";
        if (fs::exists(gt_path)) {
            scene.gt = read_label_pgm(gt_path);
            scene.has_gt = true;
            int max_label = 0;
            for (int l : scene.gt.labels) max_label = std::max(max_label, l);
            scene.classes = max_label + 1;
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

std::string feature_mode(const FlowOptions& opt, int classes) {
    if (opt.features != "auto") return opt.features;
    return classes <= 2 ? "hamming" : "filterbank";
}

DistanceMatrix scene_distances(const LoadedScene& scene, const FlowOptions& opt,
                               const PrototypeSet* prototypes) {
    const std::string mode = feature_mode(opt, scene.classes);
    if (mode == "hamming") return hamming_distance_matrix(scene.image, opt.cfg.rho);
    if (prototypes == nullptr) throw CLI::ValidationError("--prototypes required for filterbank features");
    return distance_from_prototypes(extract_filter_features(scene.image), *prototypes, opt.cfg.rho);
}

Matrix one_hot(const std::vector<int>& labels, int n) {
    Matrix w = Matrix::Zero(static_cast<Index>(labels.size()), n);
    for (std::size_t i = 0; i < labels.size(); ++i) w(static_cast<Index>(i), labels[i]) = 1.0;
    return w;
}

// Per-pixel KL divergence of the learned weight patch to the uniform patch,
// scaled by its log N maximum into a gray image.
Image adaptivity_map(const Matrix& omega, int height, int width) {
    Image img(height, width);
    const double n = static_cast<double>(omega.cols());
    for (Index i = 0; i < omega.rows(); ++i) {
        double kl = 0.0;
        for (Index k = 0; k < omega.cols(); ++k) kl += omega(i, k) * std::log(omega(i, k) * n);
        img.pix[static_cast<std::size_t>(i)] = std::clamp(kl / std::log(n), 0.0, 1.0);
    }
    return img;
}

LabelImage label_with_weights(const Matrix& omega, const DistanceMatrix& dist,
                              const NeighborhoodGraph& g, const TrainConfig& cfg) {
    const FlowContext ctx = make_context(dist, g);
    const Matrix v_end = integrate_linear_flow(omega, ctx, cfg);
    const Matrix w_end = simplex_exp(barycenter_matrix(v_end.rows(), v_end.cols()), v_end);
    return round_assignment(w_end, cfg.entropy_threshold);
}

// ---------------------------------------------------------------- generate

int cmd_generate(const std::string& kind, std::uint64_t seed, int count, const std::string& out_dir,
                 const std::string& glyphs, int size, int cells) {
    Timer timer;
    fs::create_directories(out_dir);
    std::vector<std::string> outputs;
    for (int i = 0; i < count; ++i) {
        Scene scene;
        if (kind == "letter") {
            const char glyph = glyphs[static_cast<std::size_t>(i) % glyphs.size()];
            scene = gen_letter(glyph, size);
        } else if (kind == "voronoi") {
            scene = gen_voronoi_scene(seed + static_cast<std::uint64_t>(i), size, size, cells);
        } else {
            const PatternKind pk =
                kind == "completion" ? PatternKind::completion : PatternKind::transport;
            scene = gen_pattern_pair(pk, size).input;
        }
        const std::string stem = out_dir + "/scene_" + zero_pad(i);
        write_pgm(stem + ".pgm", scene.image);
        write_label_pgm(stem + "_gt.pgm", scene.ground_truth, scene.height(), scene.width());
        write_label_ppm(stem + "_gt.ppm", scene.ground_truth, scene.height(), scene.width(),
                        scene.class_count);
        outputs.push_back(stem + ".pgm");
        log_line("generated " + stem + ".pgm");
    }

    RunManifest manifest;
    manifest.command = "generate";
    manifest.seed = seed;
    manifest.config = {{"kind", kind}, {"count", std::to_string(count)},
                       {"size", std::to_string(size)}, {"cells", std::to_string(cells)},
                       {"glyphs", glyphs}};
    manifest.outputs = outputs;
    manifest.seconds = timer.seconds();
    write_manifest(out_dir, manifest);
    return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::string& scene_dir, const std::string& out_dir, FlowOptions& opt,
              int protos_k, std::uint64_t seed, int jobs) {
    Timer timer;
    const std::vector<LoadedScene> scenes = load_scene_dir(scene_dir);
    for (const auto& scene : scenes)
        if (!scene.has_gt) throw IoError(scene_dir + "/" + scene.stem + ": missing ground truth");
    fs::create_directories(out_dir);

    const int classes = scenes.front().classes;
    PrototypeSet prototypes;
    bool have_prototypes = false;
    if (feature_mode(opt, classes) == "filterbank") {
        if (!opt.prototypes_path.empty()) {
            prototypes = read_prototypes(opt.prototypes_path);
        } else {
            log_line("building prototypes from " + std::to_string(scenes.size()) + " scenes");
            std::vector<Matrix> feats;
            std::vector<int> labels;
            Index total = 0;
            for (const auto& scene : scenes) {
                feats.push_back(extract_filter_features(scene.image));
                labels.insert(labels.end(), scene.gt.labels.begin(), scene.gt.labels.end());
                total += feats.back().rows();
            }
            Matrix stacked(total, feats.front().cols());
            Index at = 0;
            for (const Matrix& f : feats) {
                stacked.middleRows(at, f.rows()) = f;
                at += f.rows();
            }
            prototypes = build_prototypes(stacked, labels, classes, protos_k, seed);
        }
        write_prototypes(out_dir + "/prototypes.afp", prototypes);
        have_prototypes = true;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (!failed) {
            const std::size_t idx = next++;
            if (idx >= scenes.size()) return;
            const LoadedScene& scene = scenes[idx];
            try {
                const NeighborhoodGraph g =
                    build_grid_graph(scene.image.height, scene.image.width, opt.cfg.window);
                const DistanceMatrix dist =
                    scene_distances(scene, opt, have_prototypes ? &prototypes : nullptr);
                const Matrix wstar = one_hot(scene.gt.labels, scene.classes);
                const TrainResult result = train(dist, wstar, g, opt.cfg);

                const std::string tag = zero_pad(static_cast<int>(idx));
                write_weights(out_dir + "/omega_" + tag + ".afw", result.omega_star);
                write_history_csv(out_dir + "/history_" + tag + ".csv", result.objective_history);
                write_label_pgm(out_dir + "/labeling_" + tag + ".pgm", result.final_labeling,
                                scene.image.height, scene.image.width);
                write_label_ppm(out_dir + "/labeling_" + tag + ".ppm", result.final_labeling,
                                scene.image.height, scene.image.width, scene.classes);
                write_pgm(out_dir + "/adaptivity_" + tag + ".pgm",
                          adaptivity_map(result.omega_star, scene.image.height, scene.image.width));
                const LabelingReport report =
                    compare_labelings(result.final_labeling, scene.gt, scene.classes);
                write_report(out_dir + "/report_" + tag + ".json", report);
                log_line(scene.stem + ": " + std::to_string(result.iterations) + " iterations, " +
                         "objective " + std::to_string(result.objective_history.back()) +
                         ", accuracy " + std::to_string(report.overall) +
                         (result.stalled ? " (backtracking stalled)" : ""));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failure = scene.stem + ": " + e.what();
                failed = true;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(scenes.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed) throw std::runtime_error(failure);

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = seed;
    manifest.config = opt.snapshot();
    manifest.inputs = {scene_dir};
    for (std::size_t i = 0; i < scenes.size(); ++i)
        manifest.outputs.push_back("omega_" + zero_pad(static_cast<int>(i)) + ".afw");
    manifest.seconds = timer.seconds();
    write_manifest(out_dir, manifest);
    return 0;
}

// ----------------------------------------------------------------- coreset

int cmd_coreset(const std::string& scene_dir, const std::string& train_dir, const std::string& out,
                FlowOptions& opt, std::string keys_mode, int k_per_class, int key_patch,
                std::uint64_t seed) {
    Timer timer;
    const std::vector<LoadedScene> scenes = load_scene_dir(scene_dir);
    const int classes = scenes.front().classes;
    if (keys_mode == "auto") keys_mode = classes <= 2 ? "image" : "assignment";
    if (key_patch <= 0) key_patch = keys_mode == "image" ? 7 : 15;

    PrototypeSet prototypes;
    const PrototypeSet* proto_ptr = nullptr;
    if (keys_mode == "assignment" && feature_mode(opt, classes) == "filterbank") {
        const std::string path = opt.prototypes_path.empty() ? train_dir + "/prototypes.afp"
                                                             : opt.prototypes_path;
        prototypes = read_prototypes(path);
        proto_ptr = &prototypes;
    }

    std::vector<TrainingOutput> outputs;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const LoadedScene& scene = scenes[i];
        if (!scene.has_gt) throw IoError(scene.stem + ": missing ground truth");
        TrainingOutput out_i;
        out_i.weights = read_weights(train_dir + "/omega_" + zero_pad(static_cast<int>(i)) + ".afw");
        if (keys_mode == "image") {
            out_i.keys = image_patch_keys(scene.image, key_patch);
        } else {
            const DistanceMatrix dist = scene_distances(scene, opt, proto_ptr);
            out_i.keys = assignment_patch_keys(local_rounding(dist), classes, key_patch,
                                               scene.image.height, scene.image.width);
        }
        out_i.pixel_class = scene.gt.labels;
        outputs.push_back(std::move(out_i));
    }

    const Coreset coreset = build_coreset(outputs, classes, k_per_class, key_patch, seed);
    write_coreset(out, coreset);
    log_line("coreset with " + std::to_string(coreset.keys.rows()) + " entries -> " + out);

    RunManifest manifest;
    manifest.command = "coreset";
    manifest.seed = seed;
    manifest.config = {{"keys", keys_mode}, {"k_per_class", std::to_string(k_per_class)},
                       {"key_patch", std::to_string(key_patch)}};
    manifest.inputs = {scene_dir, train_dir};
    manifest.outputs = {out};
    manifest.seconds = timer.seconds();
    const fs::path parent = fs::path(out).parent_path();
    write_manifest(parent.empty() ? "." : parent.string(), manifest);
    return 0;
}

// Key matrix for a novel scene, matching a coreset's key layout.
Matrix novel_keys(const Image& image, const Coreset& coreset, const FlowOptions& opt) {
    const int patch = coreset.key_patch;
    if (coreset.keys.cols() == static_cast<Index>(patch) * patch)
        return image_patch_keys(image, patch);

    // assignment-patch keys: one-hot local label assignments
    LoadedScene scene;
    scene.image = image;
    scene.classes = coreset.classes;
    PrototypeSet prototypes;
    const PrototypeSet* proto_ptr = nullptr;
    if (feature_mode(opt, coreset.classes) == "filterbank") {
        if (opt.prototypes_path.empty())
            throw CLI::ValidationError("--prototypes required for assignment-patch keys");
        prototypes = read_prototypes(opt.prototypes_path);
        proto_ptr = &prototypes;
    }
    const DistanceMatrix dist = scene_distances(scene, opt, proto_ptr);
    return assignment_patch_keys(local_rounding(dist), coreset.classes, patch, image.height,
                                 image.width);
}

int cmd_predict(const std::string& scene_path, const std::string& coreset_path,
                const std::string& out, FlowOptions& opt) {
    Timer timer;
    const Image image = read_pgm(scene_path);
    const Coreset coreset = read_coreset(coreset_path);
    const Matrix keys = novel_keys(image, coreset, opt);
    if (keys.cols() != coreset.keys.cols())
        throw IoError("key-patch size mismatch between coreset and request");
    const Matrix omega = predict_weights(keys, coreset);
    write_weights(out, omega);
    log_line("predicted weights -> " + out);

    RunManifest manifest;
    manifest.command = "predict";
    manifest.inputs = {scene_path, coreset_path};
    manifest.outputs = {out};
    manifest.seconds = timer.seconds();
    const fs::path parent = fs::path(out).parent_path();
    write_manifest(parent.empty() ? "." : parent.string(), manifest);
    return 0;
}

// ------------------------------------------------------------------- label

int cmd_label(const std::string& scene_path, const std::string& weights, const std::string& out_dir,
              const std::string& gt_path, FlowOptions& opt) {
    Timer timer;
    fs::create_directories(out_dir);
    LoadedScene scene;
    scene.image = read_pgm(scene_path);
    if (!gt_path.empty()) {
        scene.gt = read_label_pgm(gt_path);
        scene.has_gt = true;
        int max_label = 0;
        for (int l : scene.gt.labels) max_label = std::max(max_label, l);
        scene.classes = max_label + 1;
    }

    PrototypeSet prototypes;
    const PrototypeSet* proto_ptr = nullptr;
    if (feature_mode(opt, scene.classes) == "filterbank") {
        if (opt.prototypes_path.empty())
            throw CLI::ValidationError("--prototypes required for filterbank features");
        prototypes = read_prototypes(opt.prototypes_path);
        proto_ptr = &prototypes;
        scene.classes = static_cast<int>(prototypes.per_class.size());
    }
    const DistanceMatrix dist = scene_distances(scene, opt, proto_ptr);

    const NeighborhoodGraph g = build_grid_graph(scene.image.height, scene.image.width, opt.cfg.window);
    const Matrix omega = weights == "uniform" ? uniform_weights(g) : read_weights(weights);
    if (omega.rows() != g.pixels() || omega.cols() != g.patch_size())
        throw IoError("weight file does not match the scene dimensions and window");

    const LabelImage labeling = label_with_weights(omega, dist, g, opt.cfg);
    const int classes = static_cast<int>(dist.d.cols());
    write_label_pgm(out_dir + "/labeling.pgm", labeling, scene.image.height, scene.image.width);
    write_label_ppm(out_dir + "/labeling.ppm", labeling, scene.image.height, scene.image.width,
                    classes);
    if (scene.has_gt) {
        const LabelingReport report = compare_labelings(labeling, scene.gt, classes);
        write_report(out_dir + "/report.json", report);
        log_line("accuracy " + std::to_string(report.overall));
    }

    RunManifest manifest;
    manifest.command = "label";
    manifest.config = opt.snapshot();
    manifest.config["weights"] = weights;
    manifest.inputs = {scene_path};
    manifest.outputs = {"labeling.pgm"};
    manifest.seconds = timer.seconds();
    write_manifest(out_dir, manifest);
    return 0;
}

// ------------------------------------------------------------------ evolve

int cmd_evolve(const std::string& scene_path, const std::string& weights, double t_end,
               const std::string& frames_arg, const std::string& flow, const std::string& out_dir,
               const std::string& gt_path, FlowOptions& opt) {
    Timer timer;
    fs::create_directories(out_dir);
    LoadedScene scene;
    scene.image = read_pgm(scene_path);
    if (!gt_path.empty()) {
        scene.gt = read_label_pgm(gt_path);
        scene.has_gt = true;
    }

    const DistanceMatrix dist = hamming_distance_matrix(scene.image, opt.cfg.rho);
    const NeighborhoodGraph g = build_grid_graph(scene.image.height, scene.image.width, opt.cfg.window);
    const Matrix omega = weights == "uniform" ? uniform_weights(g) : read_weights(weights);

    std::vector<double> frame_times;
    std::stringstream ss(frames_arg);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) frame_times.push_back(std::stod(token));
    if (frame_times.empty()) frame_times = {0.0, t_end};

    const int n_steps = static_cast<int>(std::lround(t_end / opt.cfg.h));
    if (n_steps < 1 || std::abs(t_end - n_steps * opt.cfg.h) > 1e-9)
        throw CLI::ValidationError("--t-end must be an integral multiple of h");
    auto frame_step = [&](double t) {
        return std::clamp(static_cast<int>(std::lround(t / opt.cfg.h)), 0, n_steps);
    };

    const int classes = static_cast<int>(dist.d.cols());
    std::vector<LabelImage> frames;
    if (flow == "linear") {
        const FlowContext ctx = make_context(dist, g);
        Matrix v = Matrix::Zero(ctx.pixels(), ctx.labels());
        std::vector<Matrix> at_steps = {v};
        for (int n = 0; n < n_steps; ++n) {
            if (opt.cfg.integrator == Integrator::euler) {
                v += opt.cfg.h * modified_laf_field(v, omega, ctx);
            } else {
                const Matrix k1 = modified_laf_field(v, omega, ctx);
                const Matrix k2 = modified_laf_field(v + opt.cfg.h * k1, omega, ctx);
                v += 0.5 * opt.cfg.h * (k1 + k2);
            }
            at_steps.push_back(v);
        }
        for (double t : frame_times) {
            const Matrix& vt = at_steps[static_cast<std::size_t>(frame_step(t))];
            const Matrix wt = simplex_exp(barycenter_matrix(vt.rows(), vt.cols()), vt);
            frames.push_back(round_assignment(wt, opt.cfg.entropy_threshold));
        }
    } else {
        const auto field = [&](const Matrix& w, double) {
            return assignment_flow_field(w, omega, dist, g);
        };
        const auto traj = geometric_euler(field, barycenter_matrix(g.pixels(), classes),
                                          TimeGrid::uniform(0.0, t_end, n_steps));
        for (double t : frame_times)
            frames.push_back(
                round_assignment(traj[static_cast<std::size_t>(frame_step(t))], opt.cfg.entropy_threshold));
    }

    nlohmann::json frame_report = nlohmann::json::array();
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::ostringstream name;
        name << "frame_t" << frame_times[f];
        write_label_pgm(out_dir + "/" + name.str() + ".pgm", frames[f], scene.image.height,
                        scene.image.width);
        write_label_ppm(out_dir + "/" + name.str() + ".ppm", frames[f], scene.image.height,
                        scene.image.width, classes);
        nlohmann::json entry;
        entry["t"] = frame_times[f];
        if (scene.has_gt)
            entry["accuracy_vs_target"] = compare_labelings(frames[f], scene.gt, classes).overall;
        frame_report.push_back(entry);
    }
    std::ofstream(out_dir + "/frames.json") << frame_report.dump(2) << "\n";

    RunManifest manifest;
    manifest.command = "evolve";
    manifest.config = opt.snapshot();
    manifest.config["flow"] = flow;
    manifest.config["t_end"] = std::to_string(t_end);
    manifest.inputs = {scene_path};
    manifest.outputs = {"frames.json"};
    manifest.seconds = timer.seconds();
    write_manifest(out_dir, manifest);
    return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out) {
    const LabelImage pred = read_label_pgm(pred_path);
    const LabelImage gt = read_label_pgm(gt_path);
    int classes = 0;
    for (int l : gt.labels) classes = std::max(classes, l + 1);
    const LabelingReport report = compare_labelings(pred, gt, classes);
    if (!out.empty()) write_report(out, report);
    std::cout << "overall " << report.overall << " (" << report.correct << "/" << report.total
              << ")\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c)
        std::cout << "class " << c << " " << report.per_class[c] << " of "
                  << report.class_pixels[c] << " px\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive-regularization assignment flow toolkit"};
    app.require_subcommand(1);
    // keep the short -h free for the step-size flag
    app.set_help_flag("--help", "print usage");

    // generate
    std::string gen_kind = "voronoi", gen_out = "out", gen_glyphs = "EFHILT";
    std::uint64_t gen_seed = 0;
    int gen_count = 1, gen_size = 0, gen_cells = 12;
    CLI::App* generate = app.add_subcommand("generate", "write synthetic scenes with ground truth");
    generate->add_option("--kind", gen_kind, "letter | voronoi | completion | transport")
        ->check(CLI::IsMember({"letter", "voronoi", "completion", "transport"}));
    generate->add_option("--seed", gen_seed, "base seed");
    generate->add_option("--count", gen_count, "number of scenes");
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_option("--glyphs", gen_glyphs, "glyph cycle for letter scenes");
    generate->add_option("--size", gen_size, "image size (default 16 letters, 64 voronoi, 32 patterns)");
    generate->add_option("--cells", gen_cells, "voronoi cell count");

    // train
    std::string train_scenes, train_out = "train_out";
    FlowOptions train_opt;
    int train_protos_k = 200, train_jobs = 1;
    std::uint64_t train_seed = 0;
    CLI::App* train_cmd = app.add_subcommand("train", "learn weights per scene from ground truth");
    train_cmd->add_option("--scenes", train_scenes, "scene directory")->required();
    train_cmd->add_option("--out", train_out, "output directory")->required();
    train_cmd->add_option("--protos-k", train_protos_k, "prototypes per class");
    train_cmd->add_option("--seed", train_seed, "seed for prototype clustering");
    train_cmd->add_option("--jobs", train_jobs, "parallel scenes");
    train_opt.register_flags(train_cmd);

    // coreset
    std::string core_scenes, core_train, core_out = "coreset.afc", core_keys = "auto";
    FlowOptions core_opt;
    int core_k = 0, core_patch = 0;
    std::uint64_t core_seed = 0;
    CLI::App* coreset_cmd = app.add_subcommand("coreset", "summarize training outputs as prototypes");
    coreset_cmd->add_option("--scenes", core_scenes, "scene directory")->required();
    coreset_cmd->add_option("--train-out", core_train, "directory with omega_*.afw")->required();
    coreset_cmd->add_option("--out", core_out, "coreset file");
    coreset_cmd->add_option("--keys", core_keys, "image | assignment | auto")
        ->check(CLI::IsMember({"image", "assignment", "auto"}));
    coreset_cmd->add_option("--k", core_k, "clusters per class (default 156 image / 225 assignment)");
    coreset_cmd->add_option("--key-patch", core_patch, "key patch size (default 7 image / 15 assignment)");
    coreset_cmd->add_option("--seed", core_seed, "clustering seed");
    core_opt.register_flags(coreset_cmd);

    // predict
    std::string pred_scene, pred_coreset, pred_out = "omega_pred.afw";
    FlowOptions pred_opt;
    CLI::App* predict_cmd = app.add_subcommand("predict", "predict weights for a novel scene");
    predict_cmd->add_option("--scene", pred_scene, "scene image (pgm)")->required();
    predict_cmd->add_option("--coreset", pred_coreset, "coreset file")->required();
    predict_cmd->add_option("--out", pred_out, "output weight file");
    pred_opt.register_flags(predict_cmd);

    // label
    std::string label_scene, label_weights = "uniform", label_out = "label_out", label_gt;
    FlowOptions label_opt;
    CLI::App* label_cmd = app.add_subcommand("label", "integrate the flow and round to labels");
    label_cmd->add_option("--scene", label_scene, "scene image (pgm)")->required();
    label_cmd->add_option("--weights", label_weights, "'uniform' or a weight file");
    label_cmd->add_option("--out", label_out, "output directory");
    label_cmd->add_option("--gt", label_gt, "ground-truth labels for the accuracy report");
    label_opt.register_flags(label_cmd);

    // evolve; the shared --t-end flag doubles as the final integration time
    // and may exceed the training horizon
    std::string ev_scene, ev_weights = "uniform", ev_frames, ev_flow = "linear",
                ev_out = "evolve_out", ev_gt;
    FlowOptions ev_opt;
    CLI::App* evolve_cmd = app.add_subcommand("evolve", "write rounded labelings along the flow");
    evolve_cmd->add_option("--scene", ev_scene, "scene image (pgm)")->required();
    evolve_cmd->add_option("--weights", ev_weights, "'uniform' or a weight file");
    evolve_cmd->add_option("--frames", ev_frames, "comma-separated frame times");
    evolve_cmd->add_option("--flow", ev_flow, "linear | nonlinear")
        ->check(CLI::IsMember({"linear", "nonlinear"}));
    evolve_cmd->add_option("--out", ev_out, "output directory");
    evolve_cmd->add_option("--gt", ev_gt, "target labels for accuracy-per-frame");
    ev_opt.register_flags(evolve_cmd);

    // eval
    std::string eval_pred, eval_gt, eval_out;
    CLI::App* eval_cmd = app.add_subcommand("eval", "compare a labeling against ground truth");
    eval_cmd->add_option("--pred", eval_pred, "predicted labels (pgm)")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth labels (pgm)")->required();
    eval_cmd->add_option("--out", eval_out, "write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*generate) {
            if (gen_size == 0)
                gen_size = gen_kind == "letter" ? 16 : (gen_kind == "voronoi" ? 64 : 32);
            return cmd_generate(gen_kind, gen_seed, gen_count, gen_out, gen_glyphs, gen_size,
                                gen_cells);
        }
        if (*train_cmd) {
            train_opt.finalize(train_cmd);
            return cmd_train(train_scenes, train_out, train_opt, train_protos_k, train_seed,
                             train_jobs);
        }
        if (*coreset_cmd) {
            core_opt.finalize(coreset_cmd);
            if (core_k == 0) core_k = core_keys == "image" ? 156 : 225;
            return cmd_coreset(core_scenes, core_train, core_out, core_opt, core_keys, core_k,
                               core_patch, core_seed);
        }
        if (*predict_cmd) {
            pred_opt.finalize(predict_cmd);
            return cmd_predict(pred_scene, pred_coreset, pred_out, pred_opt);
        }
        if (*label_cmd) {
            label_opt.finalize(label_cmd);
            return cmd_label(label_scene, label_weights, label_out, label_gt, label_opt);
        }
        if (*evolve_cmd) {
            ev_opt.finalize(evolve_cmd);
            return cmd_evolve(ev_scene, ev_weights, ev_opt.cfg.t_end, ev_frames, ev_flow, ev_out,
                              ev_gt, ev_opt);
        }
        if (*eval_cmd) return cmd_eval(eval_pred, eval_gt, eval_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
