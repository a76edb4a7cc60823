// Copyright 2026 The crfseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "crfseg/crfseg.hpp"
#include "json.hpp"

namespace crfseg::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Flags shared by refine, sweep and compare.
struct RefineFlags {
    std::string image;
    std::string labels;
    std::string palette;
    std::string gt;
    double tolerance = kDefaultColorTolerance;
    std::string model = "dense";
    CrfParams params;
    int threads = 0;
};

void add_refine_flags(CLI::App& cmd, RefineFlags& f, bool with_model) {
    cmd.add_option("--image", f.image, "Appearance image (PNG)")->required();
    cmd.add_option("--labels", f.labels, "Initial label map (PNG in palette colors)")->required();
    cmd.add_option("--palette", f.palette, "city_binary, potsdam, or a file of 'name R G B' lines")->required();
    cmd.add_option("--p", f.params.label_confidence, "Confidence of the observed label")->capture_default_str();
    cmd.add_option("--iters", f.params.iterations, "Mean-field iterations")->capture_default_str();
    if (with_model) {
        cmd.add_option("--model", f.model, "dense or grid")->check(CLI::IsMember({"dense", "grid"}))->capture_default_str();
    }
    cmd.add_option("--theta-alpha", f.params.theta_alpha, "Spatial width of the appearance kernel (pixels)")
        ->capture_default_str();
    cmd.add_option("--theta-beta", f.params.theta_beta, "Intensity width of the appearance kernel")->capture_default_str();
    cmd.add_option("--theta-gamma", f.params.theta_gamma, "Width of the smoothness kernel (pixels)")->capture_default_str();
    cmd.add_option("--w-app", f.params.w_appearance, "Appearance kernel weight")->capture_default_str();
    cmd.add_option("--w-sm", f.params.w_smoothness, "Smoothness kernel weight")->capture_default_str();
    cmd.add_option("--w-grid", f.params.w_grid, "Grid Potts weight")->capture_default_str();
    cmd.add_option("--damping", f.params.damping, "Q <- d * update + (1 - d) * Q, d in (0, 1]")->capture_default_str();
    cmd.add_flag("--early-exit", f.params.early_exit, "Stop once max |dQ| < 1e-5");
    cmd.add_option("--tolerance", f.tolerance, "RGB distance for snapping label colors")->capture_default_str();
    cmd.add_option("--threads", f.threads, "Worker threads (0 = all cores; 1 = bitwise reproducible)")
        ->capture_default_str();
}

struct Inputs {
    ClassPalette palette;
    ImageTensor image;
    LabelMap labels;
    std::optional<LabelMap> gt;
};

Inputs load_inputs(const RefineFlags& f) {
    ClassPalette palette = load_palette(f.palette);
    ImageTensor image = load_image(f.image);
    LabelMap labels = load_labels(f.labels, palette, f.tolerance);
    if (labels.height() != image.height() || labels.width() != image.width()) {
        throw ShapeError("labels are " + std::to_string(labels.height()) + "x" + std::to_string(labels.width()) +
                         " but the image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()));
    }
    std::optional<LabelMap> gt;
    if (!f.gt.empty()) {
        gt = load_labels(f.gt, palette, f.tolerance);
        if (gt->height() != image.height() || gt->width() != image.width()) {
            throw ShapeError("ground truth size differs from the image");
        }
    }
    return {std::move(palette), std::move(image), std::move(labels), std::move(gt)};
}

int resolved_threads(int threads) { return threads <= 0 ? default_thread_count() : threads; }

json params_json(const CrfParams& p) {
    return {{"p", p.label_confidence},  {"iterations", p.iterations},     {"model", std::string(to_string(p.model))},
            {"theta_alpha", p.theta_alpha}, {"theta_beta", p.theta_beta}, {"theta_gamma", p.theta_gamma},
            {"w_app", p.w_appearance},  {"w_sm", p.w_smoothness},     {"w_grid", p.w_grid},
            {"damping", p.damping},     {"early_exit", p.early_exit}};
}

// Sidecar "<output>.manifest.json" recording how the output was made.
class Manifest {
public:
    Manifest(const std::vector<std::string>& args, std::string command) {
        doc_["tool"] = "crfseg";
        doc_["version"] = kVersion;
        doc_["command"] = std::move(command);
        doc_["argv"] = args;
        doc_["seed"] = nullptr;
    }
    json& operator[](const char* key) { return doc_[key]; }

    void write_for(const fs::path& output) const {
        json doc = doc_;
        doc["output"] = output.filename().string();
        write_text_file(fs::path(output.string() + ".manifest.json"), doc.dump(2) + "\n");
    }

private:
    json doc_;
};

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

InferenceOptions inference_options(int threads) {
    InferenceOptions options;
    options.threads = resolved_threads(threads);
    return options;
}

int cmd_refine(const RefineFlags& f, const std::string& out_path, const std::string& metrics_path,
               const std::vector<std::string>& args, std::ostream& out) {
    CrfParams params = f.params;
    params.model = parse_model_kind(f.model);
    const Inputs in = load_inputs(f);
    params = validate_params(params, in.palette.num_classes());

    const UnaryField unary = unary_from_labels(in.labels, params.label_confidence);
    const InferenceResult result = run_inference(unary, in.image, params, inference_options(f.threads));

    Manifest manifest(args, "refine");
    manifest["parameters"] = params_json(params);
    manifest["threads"] = resolved_threads(f.threads);
    save_labels(result.labels, in.palette, out_path);
    manifest.write_for(out_path);
    out << "refined " << in.image.height() << "x" << in.image.width() << " (" << to_string(params.model) << ", "
        << result.trace.iterations_run << " iterations) -> " << out_path << "\n";

    if (in.gt) {
        const EvalReport report = evaluate(result.labels, *in.gt);
        const fs::path metrics = metrics_path.empty() ? fs::path(out_path).replace_extension(".metrics.json")
                                                      : fs::path(metrics_path);
        write_report(report, metrics);
        manifest.write_for(metrics);
        out << "pixel_accuracy " << format_double(report.pixel_accuracy) << " (input "
            << format_double(evaluate(in.labels, *in.gt).pixel_accuracy) << "), mean_iou "
            << format_double(report.mean_iou) << " -> " << metrics.string() << "\n";
    }
    return kOk;
}

std::vector<double> parse_p_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
            throw ParameterError("--p-list: '" + item + "' is not a number");
        }
        if (std::find(values.begin(), values.end(), v) != values.end()) {
            throw ParameterError("--p-list: duplicate p value " + item);
        }
        values.push_back(v);
    }
    if (values.empty()) throw ParameterError("--p-list is empty");
    return values;
}

int cmd_sweep(const RefineFlags& f, const std::string& p_list, const std::string& out_dir,
              const std::vector<std::string>& args, std::ostream& out) {
    if (f.gt.empty()) throw ParameterError("sweep requires --gt");
    const std::vector<double> ps = parse_p_list(p_list);
    CrfParams base = f.params;
    base.model = parse_model_kind(f.model);
    const Inputs in = load_inputs(f);
    std::vector<CrfParams> checked;
    for (double p : ps) {
        CrfParams params = base;
        params.label_confidence = p;
        checked.push_back(validate_params(params, in.palette.num_classes()));
    }
    ensure_directory(out_dir);

    Manifest manifest(args, "sweep");
    manifest["parameters"] = params_json(base);
    manifest["p_list"] = ps;
    manifest["threads"] = resolved_threads(f.threads);
    std::vector<std::pair<double, EvalReport>> reports;
    for (const CrfParams& params : checked) {
        const UnaryField unary = unary_from_labels(in.labels, params.label_confidence);
        const InferenceResult result = run_inference(unary, in.image, params, inference_options(f.threads));
        const fs::path png = fs::path(out_dir) / ("refined_p" + format_double(params.label_confidence) + ".png");
        save_labels(result.labels, in.palette, png);
        manifest.write_for(png);
        reports.emplace_back(params.label_confidence, evaluate(result.labels, *in.gt));
        out << "p " << format_double(params.label_confidence) << ": pixel_accuracy "
            << format_double(reports.back().second.pixel_accuracy) << " -> " << png.string() << "\n";
    }
    const SweepSummary summary = sweep_report(reports);
    const fs::path csv = fs::path(out_dir) / "sweep.csv";
    const fs::path js = fs::path(out_dir) / "sweep.json";
    write_sweep(summary, csv, js);
    manifest.write_for(csv);
    manifest.write_for(js);
    out << "accuracy non-decreasing in p: " << (summary.accuracy_non_decreasing ? "yes" : "no") << "\n";
    return kOk;
}

int cmd_compare(const RefineFlags& f, const std::string& out_dir, const std::vector<std::string>& args,
                std::ostream& out) {
    if (f.gt.empty()) throw ParameterError("compare requires --gt");
    const Inputs in = load_inputs(f);
    const CrfParams params = validate_params(f.params, in.palette.num_classes());
    ensure_directory(out_dir);
    const UnaryField unary = unary_from_labels(in.labels, params.label_confidence);

    Manifest manifest(args, "compare");
    manifest["parameters"] = params_json(params);
    manifest["threads"] = resolved_threads(f.threads);
    json doc;
    double accuracy[2] = {0.0, 0.0};
    for (const ModelKind model : {ModelKind::dense, ModelKind::grid}) {
        CrfParams run = params;
        run.model = model;
        const InferenceResult result = run_inference(unary, in.image, run, inference_options(f.threads));
        const std::string name(to_string(model));
        const fs::path png = fs::path(out_dir) / (name + ".png");
        save_labels(result.labels, in.palette, png);
        manifest.write_for(png);
        const EvalReport report = evaluate(result.labels, *in.gt);
        doc[name] = json::parse(report_json(report));
        accuracy[model == ModelKind::dense ? 0 : 1] = report.pixel_accuracy;
        out << name << ": pixel_accuracy " << format_double(report.pixel_accuracy) << " -> " << png.string() << "\n";
    }
    doc["input_pixel_accuracy"] = evaluate(in.labels, *in.gt).pixel_accuracy;
    doc["accuracy_delta"] = accuracy[0] - accuracy[1];
    const fs::path js = fs::path(out_dir) / "compare.json";
    write_text_file(js, doc.dump(2) + "\n");
    manifest.write_for(js);
    out << "accuracy_delta (dense - grid) " << format_double(accuracy[0] - accuracy[1]) << "\n";
    return kOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& palette_name,
             double tolerance, const std::string& metrics_path, const std::vector<std::string>& args,
             std::ostream& out) {
    const ClassPalette palette = load_palette(palette_name);
    const LabelMap pred = load_labels(pred_path, palette, tolerance);
    const LabelMap gt = load_labels(gt_path, palette, tolerance);
    const EvalReport report = evaluate(pred, gt);
    if (metrics_path.empty()) {
        out << report_json(report);
        return kOk;
    }
    write_report(report, metrics_path);
    Manifest(args, "eval").write_for(metrics_path);
    out << "pixel_accuracy " << format_double(report.pixel_accuracy) << ", mean_iou " << format_double(report.mean_iou)
        << " -> " << metrics_path << "\n";
    return kOk;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
    const auto x = text.find_first_of("xX");
    std::size_t h = 0;
    std::size_t w = 0;
    try {
        std::size_t used_h = 0;
        std::size_t used_w = 0;
        if (x == std::string::npos) throw std::invalid_argument("no separator");
        h = std::stoul(text.substr(0, x), &used_h);
        w = std::stoul(text.substr(x + 1), &used_w);
        if (used_h != x || used_w != text.size() - x - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
        throw ParameterError("--size must look like HxW, got '" + text + "'");
    }
    return {h, w};
}

int cmd_gen_fixture(const std::string& kind_name, const std::string& size, double noise, std::uint64_t seed,
                    const std::string& out_dir, const std::vector<std::string>& args, std::ostream& out) {
    const FixtureKind kind = parse_fixture_kind(kind_name);
    const auto [h, w] = parse_size(size);
    const Fixture fixture = gen_fixture(kind, h, w, noise, seed);
    const ClassPalette palette = builtin_palette(kind == FixtureKind::binary_blobs ? "city_binary" : "potsdam");
    ensure_directory(out_dir);

    Manifest manifest(args, "gen-fixture");
    manifest["seed"] = seed;
    manifest["fixture"] = {{"kind", std::string(to_string(kind))}, {"height", h}, {"width", w}, {"noise", noise}};
    const fs::path dir(out_dir);
    save_image(fixture.image, dir / "image.png");
    save_labels(fixture.clean, palette, dir / "clean.png");
    save_labels(fixture.noisy, palette, dir / "noisy.png");
    for (const char* name : {"image.png", "clean.png", "noisy.png"}) manifest.write_for(dir / name);
    out << to_string(kind) << " " << h << "x" << w << " noise " << format_double(noise) << " seed " << seed << " -> "
        << out_dir << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Dense CRF refinement of label maps", "crfseg");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RefineFlags refine_flags;
    std::string refine_out;
    std::string refine_metrics;
    auto* refine = app.add_subcommand("refine", "Refine a label map with a dense or grid CRF");
    add_refine_flags(*refine, refine_flags, true);
    refine->add_option("--gt", refine_flags.gt, "Ground-truth label map; enables metrics");
    refine->add_option("--out", refine_out, "Refined label map (PNG)")->required();
    refine->add_option("--metrics", refine_metrics, "Metrics JSON (default: --out with extension .metrics.json; needs --gt)");

    RefineFlags sweep_flags;
    std::string p_list = "0.70,0.80,0.90,0.95";
    std::string sweep_dir;
    auto* sweep = app.add_subcommand("sweep", "Refine at several label confidences and tabulate accuracy");
    add_refine_flags(*sweep, sweep_flags, true);
    sweep->add_option("--gt", sweep_flags.gt, "Ground-truth label map")->required();
    sweep->add_option("--p-list", p_list, "Comma-separated confidences")->capture_default_str();
    sweep->add_option("--out-dir", sweep_dir, "Output directory")->required();

    RefineFlags compare_flags;
    std::string compare_dir;
    auto* compare = app.add_subcommand("compare", "Run the dense and grid models on the same unaries");
    add_refine_flags(*compare, compare_flags, false);
    compare->add_option("--gt", compare_flags.gt, "Ground-truth label map")->required();
    compare->add_option("--out-dir", compare_dir, "Output directory")->required();

    std::string pred_path;
    std::string gt_path;
    std::string eval_palette;
    std::string eval_metrics;
    double eval_tolerance = kDefaultColorTolerance;
    auto* eval = app.add_subcommand("eval", "Score a label map against ground truth");
    eval->add_option("--pred", pred_path, "Predicted label map")->required();
    eval->add_option("--gt", gt_path, "Ground-truth label map")->required();
    eval->add_option("--palette", eval_palette, "city_binary, potsdam, or a palette file")->required();
    eval->add_option("--metrics", eval_metrics, "Metrics JSON (default: print to stdout)");
    eval->add_option("--tolerance", eval_tolerance, "RGB distance for snapping label colors")->capture_default_str();

    std::string kind;
    std::string size;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string fixture_dir;
    auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic image, clean and noisy label maps");
    gen->add_option("--kind", kind, "binary_blobs or potsdam_mosaic")->required();
    gen->add_option("--size", size, "HxW")->required();
    gen->add_option("--noise", noise, "Fraction of labels flipped, in [0, 1)")->required();
    gen->add_option("--seed", seed, "RNG seed")->required();
    gen->add_option("--out-dir", fixture_dir, "Output directory")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalidArguments;
    }

    try {
        if (refine->parsed()) return cmd_refine(refine_flags, refine_out, refine_metrics, args, out);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, p_list, sweep_dir, args, out);
        if (compare->parsed()) return cmd_compare(compare_flags, compare_dir, args, out);
        if (eval->parsed()) return cmd_eval(pred_path, gt_path, eval_palette, eval_tolerance, eval_metrics, args, out);
        return cmd_gen_fixture(kind, size, noise, seed, fixture_dir, args, out);
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidArguments;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidArguments;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
}

}  // namespace crfseg::cli
