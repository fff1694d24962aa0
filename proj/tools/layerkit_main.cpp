#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "layerkit/backends.hpp"
#include "layerkit/external_backend.hpp"
#include "layerkit/metrics.hpp"
#include "layerkit/pipeline.hpp"
#include "layerkit/png_io.hpp"
#include "layerkit/sequence_io.hpp"
#include "layerkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace layerkit;

namespace {

constexpr const char* kVersion = "0.1.0";

RasterImage load_image(const fs::path& path) {
    Rgba8Image png = read_png(path);
    RasterImage out(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            const uint8_t* px =
                &png.pixels[(static_cast<size_t>(y) * png.width + x) * 4];
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = static_cast<float>(px[c]) / 255.0f;
        }
    }
    return out;
}

Rgba8Image image_to_rgba8(const RasterImage& image) {
    Rgba8Image out;
    out.width = image.width();
    out.height = image.height();
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * 4);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            uint8_t* px =
                &out.pixels[(static_cast<size_t>(y) * out.width + x) * 4];
            for (int c = 0; c < 3; ++c) px[c] = quantize8(image.at(x, y, c));
            px[3] = 255;
        }
    }
    return out;
}

Rgba8Image plane_to_rgba8(const Plane& plane) {
    Rgba8Image out;
    out.width = plane.width();
    out.height = plane.height();
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * 4);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            uint8_t* px =
                &out.pixels[(static_cast<size_t>(y) * out.width + x) * 4];
            uint8_t v = quantize8(plane.at(x, y));
            px[0] = px[1] = px[2] = v;
            px[3] = 255;
        }
    }
    return out;
}

/// Box-filter downscale so the short side becomes `target`; keeps the image
/// untouched when it is already small enough.
RasterImage resize_short_side(const RasterImage& image, int target) {
    int short_side = std::min(image.width(), image.height());
    if (target <= 0 || short_side <= target) return image;
    double scale = static_cast<double>(target) / short_side;
    int out_w = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
    int out_h = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
    RasterImage out(out_w, out_h);
    double sx = static_cast<double>(image.width()) / out_w;
    double sy = static_cast<double>(image.height()) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double y0 = y * sy, y1 = (y + 1) * sy;
        int iy0 = static_cast<int>(std::floor(y0));
        int iy1 = std::min(image.height(), static_cast<int>(std::ceil(y1)));
        for (int x = 0; x < out_w; ++x) {
            double x0 = x * sx, x1 = (x + 1) * sx;
            int ix0 = static_cast<int>(std::floor(x0));
            int ix1 = std::min(image.width(), static_cast<int>(std::ceil(x1)));
            double acc[3] = {0, 0, 0};
            double area = 0;
            for (int yy = iy0; yy < iy1; ++yy) {
                double hy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                for (int xx = ix0; xx < ix1; ++xx) {
                    double wx =
                        std::min<double>(xx + 1, x1) - std::max<double>(xx, x0);
                    double w = wx * hy;
                    area += w;
                    for (int c = 0; c < 3; ++c) acc[c] += w * image.at(xx, yy, c);
                }
            }
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = static_cast<float>(acc[c] / area);
        }
    }
    return out;
}

/// Contact sheet: input, each layer over a checkerboard, recomposite.
Rgba8Image make_preview(const RasterImage& input, const LayerSequence& seq) {
    const int w = seq.canvas_width, h = seq.canvas_height;
    const int gutter = 4;
    const int cols = 2 + static_cast<int>(seq.layers.size());
    const int sheet_w = cols * w + (cols + 1) * gutter;
    const int sheet_h = h + 2 * gutter;
    Rgba8Image sheet;
    sheet.width = sheet_w;
    sheet.height = sheet_h;
    sheet.pixels.assign(static_cast<size_t>(sheet_w) * sheet_h * 4, 255);
    for (size_t i = 0; i < sheet.pixels.size(); i += 4)
        sheet.pixels[i] = sheet.pixels[i + 1] = sheet.pixels[i + 2] = 64;

    auto put = [&](int cell, int x, int y, uint8_t r, uint8_t g, uint8_t b) {
        int sx = gutter + cell * (w + gutter) + x;
        int sy = gutter + y;
        uint8_t* px =
            &sheet.pixels[(static_cast<size_t>(sy) * sheet_w + sx) * 4];
        px[0] = r;
        px[1] = g;
        px[2] = b;
    };
    auto put_image = [&](int cell, const RasterImage& img) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                put(cell, x, y, quantize8(img.at(x, y, 0)),
                    quantize8(img.at(x, y, 1)), quantize8(img.at(x, y, 2)));
    };

    put_image(0, input);
    for (size_t i = 0; i < seq.layers.size(); ++i) {
        const Layer& layer = seq.layers[i];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float check = ((x / 8 + y / 8) % 2 == 0) ? 0.78f : 0.58f;
                float a = layer.at(x, y, 3);
                uint8_t rgb[3];
                for (int c = 0; c < 3; ++c)
                    rgb[c] = quantize8(layer.at(x, y, c) * a + check * (1 - a));
                put(1 + static_cast<int>(i), x, y, rgb[0], rgb[1], rgb[2]);
            }
        }
    }
    put_image(cols - 1, composite(seq));
    return sheet;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SequenceIoError(SequenceIoError::Code::write_failure,
                                    "cannot write " + path.string());
    out << text;
}

void write_run_json(const fs::path& path, const std::string& command,
                    ordered_json config) {
    ordered_json run;
    run["tool"] = "layerkit";
    run["version"] = kVersion;
    run["command"] = command;
    run["config"] = std::move(config);
    write_text(path, run.dump(2) + "\n");
}

struct BackendChoice {
    std::string spec;            // as given on the command line
    std::string kind;            // heuristic | oracle | harmonic | none | external
    std::string executable;     // for external
};

BackendChoice parse_backend_spec(const std::string& spec,
                                 const std::vector<std::string>& allowed) {
    BackendChoice choice;
    choice.spec = spec;
    if (spec.rfind("external:", 0) == 0) {
        choice.kind = "external";
        choice.executable = spec.substr(9);
        if (choice.executable.empty())
            throw std::invalid_argument("external backend needs a path: " + spec);
    } else {
        choice.kind = spec;
    }
    if (std::find(allowed.begin(), allowed.end(), choice.kind) == allowed.end())
        throw std::invalid_argument("unknown backend: " + spec);
    return choice;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const BackendError*>(&e)) return 3;
    if (dynamic_cast<const PipelineError*>(&e)) return 3;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 4;
    if (dynamic_cast<const GenerationError*>(&e)) return 4;
    return 2;  // I/O, filesystem, corrupt inputs
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeOptions {
    std::string input;
    std::string out_dir;
    std::string backend = "heuristic";
    std::string inpainting = "harmonic";
    std::vector<std::string> backend_args;
    std::vector<std::string> inpaint_args;
    std::string gt_dir;
    double timeout = 30.0;
    int resize_short = 0;
    bool trace = false;
    PipelineConfig pipeline;
};

int run_decompose(const DecomposeOptions& opt) {
    BackendChoice matte_choice =
        parse_backend_spec(opt.backend, {"heuristic", "oracle", "external"});
    BackendChoice paint_choice =
        parse_backend_spec(opt.inpainting, {"harmonic", "none", "external"});
    if (matte_choice.kind == "oracle" && opt.gt_dir.empty())
        throw std::invalid_argument("--backend oracle requires --gt");

    RasterImage image = resize_short_side(load_image(opt.input),
                                          opt.resize_short);

    std::unique_ptr<MattingBackend> matting;
    if (matte_choice.kind == "heuristic") {
        matting = std::make_unique<HeuristicFlatMatting>();
    } else if (matte_choice.kind == "oracle") {
        matting = std::make_unique<OracleMatting>(read_sequence(opt.gt_dir));
    } else {
        ExternalBackendConfig config;
        config.executable = matte_choice.executable;
        config.args = opt.backend_args;
        config.timeout_seconds = opt.timeout;
        matting = std::make_unique<ExternalMatting>(config);
    }
    std::unique_ptr<InpaintingBackend> inpainting;
    if (paint_choice.kind == "harmonic") {
        inpainting = std::make_unique<HarmonicInpainting>();
    } else if (paint_choice.kind == "none") {
        inpainting = std::make_unique<IdentityInpainting>();
    } else {
        ExternalBackendConfig config;
        config.executable = paint_choice.executable;
        config.args = opt.inpaint_args;
        config.timeout_seconds = opt.timeout;
        inpainting = std::make_unique<ExternalInpainting>(config);
    }

    DecompositionResult result =
        decompose(image, opt.pipeline, *matting, *inpainting);

    fs::create_directories(opt.out_dir);
    SequenceMeta meta;
    meta.generator = std::string("layerkit decompose ") + kVersion;
    meta.layer_names.push_back(std::string("background"));
    for (size_t i = 1; i < result.sequence.layers.size(); ++i)
        meta.layer_names.push_back("layer_" + std::to_string(i));
    write_sequence(result.sequence, opt.out_dir, meta);
    write_png(fs::path(opt.out_dir) / "preview.png",
              make_preview(image, result.sequence));

    if (opt.trace) {
        fs::path trace_dir = fs::path(opt.out_dir) / "trace";
        fs::create_directories(trace_dir);
        for (size_t i = 0; i < result.trace.iterations.size(); ++i) {
            const IterationRecord& rec = result.trace.iterations[i];
            std::string tag = "iter_" + std::to_string(i + 1) + "_";
            write_png(trace_dir / (tag + "raw_alpha.png"),
                      plane_to_rgba8(rec.raw_alpha));
            write_png(trace_dir / (tag + "refined_alpha.png"),
                      plane_to_rgba8(rec.refined_alpha));
            write_png(trace_dir / (tag + "inpainted.png"),
                      image_to_rgba8(rec.inpainted));
            write_png(trace_dir / (tag + "backdrop.png"),
                      image_to_rgba8(rec.refined_backdrop));
        }
    }

    ordered_json config;
    config["input"] = opt.input;
    config["out"] = opt.out_dir;
    config["backend"] = matte_choice.spec;
    config["backend_args"] = opt.backend_args;
    config["inpainting"] = paint_choice.spec;
    config["inpainting_args"] = opt.inpaint_args;
    if (!opt.gt_dir.empty()) config["gt"] = opt.gt_dir;
    config["timeout_seconds"] = opt.timeout;
    config["resize_short_side"] = opt.resize_short;
    config["max_iterations"] = opt.pipeline.max_iterations;
    config["termination_alpha"] = opt.pipeline.termination_alpha;
    config["termination_fraction"] = opt.pipeline.termination_fraction;
    config["inpaint_dilation"] = opt.pipeline.inpaint_dilation;
    config["refine_background"] = opt.pipeline.refine_background;
    config["refine_foreground"] = opt.pipeline.refine_foreground;
    config["fg_match_on_original"] = opt.pipeline.fg_match_on_original;
    config["trace"] = opt.trace;
    write_run_json(fs::path(opt.out_dir) / "run.json", "decompose",
                   std::move(config));

    std::printf("decomposed %s into %zu layers (%s)\n", opt.input.c_str(),
                result.sequence.layers.size(),
                result.trace.reason == TerminationReason::empty_matte
                    ? "matte exhausted"
                    : "iteration limit");
    return 0;
}

// ---------------------------------------------------------------------------
// composite

int run_composite(const std::string& seq_dir, const std::string& out_file) {
    LayerSequence seq = read_sequence(seq_dir);
    RasterImage image = composite(seq);
    fs::path out_path(out_file);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_png(out_path, image_to_rgba8(image));

    ordered_json config;
    config["input"] = seq_dir;
    config["out"] = out_file;
    fs::path run_path = out_path;
    run_path.replace_extension(".run.json");
    write_run_json(run_path, "composite", std::move(config));
    std::printf("composited %zu layers into %s\n", seq.layers.size(),
                out_file.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
    std::string out_dir;
    uint64_t seed = 0;
    int count = 1;
    DesignSpec spec;
    std::vector<std::string> shapes;
    std::string overlap = "mixed";
    std::string background = "flat";
    std::string edges = "antialiased";
    bool pairs = false;
    bool pairs_inpaint = false;
};

ShapeKind parse_shape(const std::string& name) {
    if (name == "rect") return ShapeKind::rect;
    if (name == "ellipse") return ShapeKind::ellipse;
    if (name == "ring") return ShapeKind::ring;
    if (name == "bar") return ShapeKind::bar;
    if (name == "glyph") return ShapeKind::glyph;
    throw std::invalid_argument("unknown shape kind: " + name);
}

int run_synth(SynthOptions opt) {
    if (!opt.shapes.empty()) {
        opt.spec.shape_kinds.clear();
        for (const std::string& name : opt.shapes)
            opt.spec.shape_kinds.push_back(parse_shape(name));
    }
    if (opt.overlap == "disjoint") opt.spec.overlap_mode = OverlapMode::disjoint;
    else if (opt.overlap == "stacked") opt.spec.overlap_mode = OverlapMode::stacked;
    else if (opt.overlap == "mixed") opt.spec.overlap_mode = OverlapMode::mixed;
    else throw std::invalid_argument("unknown overlap mode: " + opt.overlap);
    if (opt.background == "flat") opt.spec.background = BackgroundKind::flat;
    else if (opt.background == "two-tone") opt.spec.background = BackgroundKind::two_tone;
    else if (opt.background == "gradient") opt.spec.background = BackgroundKind::linear_gradient;
    else throw std::invalid_argument("unknown background: " + opt.background);
    if (opt.edges == "hard") opt.spec.edge = EdgeKind::hard;
    else if (opt.edges == "antialiased") opt.spec.edge = EdgeKind::antialiased;
    else throw std::invalid_argument("unknown edge mode: " + opt.edges);
    if (opt.count < 1) throw std::invalid_argument("--count must be positive");

    fs::create_directories(opt.out_dir);
    HarmonicInpainting inpainting;

    for (int i = 0; i < opt.count; ++i) {
        DesignSpec spec = opt.spec;
        spec.seed = opt.seed + static_cast<uint64_t>(i);
        fs::path dir = opt.out_dir;
        if (opt.count > 1) {
            char sub[32];
            std::snprintf(sub, sizeof(sub), "design_%04d", i);
            dir /= sub;
        }
        std::vector<std::string> names;
        LayerSequence seq = generate_design(spec, &names);
        SequenceMeta meta;
        meta.generator = std::string("layerkit synth ") + kVersion;
        meta.seed = static_cast<int64_t>(spec.seed);
        for (const std::string& n : names) meta.layer_names.push_back(n);
        write_sequence(seq, dir, meta);

        if (opt.pairs) {
            fs::path pair_dir = dir / "pairs";
            fs::create_directories(pair_dir);
            std::vector<MattingPair> pairs = make_matting_pairs(
                seq, opt.pairs_inpaint ? &inpainting : nullptr);
            ordered_json index = ordered_json::array();
            for (size_t k = 0; k < pairs.size(); ++k) {
                std::string stem = "pair_" + std::to_string(k);
                write_png(pair_dir / (stem + "_input.png"),
                          image_to_rgba8(pairs[k].input));
                write_png(pair_dir / (stem + "_target.png"),
                          plane_to_rgba8(pairs[k].target));
                ordered_json entry;
                entry["input"] = stem + "_input.png";
                entry["target"] = stem + "_target.png";
                entry["iteration"] = pairs[k].iteration;
                entry["provenance"] =
                    pairs[k].inpainted_input ? "inpainted-input" : "clean";
                index.push_back(std::move(entry));
            }
            write_text(pair_dir / "pairs.json", index.dump(2) + "\n");
        }
    }

    ordered_json config;
    config["out"] = opt.out_dir;
    config["seed"] = opt.seed;
    config["count"] = opt.count;
    config["width"] = opt.spec.canvas_width;
    config["height"] = opt.spec.canvas_height;
    config["min_layers"] = opt.spec.min_layers;
    config["max_layers"] = opt.spec.max_layers;
    {
        ordered_json kinds = ordered_json::array();
        for (ShapeKind k : opt.spec.shape_kinds) {
            switch (k) {
                case ShapeKind::rect: kinds.push_back("rect"); break;
                case ShapeKind::ellipse: kinds.push_back("ellipse"); break;
                case ShapeKind::ring: kinds.push_back("ring"); break;
                case ShapeKind::bar: kinds.push_back("bar"); break;
                case ShapeKind::glyph: kinds.push_back("glyph"); break;
            }
        }
        config["shapes"] = std::move(kinds);
    }
    config["palette"] = opt.spec.palette_size;
    config["overlap"] = opt.overlap;
    config["background"] = opt.background;
    config["edges"] = opt.edges;
    config["pairs"] = opt.pairs;
    config["pairs_inpaint"] = opt.pairs_inpaint;
    write_run_json(fs::path(opt.out_dir) / "run.json", "synth",
                   std::move(config));
    std::printf("generated %d design%s under %s\n", opt.count,
                opt.count == 1 ? "" : "s", opt.out_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
    std::string pred_dir;
    std::string gt_dir;
    std::string out_dir;
    std::string format = "text";
    EvalConfig eval;
};

int run_evaluate(const EvaluateOptions& opt) {
    if (opt.format != "text" && opt.format != "structured")
        throw std::invalid_argument("unknown format: " + opt.format);
    LayerSequence pred = read_sequence(opt.pred_dir);
    LayerSequence gt = read_sequence(opt.gt_dir);
    EvalReport report = evaluate(pred, gt, opt.eval);

    std::string text = report_to_text(report);
    std::string json = report_to_json(report);
    std::fputs(opt.format == "text" ? text.c_str() : json.c_str(), stdout);

    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        write_text(fs::path(opt.out_dir) / "report.txt", text);
        write_text(fs::path(opt.out_dir) / "report.json", json);
        ordered_json config;
        config["pred"] = opt.pred_dir;
        config["gt"] = opt.gt_dir;
        config["out"] = opt.out_dir;
        config["format"] = opt.format;
        config["max_edits"] = opt.eval.max_edits;
        config["occlusion_cut"] = opt.eval.occlusion_cut;
        config["alpha_weight"] = opt.eval.distance.alpha_weight;
        config["color_weight"] = opt.eval.distance.color_weight;
        config["binarize_alpha"] = opt.eval.distance.binarize_alpha;
        write_run_json(fs::path(opt.out_dir) / "run.json", "evaluate",
                       std::move(config));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layer decomposition toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    DecomposeOptions dec;
    CLI::App* decompose_cmd =
        app.add_subcommand("decompose", "Peel an image into RGBA layers");
    decompose_cmd->add_option("input", dec.input, "Input PNG")->required();
    decompose_cmd->add_option("--out", dec.out_dir, "Output sequence directory")
        ->required();
    decompose_cmd->add_option(
        "--backend", dec.backend,
        "Matting backend: heuristic | oracle | external:PATH");
    decompose_cmd->add_option(
        "--inpainting", dec.inpainting,
        "Inpainting backend: harmonic | none | external:PATH");
    decompose_cmd->add_option("--backend-arg", dec.backend_args,
                              "Extra argv for the external matting backend");
    decompose_cmd->add_option("--inpaint-arg", dec.inpaint_args,
                              "Extra argv for the external inpainting backend");
    decompose_cmd->add_option("--gt", dec.gt_dir,
                              "Ground-truth sequence directory (oracle backend)");
    decompose_cmd->add_option("--timeout", dec.timeout,
                              "External backend timeout in seconds");
    decompose_cmd->add_option("--resize-short-side", dec.resize_short,
                              "Downscale so the short side is at most this");
    decompose_cmd->add_option("--max-iterations", dec.pipeline.max_iterations,
                              "Maximum peel iterations");
    decompose_cmd->add_option("--termination-alpha",
                              dec.pipeline.termination_alpha,
                              "Alpha threshold for the termination test");
    decompose_cmd->add_option("--termination-fraction",
                              dec.pipeline.termination_fraction,
                              "Stop when fewer pixels than this fraction matte");
    decompose_cmd->add_option("--inpaint-dilation",
                              dec.pipeline.inpaint_dilation,
                              "Dilation radius for the inpainting mask");
    decompose_cmd->add_flag("!--no-refine-bg", dec.pipeline.refine_background,
                            "Disable background refinement");
    decompose_cmd->add_flag("!--no-refine-fg", dec.pipeline.refine_foreground,
                            "Disable foreground refinement");
    decompose_cmd->add_flag("--fg-match-original",
                            dec.pipeline.fg_match_on_original,
                            "Match foreground palette on the original image");
    decompose_cmd->add_flag("--trace", dec.trace,
                            "Write per-iteration images under trace/");

    std::string comp_in, comp_out;
    CLI::App* composite_cmd =
        app.add_subcommand("composite", "Flatten a layer sequence to a PNG");
    composite_cmd->add_option("input", comp_in, "Sequence directory")->required();
    composite_cmd->add_option("--out", comp_out, "Output PNG path")->required();

    SynthOptions syn;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate synthetic layered designs");
    synth_cmd->add_option("--out", syn.out_dir, "Output directory")->required();
    synth_cmd->add_option("--seed", syn.seed, "Base seed");
    synth_cmd->add_option("--count", syn.count,
                          "Number of designs (seed increments per design)");
    synth_cmd->add_option("--width", syn.spec.canvas_width, "Canvas width");
    synth_cmd->add_option("--height", syn.spec.canvas_height, "Canvas height");
    synth_cmd->add_option("--min-layers", syn.spec.min_layers,
                          "Minimum foreground layers");
    synth_cmd->add_option("--max-layers", syn.spec.max_layers,
                          "Maximum foreground layers");
    synth_cmd->add_option("--shapes", syn.shapes,
                          "Shape kinds: rect ellipse ring bar glyph");
    synth_cmd->add_option("--palette", syn.spec.palette_size, "Palette size");
    synth_cmd->add_option("--overlap", syn.overlap,
                          "Overlap mode: disjoint | stacked | mixed");
    synth_cmd->add_option("--background", syn.background,
                          "Background: flat | two-tone | gradient");
    synth_cmd->add_option("--edges", syn.edges,
                          "Edge rendering: hard | antialiased");
    synth_cmd->add_flag("--pairs", syn.pairs, "Emit matting training pairs");
    synth_cmd->add_flag("--pairs-inpaint", syn.pairs_inpaint,
                        "Also emit inpainted-input pair variants");

    EvaluateOptions ev;
    CLI::App* evaluate_cmd = app.add_subcommand(
        "evaluate", "Compare a predicted sequence against ground truth");
    evaluate_cmd->add_option("pred", ev.pred_dir, "Predicted sequence directory")
        ->required();
    evaluate_cmd->add_option("gt", ev.gt_dir, "Ground-truth sequence directory")
        ->required();
    evaluate_cmd->add_option("--out", ev.out_dir,
                             "Directory for report.txt / report.json");
    evaluate_cmd->add_option("--format", ev.format, "Output: text | structured");
    evaluate_cmd->add_option("--max-edits", ev.eval.max_edits,
                             "Maximum merge edits to explore");
    evaluate_cmd->add_option("--occlusion-cut", ev.eval.occlusion_cut,
                             "Alpha threshold for visibility grouping");
    evaluate_cmd->add_option("--alpha-weight", ev.eval.distance.alpha_weight,
                             "Weight of the alpha IoU term");
    evaluate_cmd->add_option("--color-weight", ev.eval.distance.color_weight,
                             "Weight of the color term");
    evaluate_cmd->add_flag("--binarize-alpha", ev.eval.distance.binarize_alpha,
                           "Binarize alphas before the IoU term");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    try {
        if (decompose_cmd->parsed()) return run_decompose(dec);
        if (composite_cmd->parsed()) return run_composite(comp_in, comp_out);
        if (synth_cmd->parsed()) return run_synth(syn);
        if (evaluate_cmd->parsed()) return run_evaluate(ev);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return 0;
}
