#include "layerkit/sequence_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "layerkit/png_io.hpp"

namespace layerkit {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad_manifest(const std::string& detail) {
    throw SequenceIoError(SequenceIoError::Code::bad_manifest,
                          "bad manifest: " + detail);
}

}  // namespace

uint8_t quantize8(float v) {
    const float c = std::min(1.0f, std::max(0.0f, v));
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

std::vector<uint8_t> layer_to_rgba8(const Layer& layer) {
    std::vector<uint8_t> out(layer.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = quantize8(layer.data()[i]);
    return out;
}

Layer layer_from_rgba8(const std::vector<uint8_t>& pixels, int width, int height) {
    if (pixels.size() != static_cast<size_t>(width) * height * 4)
        throw std::invalid_argument("layer_from_rgba8: buffer size mismatch");
    Layer out(width, height);
    for (size_t i = 0; i < pixels.size(); ++i)
        out.data()[i] = static_cast<float>(pixels[i]) / 255.0f;
    return out;
}

void write_sequence(const LayerSequence& seq, const std::filesystem::path& dir,
                    const SequenceMeta& meta) {
    validate(seq);
    if (!meta.layer_names.empty() && meta.layer_names.size() != seq.layers.size())
        throw std::invalid_argument("write_sequence: layer_names size mismatch");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw SequenceIoError(SequenceIoError::Code::write_failure,
                              "cannot create directory " + dir.string());

    ordered_json manifest;
    manifest["canvas"] = {{"width", seq.canvas_width},
                          {"height", seq.canvas_height}};
    manifest["layers"] = ordered_json::array();
    for (size_t z = 0; z < seq.layers.size(); ++z) {
        const std::string file = "layer_" + std::to_string(z) + ".png";
        ordered_json entry;
        entry["z"] = z;
        entry["file"] = file;
        if (z < meta.layer_names.size() && meta.layer_names[z])
            entry["name"] = *meta.layer_names[z];
        else
            entry["name"] = nullptr;
        manifest["layers"].push_back(entry);

        Rgba8Image img;
        img.width = seq.canvas_width;
        img.height = seq.canvas_height;
        img.pixels = layer_to_rgba8(seq.layers[z]);
        write_png(dir / file, img);
    }
    if (meta.generator)
        manifest["generator"] = *meta.generator;
    else
        manifest["generator"] = nullptr;
    if (meta.seed)
        manifest["seed"] = *meta.seed;
    else
        manifest["seed"] = nullptr;

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out)
        throw SequenceIoError(SequenceIoError::Code::write_failure,
                              "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << "\n";
}

LayerSequence read_sequence(const std::filesystem::path& dir,
                            SequenceMeta* meta) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in)
        throw SequenceIoError(SequenceIoError::Code::missing_manifest,
                              "missing manifest: " + manifest_path.string());

    ordered_json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        bad_manifest(e.what());
    }

    LayerSequence seq;
    try {
        seq.canvas_width = manifest.at("canvas").at("width").get<int>();
        seq.canvas_height = manifest.at("canvas").at("height").get<int>();
        if (!manifest.at("layers").is_array() || manifest["layers"].empty())
            bad_manifest("layers must be a non-empty array");
    } catch (const SequenceIoError&) {
        throw;
    } catch (const std::exception& e) {
        bad_manifest(e.what());
    }

    struct Entry {
        int z;
        std::string file;
        std::optional<std::string> name;
    };
    std::vector<Entry> entries;
    try {
        for (const auto& item : manifest["layers"]) {
            Entry e;
            e.z = item.at("z").get<int>();
            e.file = item.at("file").get<std::string>();
            if (item.contains("name") && !item["name"].is_null())
                e.name = item["name"].get<std::string>();
            entries.push_back(std::move(e));
        }
    } catch (const std::exception& e) {
        bad_manifest(e.what());
    }

    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.z < b.z; });
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].z != static_cast<int>(i))
            bad_manifest("z indices must be contiguous from 0");
    }

    if (meta) {
        meta->generator.reset();
        meta->seed.reset();
        meta->layer_names.clear();
        if (manifest.contains("generator") && !manifest["generator"].is_null())
            meta->generator = manifest["generator"].get<std::string>();
        if (manifest.contains("seed") && !manifest["seed"].is_null())
            meta->seed = manifest["seed"].get<int64_t>();
    }

    for (const Entry& entry : entries) {
        const auto path = dir / entry.file;
        if (!std::filesystem::exists(path))
            throw SequenceIoError(
                SequenceIoError::Code::layer_count_mismatch,
                "manifest lists " + std::to_string(entries.size()) +
                    " layers but " + entry.file + " is missing");
        Rgba8Image img;
        try {
            img = read_png(path);
        } catch (const std::exception& e) {
            throw SequenceIoError(SequenceIoError::Code::corrupt_image,
                                  e.what());
        }
        if (img.width != seq.canvas_width || img.height != seq.canvas_height)
            throw SequenceIoError(
                SequenceIoError::Code::canvas_mismatch,
                entry.file + " does not match the manifest canvas");
        seq.layers.push_back(layer_from_rgba8(img.pixels, img.width, img.height));
        if (meta) meta->layer_names.push_back(entry.name);
    }
    return seq;
}

}  // namespace layerkit
