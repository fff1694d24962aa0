#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace layerkit {

/// 8-bit RGBA buffer as stored on disk, row-major, non-premultiplied.
struct Rgba8Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // width * height * 4
};

/// Reads any PNG as 8-bit RGBA (palette/gray/16-bit inputs are expanded).
/// Throws std::runtime_error on missing or corrupt files.
Rgba8Image read_png(const std::filesystem::path& path);

/// Writes 8-bit RGBA PNG. Output is deterministic for identical input.
void write_png(const std::filesystem::path& path, const Rgba8Image& image);

}  // namespace layerkit
