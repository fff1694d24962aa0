#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "layerkit/raster.hpp"

namespace layerkit {

class SequenceIoError : public std::runtime_error {
public:
    enum class Code {
        missing_manifest,
        bad_manifest,
        layer_count_mismatch,
        canvas_mismatch,
        corrupt_image,
        write_failure,
    };

    SequenceIoError(Code code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

/// Sidecar information carried by a sequence directory's manifest.
struct SequenceMeta {
    std::optional<std::string> generator;
    std::optional<int64_t> seed;
    std::vector<std::optional<std::string>> layer_names;  // parallel to layers
};

/// Writes manifest.json plus layer_<z>.png files (8-bit RGBA, straight alpha).
void write_sequence(const LayerSequence& seq, const std::filesystem::path& dir,
                    const SequenceMeta& meta = {});

/// Loads a sequence directory; layers are ordered by manifest z, not by
/// filename. Raises SequenceIoError with a distinct code per failure mode.
LayerSequence read_sequence(const std::filesystem::path& dir,
                            SequenceMeta* meta = nullptr);

/// Float plane/image conversions to and from the 8-bit file representation.
uint8_t quantize8(float v);
Layer layer_from_rgba8(const std::vector<uint8_t>& pixels, int width, int height);
std::vector<uint8_t> layer_to_rgba8(const Layer& layer);

}  // namespace layerkit
