#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "layerkit/backend.hpp"
#include "layerkit/raster.hpp"

namespace layerkit {

enum class ShapeKind { rect, ellipse, ring, bar, glyph };
enum class OverlapMode { disjoint, stacked, mixed };
enum class BackgroundKind { flat, two_tone, linear_gradient };
enum class EdgeKind { hard, antialiased };

struct DesignSpec {
    uint64_t seed = 0;
    int canvas_width = 128;
    int canvas_height = 128;
    int min_layers = 1;
    int max_layers = 3;
    std::vector<ShapeKind> shape_kinds = {ShapeKind::rect, ShapeKind::ellipse,
                                          ShapeKind::ring, ShapeKind::bar,
                                          ShapeKind::glyph};
    int palette_size = 6;
    OverlapMode overlap_mode = OverlapMode::mixed;
    BackgroundKind background = BackgroundKind::flat;
    EdgeKind edge = EdgeKind::antialiased;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic per seed. Foreground layers are flat-color shapes (glyph
/// blobs may carry two colors); antialiased edges come from 4x supersampling.
/// Stacked layers nest inside their parent's interior, disjoint layers keep a
/// clean gap, so visibility grouping is always exact. Throws
/// GenerationError when shapes cannot be placed. When `names` is non-null it
/// receives one label per layer ("background", "rect", ...).
LayerSequence generate_design(const DesignSpec& spec,
                              std::vector<std::string>* names = nullptr);

struct MattingPair {
    RasterImage input;
    AlphaMap target;
    int iteration = 0;           // 0-based peel depth from the front
    bool inpainted_input = false;
};

/// Builds matting training pairs by repeatedly pairing the composite of the
/// remaining layers with the alpha of their frontmost visibility group. When
/// an inpainting backend is supplied, additionally emits variants whose
/// removed-layer regions are completed, except where those regions span the
/// remaining foreground layers. Single-layer sequences yield no pairs.
std::vector<MattingPair> make_matting_pairs(
    const LayerSequence& seq, InpaintingBackend* inpainting = nullptr);

}  // namespace layerkit
