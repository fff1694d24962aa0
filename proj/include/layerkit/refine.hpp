#pragma once

#include <array>
#include <vector>

#include "layerkit/color.hpp"
#include "layerkit/raster.hpp"

namespace layerkit {

struct RefineConfig {
    int fg_max_colors = 10;
    int bg_max_colors = 2;
    double flatness_threshold = 0.6;
    double gradient_epsilon = 2.0 / 255.0;
    double overlap_threshold = 0.8;
    int ring_width = 5;
    double palette_match_radius = 5.0;  // Lab distance
    double percentile_coverage = 0.95;
};

/// 4-connected pixel region; pixel indices are row-major and sorted.
struct ConnectedRegion {
    std::vector<int> pixels;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    int area() const { return static_cast<int>(pixels.size()); }
};

/// Components of {alpha > cut}, sorted by area descending; ties broken by the
/// scanline position of the first pixel.
std::vector<ConnectedRegion> connected_components(const Plane& alpha, float cut);

/// Same, over set pixels of a binary mask.
std::vector<ConnectedRegion> connected_components(const Mask& mask);

/// Fraction of region pixels whose largest forward difference (both axes, all
/// channels) stays within config.gradient_epsilon.
double flatness(const RasterImage& image, const std::vector<int>& region_pixels,
                const RefineConfig& config);

struct PaletteEntry {
    std::array<float, 3> rgb;
    LabColor lab;
    int count = 0;  // pixels covered, merged clusters included
};

struct Palette {
    std::vector<PaletteEntry> colors;

    /// Index of the entry nearest to the given Lab color.
    int nearest(const LabColor& lab) const;
};

/// Frequency-ordered palette of at most max_colors entries. Colors are
/// clustered on a uniform Lab grid, represented by per-channel medians, and
/// collected until percentile_coverage of the pixels is covered; entries
/// closer than palette_match_radius are merged.
Palette extract_palette(const std::vector<std::array<float, 3>>& colors,
                        int max_colors, const RefineConfig& config);

/// Snaps completed pixels inside each mask region to the palette of its
/// surrounding ring, when that surround is flat. Pixels outside the mask are
/// returned unchanged.
RasterImage refine_background(const RasterImage& completed, const Mask& mask,
                              const RefineConfig& config);

/// Re-estimates a matte from flat-color evidence: per alpha region, builds a
/// foreground palette from unblended candidates, regrows the region from
/// palette-matched pixels, and softens the 1-px mask boundary by a
/// least-squares alpha fit. Non-flat regions keep their original alpha.
AlphaMap refine_foreground(const RasterImage& image, const AlphaMap& alpha,
                           const RasterImage& backdrop,
                           const RefineConfig& config);

/// Least-squares alpha for x = a*f + (1-a)*b over three channels, clamped to
/// [0,1]. Returns fallback when f and b coincide.
float boundary_alpha_least_squares(const std::array<float, 3>& x,
                                   const std::array<float, 3>& f,
                                   const std::array<float, 3>& b,
                                   float fallback);

}  // namespace layerkit
