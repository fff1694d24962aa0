#pragma once

#include "layerkit/backend.hpp"
#include "layerkit/raster.hpp"

namespace layerkit {

/// Ground-truth-backed matting: each call returns the blended alpha of the
/// current frontmost visibility group of the held layer sequence and advances
/// an internal cursor. Once the groups are exhausted only the background
/// remains and the matte is identically zero.
class OracleMatting : public MattingBackend {
public:
    explicit OracleMatting(const LayerSequence& ground_truth,
                           float occlusion_cut = 0.5f);

    AlphaMap matte(const RasterImage& image) override;

    int groups_remaining() const;

private:
    LayerSequence grouped_;
    int cursor_;  // index into grouped_.layers of the next group to hand out
};

struct HeuristicMattingConfig {
    double quantization_step = 4.0 / 255.0;
    int min_region_area = 16;
};

/// Flat-color heuristic: quantizes colors, declares the most frequent
/// quantized color to be background, and mattes the connected uniform-color
/// regions of everything else that meets the area threshold.
class HeuristicFlatMatting : public MattingBackend {
public:
    explicit HeuristicFlatMatting(HeuristicMattingConfig config = {});

    AlphaMap matte(const RasterImage& image) override;
    bool concurrency_safe() const override { return true; }

private:
    HeuristicMattingConfig config_;
};

struct HarmonicInpaintingConfig {
    double residual_tolerance = 1e-4;
    int max_sweeps = 2000;
};

/// Fills masked pixels with the discrete Laplace solution: every masked pixel
/// converges to the mean of its 4-neighbors with unmasked pixels as boundary
/// data. Deterministic Gauss-Seidel sweeps in row-major order.
class HarmonicInpainting : public InpaintingBackend {
public:
    explicit HarmonicInpainting(HarmonicInpaintingConfig config = {});

    RasterImage inpaint(const RasterImage& image, const Mask& mask) override;
    bool concurrency_safe() const override { return true; }

private:
    HarmonicInpaintingConfig config_;
};

/// Returns the input unchanged; useful as an explicit "no completion" choice.
class IdentityInpainting : public InpaintingBackend {
public:
    RasterImage inpaint(const RasterImage& image, const Mask& mask) override;
    bool concurrency_safe() const override { return true; }
};

}  // namespace layerkit
