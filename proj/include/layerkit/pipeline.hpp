#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "layerkit/backend.hpp"
#include "layerkit/raster.hpp"
#include "layerkit/refine.hpp"

namespace layerkit {

struct PipelineConfig {
    int max_iterations = 3;
    double termination_alpha = 0.5;
    double termination_fraction = 5e-4;
    int inpaint_dilation = 3;
    bool refine_foreground = true;
    bool refine_background = true;
    /// When set, foreground palette matching runs on the original input
    /// instead of the current partially decomposed image.
    bool fg_match_on_original = false;
    RefineConfig refine;
};

enum class TerminationReason {
    empty_matte,
    max_iterations,
};

struct IterationRecord {
    AlphaMap raw_alpha;
    AlphaMap refined_alpha;
    RasterImage inpainted;
    RasterImage refined_backdrop;
    Layer extracted;
};

struct DecompositionTrace {
    std::vector<IterationRecord> iterations;
    TerminationReason reason = TerminationReason::max_iterations;
};

struct DecompositionResult {
    LayerSequence sequence;  // back to front; layer 0 is the residual backdrop
    DecompositionTrace trace;
};

class PipelineError : public std::runtime_error {
public:
    PipelineError(int iteration, DecompositionTrace trace,
                  const std::string& message)
        : std::runtime_error(message),
          iteration_(iteration),
          trace_(std::move(trace)) {}

    int iteration() const { return iteration_; }
    const DecompositionTrace& partial_trace() const { return trace_; }

private:
    int iteration_;
    DecompositionTrace trace_;
};

/// True when fewer than termination_fraction of the pixels lie strictly
/// above termination_alpha.
bool should_terminate(const AlphaMap& alpha, const PipelineConfig& config);

/// Binarizes the matte at termination_alpha and dilates it with a square
/// structuring element of the configured radius.
Mask mask_for_inpainting(const AlphaMap& alpha, const PipelineConfig& config);

/// Iteratively peels foreground layers: matte, inpaint the matte's support,
/// refine, unblend, and recurse on the completed backdrop. The residual
/// backdrop becomes layer 0 and layers are returned back to front.
DecompositionResult decompose(const RasterImage& image,
                              const PipelineConfig& config,
                              MattingBackend& matting,
                              InpaintingBackend& inpainting);

}  // namespace layerkit
