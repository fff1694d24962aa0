#include "layerkit/pipeline.hpp"

#include <cmath>
#include <utility>

namespace layerkit {

namespace {

void check_alpha_contract(const AlphaMap& alpha, const RasterImage& image) {
    if (alpha.width() != image.width() || alpha.height() != image.height())
        throw BackendError(BackendError::Kind::contract,
                           "matting returned wrong dimensions");
    for (float v : alpha.data()) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw BackendError(BackendError::Kind::contract,
                               "matting returned alpha outside [0,1]");
    }
}

void check_inpaint_contract(const RasterImage& completed,
                            const RasterImage& image, const Mask& mask) {
    if (!completed.same_size(image))
        throw BackendError(BackendError::Kind::contract,
                           "inpainting returned wrong dimensions");
    const auto& a = completed.data();
    const auto& b = image.data();
    for (size_t i = 0; i < mask.data().size(); ++i) {
        if (mask[i]) continue;
        for (int c = 0; c < 3; ++c) {
            if (a[i * 3 + c] != b[i * 3 + c])
                throw BackendError(BackendError::Kind::contract,
                                   "inpainting modified unmasked pixels");
        }
    }
    for (float v : a) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw BackendError(BackendError::Kind::contract,
                               "inpainting returned values outside [0,1]");
    }
}

}  // namespace

bool should_terminate(const AlphaMap& alpha, const PipelineConfig& config) {
    int above = 0;
    for (float v : alpha.data())
        if (v > config.termination_alpha) ++above;
    const double fraction =
        static_cast<double>(above) / static_cast<double>(alpha.pixel_count());
    return fraction < config.termination_fraction;
}

Mask mask_for_inpainting(const AlphaMap& alpha, const PipelineConfig& config) {
    Mask mask(alpha.width(), alpha.height(), 0);
    for (size_t i = 0; i < alpha.data().size(); ++i)
        mask[i] = alpha[i] > config.termination_alpha ? 1 : 0;
    return dilate(mask, config.inpaint_dilation);
}

DecompositionResult decompose(const RasterImage& image,
                              const PipelineConfig& config,
                              MattingBackend& matting,
                              InpaintingBackend& inpainting) {
    if (image.width() < 1 || image.height() < 1)
        throw std::invalid_argument("decompose: empty image");
    if (config.max_iterations < 1)
        throw std::invalid_argument("decompose: max_iterations must be >= 1");

    DecompositionResult result;
    DecompositionTrace& trace = result.trace;
    RasterImage current = image;
    std::vector<Layer> peeled_front_first;

    for (int m = 1; m <= config.max_iterations; ++m) {
        AlphaMap raw_alpha;
        try {
            raw_alpha = matting.matte(current);
            check_alpha_contract(raw_alpha, current);
        } catch (const std::exception& e) {
            throw PipelineError(m, std::move(trace),
                                "matting failed at iteration " +
                                    std::to_string(m) + ": " + e.what());
        }

        if (should_terminate(raw_alpha, config)) {
            trace.reason = TerminationReason::empty_matte;
            break;
        }

        const Mask mask = mask_for_inpainting(raw_alpha, config);
        RasterImage completed;
        try {
            completed = inpainting.inpaint(current, mask);
            check_inpaint_contract(completed, current, mask);
        } catch (const std::exception& e) {
            throw PipelineError(m, std::move(trace),
                                "inpainting failed at iteration " +
                                    std::to_string(m) + ": " + e.what());
        }

        IterationRecord record;
        record.raw_alpha = raw_alpha;
        record.inpainted = completed;

        RasterImage backdrop = completed;
        if (config.refine_background)
            backdrop = refine_background(completed, mask, config.refine);
        record.refined_backdrop = backdrop;

        AlphaMap alpha = raw_alpha;
        if (config.refine_foreground) {
            const RasterImage& match_source =
                config.fg_match_on_original ? image : current;
            alpha = refine_foreground(match_source, raw_alpha, backdrop,
                                      config.refine);
        }
        record.refined_alpha = alpha;

        const RasterImage fg = unblend(current, backdrop, alpha);
        record.extracted = Layer(fg, alpha);
        peeled_front_first.push_back(record.extracted);
        trace.iterations.push_back(std::move(record));

        current = backdrop;
        if (m == config.max_iterations)
            trace.reason = TerminationReason::max_iterations;
    }

    LayerSequence& seq = result.sequence;
    seq.canvas_width = image.width();
    seq.canvas_height = image.height();
    seq.layers.push_back(Layer(current, Plane(image.width(), image.height(), 1.0f)));
    for (auto it = peeled_front_first.rbegin(); it != peeled_front_first.rend();
         ++it)
        seq.layers.push_back(*it);
    return result;
}

}  // namespace layerkit
