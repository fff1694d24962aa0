#include "layerkit/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "layerkit/metrics.hpp"

namespace layerkit {

OracleMatting::OracleMatting(const LayerSequence& ground_truth,
                             float occlusion_cut)
    : grouped_(group_top_layers(ground_truth, occlusion_cut)),
      cursor_(static_cast<int>(grouped_.layers.size()) - 1) {}

int OracleMatting::groups_remaining() const { return cursor_; }

AlphaMap OracleMatting::matte(const RasterImage& image) {
    if (image.width() != grouped_.canvas_width ||
        image.height() != grouped_.canvas_height)
        throw BackendError(BackendError::Kind::contract,
                           "oracle matting: image does not match the "
                           "ground-truth canvas");
    if (cursor_ < 1)
        return AlphaMap(image.width(), image.height(), 0.0f);
    return grouped_.layers[cursor_--].alpha();
}

HeuristicFlatMatting::HeuristicFlatMatting(HeuristicMattingConfig config)
    : config_(config) {}

AlphaMap HeuristicFlatMatting::matte(const RasterImage& image) {
    const int w = image.width();
    const int h = image.height();
    const int n = w * h;

    std::vector<std::tuple<int, int, int>> quantized(n);
    std::map<std::tuple<int, int, int>, int> frequency;
    const double step = config_.quantization_step;
    for (int p = 0; p < n; ++p) {
        const auto rgb = image.pixel(p % w, p / w);
        const std::tuple<int, int, int> key{
            static_cast<int>(std::floor(rgb[0] / step)),
            static_cast<int>(std::floor(rgb[1] / step)),
            static_cast<int>(std::floor(rgb[2] / step))};
        quantized[p] = key;
        ++frequency[key];
    }

    auto background = frequency.begin()->first;
    int best_count = frequency.begin()->second;
    for (const auto& [key, count] : frequency) {
        if (count > best_count) {
            background = key;
            best_count = count;
        }
    }

    // Connected components of identical quantized color, excluding background.
    AlphaMap alpha(w, h, 0.0f);
    std::vector<char> visited(n, 0);
    std::vector<int> stack;
    std::vector<int> component;
    for (int start = 0; start < n; ++start) {
        if (visited[start] || quantized[start] == background) continue;
        component.clear();
        stack.assign(1, start);
        visited[start] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            component.push_back(p);
            const int x = p % w;
            const int y = p / w;
            const int neighbors[4] = {x > 0 ? p - 1 : -1,
                                      x < w - 1 ? p + 1 : -1,
                                      y > 0 ? p - w : -1,
                                      y < h - 1 ? p + w : -1};
            for (int q : neighbors) {
                if (q >= 0 && !visited[q] && quantized[q] == quantized[start]) {
                    visited[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        if (static_cast<int>(component.size()) >= config_.min_region_area) {
            for (int p : component) alpha[p] = 1.0f;
        }
    }
    return alpha;
}

HarmonicInpainting::HarmonicInpainting(HarmonicInpaintingConfig config)
    : config_(config) {}

RasterImage HarmonicInpainting::inpaint(const RasterImage& image,
                                        const Mask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("harmonic inpaint: dimensions differ");
    const int w = image.width();
    const int h = image.height();
    const int n = w * h;

    std::vector<int> masked;
    for (int p = 0; p < n; ++p)
        if (mask[p]) masked.push_back(p);
    if (masked.empty()) return image;
    if (static_cast<int>(masked.size()) == n)
        throw BackendError(BackendError::Kind::contract,
                           "harmonic inpaint: mask covers the entire image, "
                           "no boundary data");

    RasterImage out = image;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> v(n);
        for (int p = 0; p < n; ++p) v[p] = image.at(p % w, p / w, c);

        // Start masked pixels from the mean of the unmasked boundary ring.
        double boundary_sum = 0.0;
        int boundary_count = 0;
        for (int p : masked) {
            const int x = p % w;
            const int y = p / w;
            const int neighbors[4] = {x > 0 ? p - 1 : -1,
                                      x < w - 1 ? p + 1 : -1,
                                      y > 0 ? p - w : -1,
                                      y < h - 1 ? p + w : -1};
            for (int q : neighbors) {
                if (q >= 0 && !mask[q]) {
                    boundary_sum += v[q];
                    ++boundary_count;
                }
            }
        }
        const double init =
            boundary_count > 0 ? boundary_sum / boundary_count : 0.0;
        for (int p : masked) v[p] = init;

        for (int sweep = 0; sweep < config_.max_sweeps; ++sweep) {
            double residual = 0.0;
            for (int p : masked) {
                const int x = p % w;
                const int y = p / w;
                double sum = 0.0;
                int count = 0;
                if (x > 0) { sum += v[p - 1]; ++count; }
                if (x < w - 1) { sum += v[p + 1]; ++count; }
                if (y > 0) { sum += v[p - w]; ++count; }
                if (y < h - 1) { sum += v[p + w]; ++count; }
                const double next = sum / count;
                residual = std::max(residual, std::abs(next - v[p]));
                v[p] = next;
            }
            if (residual < config_.residual_tolerance) break;
        }

        for (int p : masked)
            out.at(p % w, p / w, c) =
                static_cast<float>(std::min(1.0, std::max(0.0, v[p])));
    }
    return out;
}

RasterImage IdentityInpainting::inpaint(const RasterImage& image,
                                        const Mask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("identity inpaint: dimensions differ");
    return image;
}

}  // namespace layerkit
