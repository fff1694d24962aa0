#include "layerkit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace layerkit {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("raster dimensions must be positive");
}

float clamp01(double v) {
    return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

}  // namespace

Plane::Plane(int width, int height, float fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<size_t>(width) * height, fill);
}

Mask::Mask(int width, int height, uint8_t fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<size_t>(width) * height, fill);
}

int Mask::count_set() const {
    int n = 0;
    for (uint8_t v : data_) n += v ? 1 : 0;
    return n;
}

RasterImage::RasterImage(int width, int height, float fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<size_t>(width) * height * 3, fill);
}

Layer::Layer(int width, int height) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<size_t>(width) * height * 4, 0.0f);
}

Layer::Layer(RasterImage color, Plane alpha) {
    if (color.width() != alpha.width() || color.height() != alpha.height())
        throw std::invalid_argument("layer color/alpha dimensions differ");
    width_ = color.width();
    height_ = color.height();
    data_.resize(static_cast<size_t>(width_) * height_ * 4);
    const size_t n = static_cast<size_t>(width_) * height_;
    for (size_t i = 0; i < n; ++i) {
        data_[i * 4 + 0] = color.data()[i * 3 + 0];
        data_[i * 4 + 1] = color.data()[i * 3 + 1];
        data_[i * 4 + 2] = color.data()[i * 3 + 2];
        data_[i * 4 + 3] = alpha.data()[i];
    }
}

RasterImage Layer::color() const {
    RasterImage out(width_, height_);
    const size_t n = static_cast<size_t>(width_) * height_;
    for (size_t i = 0; i < n; ++i) {
        out.data()[i * 3 + 0] = data_[i * 4 + 0];
        out.data()[i * 3 + 1] = data_[i * 4 + 1];
        out.data()[i * 3 + 2] = data_[i * 4 + 2];
    }
    return out;
}

Plane Layer::alpha() const {
    Plane out(width_, height_);
    const size_t n = static_cast<size_t>(width_) * height_;
    for (size_t i = 0; i < n; ++i) out.data()[i] = data_[i * 4 + 3];
    return out;
}

std::vector<std::string> validate(const LayerSequence& seq) {
    if (seq.layers.empty())
        throw std::invalid_argument("layer sequence is empty");
    if (seq.canvas_width < 1 || seq.canvas_height < 1)
        throw std::invalid_argument("layer sequence canvas is degenerate");
    for (size_t k = 0; k < seq.layers.size(); ++k) {
        const Layer& l = seq.layers[k];
        if (l.width() != seq.canvas_width || l.height() != seq.canvas_height)
            throw std::invalid_argument("layer " + std::to_string(k) +
                                        " does not match canvas dimensions");
        for (float v : l.data()) {
            if (!(v >= 0.0f && v <= 1.0f))
                throw std::invalid_argument("layer " + std::to_string(k) +
                                            " has samples outside [0,1]");
        }
    }
    std::vector<std::string> warnings;
    const Layer& back = seq.layers[0];
    for (int y = 0; y < back.height(); ++y) {
        bool translucent = false;
        for (int x = 0; x < back.width(); ++x) {
            if (back.alpha_at(x, y) < 1.0f) {
                warnings.push_back("background layer is not fully opaque");
                translucent = true;
                break;
            }
        }
        if (translucent) break;
    }
    return warnings;
}

RasterImage blend(const Layer& layer, const RasterImage& backdrop) {
    if (layer.width() != backdrop.width() || layer.height() != backdrop.height())
        throw std::invalid_argument("blend: layer/backdrop dimensions differ");
    RasterImage out(backdrop.width(), backdrop.height());
    const size_t n = static_cast<size_t>(backdrop.width()) * backdrop.height();
    const auto& l = layer.data();
    const auto& b = backdrop.data();
    auto& o = out.data();
    for (size_t i = 0; i < n; ++i) {
        const double a = l[i * 4 + 3];
        for (int c = 0; c < 3; ++c) {
            const double v = l[i * 4 + c] * a + b[i * 3 + c] * (1.0 - a);
            o[i * 3 + c] = clamp01(v);
        }
    }
    return out;
}

RasterImage composite(const LayerSequence& seq) {
    if (seq.layers.empty())
        throw std::invalid_argument("composite: empty sequence");
    RasterImage out = seq.layers[0].color();
    for (size_t k = 1; k < seq.layers.size(); ++k)
        out = blend(seq.layers[k], out);
    return out;
}

RasterImage unblend(const RasterImage& composited, const RasterImage& backdrop,
                    const Plane& alpha) {
    if (!composited.same_size(backdrop) ||
        composited.width() != alpha.width() ||
        composited.height() != alpha.height())
        throw std::invalid_argument("unblend: input dimensions differ");
    RasterImage out(composited.width(), composited.height());
    const size_t n = static_cast<size_t>(composited.width()) * composited.height();
    const auto& x = composited.data();
    const auto& b = backdrop.data();
    const auto& a = alpha.data();
    auto& o = out.data();
    for (size_t i = 0; i < n; ++i) {
        const double av = a[i];
        if (av < kAlphaEpsilon) {
            o[i * 3 + 0] = o[i * 3 + 1] = o[i * 3 + 2] = 0.0f;
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            const double v = (x[i * 3 + c] - b[i * 3 + c] * (1.0 - av)) / av;
            o[i * 3 + c] = clamp01(v);
        }
    }
    return out;
}

Layer alpha_composite(const Layer& top, const Layer& bottom) {
    if (top.width() != bottom.width() || top.height() != bottom.height())
        throw std::invalid_argument("alpha_composite: dimensions differ");
    Layer out(top.width(), top.height());
    const size_t n = static_cast<size_t>(top.width()) * top.height();
    const auto& t = top.data();
    const auto& b = bottom.data();
    auto& o = out.data();
    for (size_t i = 0; i < n; ++i) {
        const double at = t[i * 4 + 3];
        const double ab = b[i * 4 + 3];
        if (at == 0.0) {
            for (int c = 0; c < 4; ++c) o[i * 4 + c] = b[i * 4 + c];
            continue;
        }
        const double wb = ab * (1.0 - at);
        if (wb == 0.0) {
            for (int c = 0; c < 4; ++c) o[i * 4 + c] = t[i * 4 + c];
            continue;
        }
        const double ao = at + wb;
        for (int c = 0; c < 3; ++c) {
            const double v = (t[i * 4 + c] * at + b[i * 4 + c] * wb) / ao;
            o[i * 4 + c] = clamp01(v);
        }
        o[i * 4 + 3] = clamp01(ao);
    }
    return out;
}

Mask dilate(const Mask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate: negative radius");
    if (radius == 0) return mask;
    const int w = mask.width();
    const int h = mask.height();
    Mask horiz(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w - 1, x + radius);
            for (int xx = x0; xx <= x1; ++xx) horiz.at(xx, y) = 1;
        }
    }
    Mask out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!horiz.at(x, y)) continue;
            const int y0 = std::max(0, y - radius);
            const int y1 = std::min(h - 1, y + radius);
            for (int yy = y0; yy <= y1; ++yy) out.at(x, yy) = 1;
        }
    }
    return out;
}

}  // namespace layerkit
