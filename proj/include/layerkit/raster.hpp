#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace layerkit {

/// Below this alpha, unblended foreground color is defined as 0 instead of
/// dividing by a vanishing alpha.
inline constexpr float kAlphaEpsilon = 1.0f / 255.0f;

/// Single-channel float plane, row-major, values nominally in [0,1].
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int pixel_count() const { return width_ * height_; }

    float& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_size(const Plane& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

using AlphaMap = Plane;

/// Binary mask, row-major, 0 or 1 per pixel.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, uint8_t fill = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    int pixel_count() const { return width_ * height_; }

    uint8_t& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    uint8_t at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    uint8_t& operator[](size_t i) { return data_[i]; }
    uint8_t operator[](size_t i) const { return data_[i]; }

    std::vector<uint8_t>& data() { return data_; }
    const std::vector<uint8_t>& data() const { return data_; }

    int count_set() const;
    bool empty() const { return count_set() == 0; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> data_;
};

/// RGB raster, interleaved, unit-interval floats.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int pixel_count() const { return width_ * height_; }

    float& at(int x, int y, int c) {
        return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
    }
    float at(int x, int y, int c) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
    }

    std::array<float, 3> pixel(int x, int y) const {
        const size_t i = (static_cast<size_t>(y) * width_ + x) * 3;
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set_pixel(int x, int y, const std::array<float, 3>& rgb) {
        const size_t i = (static_cast<size_t>(y) * width_ + x) * 3;
        data_[i] = rgb[0];
        data_[i + 1] = rgb[1];
        data_[i + 2] = rgb[2];
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_size(const RasterImage& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// RGBA raster layer, interleaved, unit-interval floats, straight alpha.
class Layer {
public:
    Layer() = default;
    Layer(int width, int height);
    Layer(RasterImage color, Plane alpha);

    int width() const { return width_; }
    int height() const { return height_; }

    float& at(int x, int y, int c) {
        return data_[(static_cast<size_t>(y) * width_ + x) * 4 + c];
    }
    float at(int x, int y, int c) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * 4 + c];
    }
    float alpha_at(int x, int y) const { return at(x, y, 3); }

    RasterImage color() const;
    Plane alpha() const;

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Ordered layers, back (index 0) to front, sharing canvas dimensions.
struct LayerSequence {
    int canvas_width = 0;
    int canvas_height = 0;
    std::vector<Layer> layers;

    size_t size() const { return layers.size(); }
};

/// Checks hard invariants (throws std::invalid_argument) and returns warnings,
/// e.g. a background layer that is not fully opaque.
std::vector<std::string> validate(const LayerSequence& seq);

/// out = layer.rgb * layer.a + backdrop * (1 - layer.a), clamped to [0,1].
RasterImage blend(const Layer& layer, const RasterImage& backdrop);

/// Folds blend over the sequence; layer 0's alpha is treated as fully opaque.
RasterImage composite(const LayerSequence& seq);

/// Inverts blend: fg = (x - bg*(1-a)) / a where a >= kAlphaEpsilon, 0 below.
/// Result clamped to [0,1].
RasterImage unblend(const RasterImage& composited, const RasterImage& backdrop,
                    const Plane& alpha);

/// Straight-alpha "over" of two layers. Pixels covered by only one input pass
/// through bit-exact, so merging layers with disjoint supports is lossless.
Layer alpha_composite(const Layer& top, const Layer& bottom);

/// Square (Chebyshev) dilation by the given radius.
Mask dilate(const Mask& mask, int radius);

}  // namespace layerkit
