#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "layerkit/raster.hpp"

using namespace layerkit;

namespace {

std::mt19937_64 rng_for(uint64_t seed) { return std::mt19937_64(seed); }

float unit_float(std::mt19937_64& rng) {
    return static_cast<float>((rng() >> 11) * 0x1.0p-53);
}

RasterImage random_image(std::mt19937_64& rng, int w, int h) {
    RasterImage img(w, h);
    for (float& v : img.data()) v = unit_float(rng);
    return img;
}

Plane random_plane(std::mt19937_64& rng, int w, int h) {
    Plane p(w, h);
    for (float& v : p.data()) v = unit_float(rng);
    return p;
}

Layer random_layer(std::mt19937_64& rng, int w, int h) {
    return Layer(random_image(rng, w, h), random_plane(rng, w, h));
}

// Independent straight-alpha compositor: front-to-back transmittance
// accumulation in doubles, layer 0 treated as opaque.
RasterImage reference_composite(const LayerSequence& seq) {
    const int w = seq.canvas_width, h = seq.canvas_height;
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                double transmit = 1.0;
                for (int k = static_cast<int>(seq.layers.size()) - 1; k >= 0;
                     --k) {
                    double a = k == 0 ? 1.0 : seq.layers[k].at(x, y, 3);
                    acc += transmit * a * seq.layers[k].at(x, y, c);
                    transmit *= 1.0 - a;
                }
                out.at(x, y, c) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("blend matches the straight-alpha formula") {
    auto rng = rng_for(1);
    Layer layer = random_layer(rng, 9, 7);
    RasterImage backdrop = random_image(rng, 9, 7);
    RasterImage out = blend(layer, backdrop);
    for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 9; ++x) {
            double a = layer.at(x, y, 3);
            for (int c = 0; c < 3; ++c) {
                double want = layer.at(x, y, c) * a + backdrop.at(x, y, c) * (1 - a);
                CHECK(out.at(x, y, c) == doctest::Approx(want).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("blend with zero alpha returns the backdrop bit-exactly") {
    auto rng = rng_for(2);
    RasterImage backdrop = random_image(rng, 8, 8);
    Layer clear(random_image(rng, 8, 8), Plane(8, 8, 0.0f));
    RasterImage out = blend(clear, backdrop);
    CHECK(out.data() == backdrop.data());
}

TEST_CASE("composite equals transmittance accumulation") {
    auto rng = rng_for(3);
    for (int trial = 0; trial < 20; ++trial) {
        LayerSequence seq;
        seq.canvas_width = 6;
        seq.canvas_height = 5;
        int count = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < count; ++i)
            seq.layers.push_back(random_layer(rng, 6, 5));
        RasterImage got = composite(seq);
        RasterImage want = reference_composite(seq);
        for (size_t i = 0; i < got.data().size(); ++i)
            CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-5));
    }
}

TEST_CASE("composite treats layer 0 as opaque") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 2;
    RasterImage color(2, 2, 0.75f);
    seq.layers.emplace_back(color, Plane(2, 2, 0.0f));  // alpha ignored
    RasterImage out = composite(seq);
    for (float v : out.data()) CHECK(v == 0.75f);
}

TEST_CASE("unblend inverts blend where alpha is workable") {
    auto rng = rng_for(4);
    for (int trial = 0; trial < 50; ++trial) {
        Layer layer = random_layer(rng, 16, 16);
        RasterImage backdrop = random_image(rng, 16, 16);
        RasterImage x = blend(layer, backdrop);
        Plane alpha = layer.alpha();
        RasterImage fg = unblend(x, backdrop, alpha);
        RasterImage x2 = blend(Layer(fg, alpha), backdrop);
        for (int y = 0; y < 16; ++y) {
            for (int x_ = 0; x_ < 16; ++x_) {
                if (alpha.at(x_, y) < kAlphaEpsilon) continue;
                for (int c = 0; c < 3; ++c)
                    CHECK(std::abs(x2.at(x_, y, c) - x.at(x_, y, c)) <= 1e-6f);
            }
        }
    }
}

TEST_CASE("unblend defines vanishing-alpha foreground as zero") {
    RasterImage x(2, 2, 0.5f);
    RasterImage backdrop(2, 2, 0.25f);
    Plane alpha(2, 2, 0.5f * kAlphaEpsilon);
    RasterImage fg = unblend(x, backdrop, alpha);
    for (int c = 0; c < 3; ++c) CHECK(fg.at(0, 0, c) == 0.0f);
}

TEST_CASE("unblend clamps out-of-range solutions") {
    RasterImage x(1, 1, 1.0f);
    RasterImage backdrop(1, 1, 0.0f);
    Plane alpha(1, 1, 0.25f);
    // true fg would be 4.0
    RasterImage fg = unblend(x, backdrop, alpha);
    for (int c = 0; c < 3; ++c) CHECK(fg.at(0, 0, c) == 1.0f);
}

TEST_CASE("alpha_composite passes disjoint supports through bit-exactly") {
    auto rng = rng_for(5);
    Layer top(8, 8), bottom(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            bool left = x < 4;
            Layer& owner = left ? bottom : top;
            owner.at(x, y, 0) = unit_float(rng);
            owner.at(x, y, 1) = unit_float(rng);
            owner.at(x, y, 2) = unit_float(rng);
            owner.at(x, y, 3) = 0.1f + 0.9f * unit_float(rng);
        }
    }
    Layer merged = alpha_composite(top, bottom);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            const Layer& owner = x < 4 ? bottom : top;
            for (int c = 0; c < 4; ++c)
                CHECK(merged.at(x, y, c) == owner.at(x, y, c));
        }
    }
}

TEST_CASE("alpha_composite matches the over operator on overlaps") {
    auto rng = rng_for(6);
    for (int trial = 0; trial < 30; ++trial) {
        Layer top = random_layer(rng, 4, 4);
        Layer bottom = random_layer(rng, 4, 4);
        Layer merged = alpha_composite(top, bottom);
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) {
                double at = top.at(x, y, 3), ab = bottom.at(x, y, 3);
                double ao = at + ab * (1 - at);
                CHECK(merged.at(x, y, 3) == doctest::Approx(ao).epsilon(1e-6));
                if (ao <= 0) continue;
                for (int c = 0; c < 3; ++c) {
                    double want = (top.at(x, y, c) * at +
                                   bottom.at(x, y, c) * ab * (1 - at)) /
                                  ao;
                    CHECK(merged.at(x, y, c) ==
                          doctest::Approx(want).epsilon(1e-5));
                }
            }
        }
    }
}

TEST_CASE("blending a merged pair equals blending both layers in order") {
    auto rng = rng_for(7);
    for (int trial = 0; trial < 30; ++trial) {
        Layer top = random_layer(rng, 4, 4);
        Layer bottom = random_layer(rng, 4, 4);
        RasterImage backdrop = random_image(rng, 4, 4);
        RasterImage sequential = blend(top, blend(bottom, backdrop));
        RasterImage merged = blend(alpha_composite(top, bottom), backdrop);
        for (size_t i = 0; i < merged.data().size(); ++i)
            CHECK(merged.data()[i] ==
                  doctest::Approx(sequential.data()[i]).epsilon(2e-5));
    }
}

TEST_CASE("fully transparent layers never change the composite") {
    auto rng = rng_for(8);
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 8;
    seq.layers.push_back(random_layer(rng, 8, 8));
    seq.layers.push_back(random_layer(rng, 8, 8));
    RasterImage before = composite(seq);
    seq.layers.insert(seq.layers.begin() + 1,
                      Layer(random_image(rng, 8, 8), Plane(8, 8, 0.0f)));
    RasterImage after = composite(seq);
    CHECK(before.data() == after.data());
}

TEST_CASE("validate rejects mismatched dimensions and bad ranges") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 4;
    seq.layers.emplace_back(RasterImage(4, 4, 0.5f), Plane(4, 4, 1.0f));
    CHECK(validate(seq).empty());

    LayerSequence wrong = seq;
    wrong.layers.emplace_back(RasterImage(3, 4, 0.5f), Plane(3, 4, 1.0f));
    CHECK_THROWS_AS(validate(wrong), std::invalid_argument);

    LayerSequence nan_seq = seq;
    nan_seq.layers[0].at(0, 0, 1) = 1.5f;
    CHECK_THROWS_AS(validate(nan_seq), std::invalid_argument);

    LayerSequence empty;
    CHECK_THROWS_AS(validate(empty), std::invalid_argument);
}

TEST_CASE("validate warns about a translucent background") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 4;
    seq.layers.emplace_back(RasterImage(4, 4, 0.5f), Plane(4, 4, 0.5f));
    auto warnings = validate(seq);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("background") != std::string::npos);
}

TEST_CASE("dilate grows a point into a square") {
    Mask m(9, 9, 0);
    m.at(4, 4) = 1;
    Mask grown = dilate(m, 3);
    CHECK(grown.count_set() == 49);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x)
            CHECK(grown.at(x, y) ==
                  (std::abs(x - 4) <= 3 && std::abs(y - 4) <= 3 ? 1 : 0));
}

TEST_CASE("dilate clips at the border and radius zero is identity") {
    Mask m(5, 5, 0);
    m.at(0, 0) = 1;
    CHECK(dilate(m, 2).count_set() == 9);
    CHECK(dilate(m, 0).data() == m.data());
}

}  // TEST_SUITE
