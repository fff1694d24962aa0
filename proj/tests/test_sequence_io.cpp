#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "layerkit/png_io.hpp"
#include "layerkit/sequence_io.hpp"

using namespace layerkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("layerkit_seq_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

LayerSequence random_sequence(uint64_t seed, int layers, int w = 12, int h = 9) {
    std::mt19937_64 rng(seed);
    LayerSequence seq;
    seq.canvas_width = w;
    seq.canvas_height = h;
    for (int i = 0; i < layers; ++i) {
        Layer layer(w, h);
        for (float& v : layer.data())
            v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
        if (i == 0)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) layer.at(x, y, 3) = 1.0f;
        seq.layers.push_back(std::move(layer));
    }
    return seq;
}

SequenceIoError::Code code_of(const fs::path& dir) {
    try {
        read_sequence(dir);
    } catch (const SequenceIoError& e) {
        return e.code();
    }
    FAIL("expected a SequenceIoError");
    return SequenceIoError::Code::bad_manifest;
}

}  // namespace

TEST_SUITE("sequence_io") {

TEST_CASE("write then read round-trips within 8-bit precision") {
    TempDir tmp;
    LayerSequence seq = random_sequence(21, 3);
    SequenceMeta meta;
    meta.generator = std::string("test");
    meta.seed = 77;
    meta.layer_names = {std::string("background"), std::string("a"),
                        std::string("b")};
    write_sequence(seq, tmp.path, meta);

    SequenceMeta got_meta;
    LayerSequence got = read_sequence(tmp.path, &got_meta);
    CHECK(got.canvas_width == seq.canvas_width);
    CHECK(got.canvas_height == seq.canvas_height);
    REQUIRE(got.layers.size() == seq.layers.size());
    for (size_t i = 0; i < got.layers.size(); ++i)
        for (size_t j = 0; j < got.layers[i].data().size(); ++j)
            CHECK(std::abs(got.layers[i].data()[j] - seq.layers[i].data()[j]) <=
                  0.5f / 255.0f + 1e-6f);
    CHECK(got_meta.generator == meta.generator);
    CHECK(got_meta.seed == meta.seed);
    REQUIRE(got_meta.layer_names.size() == 3);
    CHECK(*got_meta.layer_names[1] == "a");
}

TEST_CASE("quantize8 rounds to nearest and saturates") {
    CHECK(quantize8(0.0f) == 0);
    CHECK(quantize8(1.0f) == 255);
    CHECK(quantize8(-0.5f) == 0);
    CHECK(quantize8(1.5f) == 255);
    CHECK(quantize8(0.5f / 255.0f) == 1);  // banker's boundary rounds up
    CHECK(quantize8(127.4f / 255.0f) == 127);
}

TEST_CASE("exact 8-bit values survive a round trip bit-for-bit") {
    TempDir tmp;
    LayerSequence seq = random_sequence(22, 2);
    for (Layer& layer : seq.layers)
        for (float& v : layer.data())
            v = static_cast<float>(quantize8(v)) / 255.0f;
    write_sequence(seq, tmp.path);
    LayerSequence got = read_sequence(tmp.path);
    for (size_t i = 0; i < got.layers.size(); ++i)
        CHECK(got.layers[i].data() == seq.layers[i].data());
}

TEST_CASE("missing manifest is its own failure code") {
    TempDir tmp;
    CHECK(code_of(tmp.path) == SequenceIoError::Code::missing_manifest);
}

TEST_CASE("unparseable manifest reports bad_manifest") {
    TempDir tmp;
    std::ofstream(tmp.path / "manifest.json") << "{ not json";
    CHECK(code_of(tmp.path) == SequenceIoError::Code::bad_manifest);
}

TEST_CASE("non-contiguous z indices report bad_manifest") {
    TempDir tmp;
    LayerSequence seq = random_sequence(23, 2);
    write_sequence(seq, tmp.path);
    // rewrite z: 0 -> 0, 1 -> 2
    std::ifstream in(tmp.path / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("\"z\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "\"z\": 2");
    std::ofstream(tmp.path / "manifest.json", std::ios::trunc) << text;
    CHECK(code_of(tmp.path) == SequenceIoError::Code::bad_manifest);
}

TEST_CASE("layers are ordered by manifest z, not file name") {
    TempDir tmp;
    LayerSequence seq = random_sequence(24, 2);
    write_sequence(seq, tmp.path);
    // Swap which file each z entry points at; the reader must follow z.
    std::ifstream in(tmp.path / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    size_t f0 = text.find("layer_0.png");
    size_t f1 = text.find("layer_1.png");
    REQUIRE(f0 != std::string::npos);
    REQUIRE(f1 != std::string::npos);
    text.replace(f1, 11, "layer_X.png");
    text.replace(f0, 11, "layer_1.png");
    f1 = text.find("layer_X.png");
    text.replace(f1, 11, "layer_0.png");
    std::ofstream(tmp.path / "manifest.json", std::ios::trunc) << text;

    LayerSequence swapped = read_sequence(tmp.path);
    LayerSequence original = random_sequence(24, 2);
    // z=0 now points at the file that held layer 1
    Rgba8Image file1 = read_png(tmp.path / "layer_1.png");
    Layer expected0 =
        layer_from_rgba8(file1.pixels, file1.width, file1.height);
    CHECK(swapped.layers[0].data() == expected0.data());
}

TEST_CASE("a listed file that is absent reports layer_count_mismatch") {
    TempDir tmp;
    write_sequence(random_sequence(25, 2), tmp.path);
    fs::remove(tmp.path / "layer_1.png");
    CHECK(code_of(tmp.path) == SequenceIoError::Code::layer_count_mismatch);
}

TEST_CASE("a truncated png reports corrupt_image") {
    TempDir tmp;
    write_sequence(random_sequence(26, 2), tmp.path);
    auto size = fs::file_size(tmp.path / "layer_1.png");
    fs::resize_file(tmp.path / "layer_1.png", size / 2);
    CHECK(code_of(tmp.path) == SequenceIoError::Code::corrupt_image);
}

TEST_CASE("a layer whose size disagrees with the canvas reports canvas_mismatch") {
    TempDir tmp;
    write_sequence(random_sequence(27, 2), tmp.path);
    LayerSequence other = random_sequence(27, 1, 5, 5);
    Rgba8Image small;
    small.width = 5;
    small.height = 5;
    small.pixels = layer_to_rgba8(other.layers[0]);
    write_png(tmp.path / "layer_1.png", small);
    CHECK(code_of(tmp.path) == SequenceIoError::Code::canvas_mismatch);
}

TEST_CASE("write refuses an invalid sequence") {
    TempDir tmp;
    LayerSequence bad;
    bad.canvas_width = bad.canvas_height = 4;
    CHECK_THROWS_AS(write_sequence(bad, tmp.path), std::invalid_argument);
}

}  // TEST_SUITE
