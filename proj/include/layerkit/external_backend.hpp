#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerkit/backend.hpp"
#include "layerkit/raster.hpp"

namespace layerkit {

/// Wire protocol for external backends, little-endian throughout:
///   bytes 0..3   magic "LDBK"
///   byte  4      version (1)
///   byte  5      mode (1 = matting, 2 = inpainting)
///   bytes 6..9   width  (u32)
///   bytes 10..13 height (u32)
///   bytes 14..15 reserved (0)
/// The request payload is the row-major 8-bit RGBA image, followed by a
/// row-major 8-bit mask (0 or 255) for inpainting. The response carries the
/// same header followed by an 8-bit alpha plane (matting) or an 8-bit RGB
/// image (inpainting).
namespace ldbk {
inline constexpr char kMagic[4] = {'L', 'D', 'B', 'K'};
inline constexpr uint8_t kVersion = 1;
inline constexpr uint8_t kModeMatting = 1;
inline constexpr uint8_t kModeInpainting = 2;
inline constexpr size_t kHeaderSize = 16;

std::vector<uint8_t> make_header(uint8_t mode, uint32_t width,
                                 uint32_t height);
/// Parses and checks a header; returns the mode. Throws BackendError with
/// kind malformed_output on any mismatch.
uint8_t parse_header(const std::vector<uint8_t>& bytes, uint32_t expect_width,
                     uint32_t expect_height);
}  // namespace ldbk

struct ExternalBackendConfig {
    std::string executable;
    std::vector<std::string> args;
    double timeout_seconds = 30.0;
};

/// Runs one subprocess per call, feeding the request on stdin and reading the
/// full response from stdout. Timeouts, nonzero exits, and malformed replies
/// surface as BackendError with distinct kinds.
class ExternalMatting : public MattingBackend {
public:
    explicit ExternalMatting(ExternalBackendConfig config);
    AlphaMap matte(const RasterImage& image) override;

private:
    ExternalBackendConfig config_;
};

class ExternalInpainting : public InpaintingBackend {
public:
    explicit ExternalInpainting(ExternalBackendConfig config);
    RasterImage inpaint(const RasterImage& image, const Mask& mask) override;

private:
    ExternalBackendConfig config_;
};

/// Feeds input to a child process and collects stdout, enforcing a deadline.
std::vector<uint8_t> run_subprocess(const ExternalBackendConfig& config,
                                    const std::vector<uint8_t>& input);

}  // namespace layerkit
