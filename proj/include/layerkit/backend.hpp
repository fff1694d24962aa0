#pragma once

#include <stdexcept>
#include <string>

#include "layerkit/raster.hpp"

namespace layerkit {

class BackendError : public std::runtime_error {
public:
    enum class Kind {
        spawn_failure,
        timeout,
        exit_status,
        malformed_output,
        contract,
    };

    BackendError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Produces an alpha matte for the frontmost salient content of an image.
/// Implementations must return a plane of the input dimensions with values
/// in [0,1] and may keep internal state across calls.
class MattingBackend {
public:
    virtual ~MattingBackend() = default;
    virtual AlphaMap matte(const RasterImage& image) = 0;

    /// Whether concurrent matte() calls from multiple threads are allowed.
    virtual bool concurrency_safe() const { return false; }
};

/// Fills masked pixels from their surroundings. Pixels outside the mask must
/// be returned unchanged.
class InpaintingBackend {
public:
    virtual ~InpaintingBackend() = default;
    virtual RasterImage inpaint(const RasterImage& image, const Mask& mask) = 0;

    virtual bool concurrency_safe() const { return false; }
};

}  // namespace layerkit
