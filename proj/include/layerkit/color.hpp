#pragma once

#include <array>

namespace layerkit {

/// CIE L*a*b* color, D65 white point.
struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Converts a unit-interval sRGB triple to Lab (standard sRGB linearization,
/// D65 reference white).
LabColor srgb_to_lab(const std::array<float, 3>& rgb);

/// Inverse conversion; out-of-gamut results are clamped to [0,1].
std::array<float, 3> lab_to_srgb(const LabColor& lab);

/// Euclidean distance in Lab.
double delta_e(const LabColor& a, const LabColor& b);

}  // namespace layerkit
