#include "layerkit/color.hpp"

#include <algorithm>
#include <cmath>

namespace layerkit {

namespace {

constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;
constexpr double kDelta = 6.0 / 29.0;

double linearize(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double delinearize(double c) {
    return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
    return t > kDelta * kDelta * kDelta
               ? std::cbrt(t)
               : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

}  // namespace

LabColor srgb_to_lab(const std::array<float, 3>& rgb) {
    const double r = linearize(rgb[0]);
    const double g = linearize(rgb[1]);
    const double b = linearize(rgb[2]);
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / kXn);
    const double fy = lab_f(y / kYn);
    const double fz = lab_f(z / kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<float, 3> lab_to_srgb(const LabColor& lab) {
    const double fy = (lab.L + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const double x = kXn * lab_f_inv(fx);
    const double y = kYn * lab_f_inv(fy);
    const double z = kZn * lab_f_inv(fz);
    const double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    const double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    const double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    auto to_unit = [](double c) {
        return static_cast<float>(
            std::min(1.0, std::max(0.0, delinearize(c))));
    };
    return {to_unit(r), to_unit(g), to_unit(b)};
}

double delta_e(const LabColor& a, const LabColor& b) {
    const double dl = a.L - b.L;
    const double da = a.a - b.a;
    const double db = a.b - b.b;
    return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace layerkit
