#pragma once

#include "layerkit/raster.hpp"

namespace layerkit {

struct LossConfig {
    double bce_weight = 1.0;
    double iou_weight = 1.0;
    double ssim_weight = 1.0;
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_c1 = 0.01 * 0.01;
    double ssim_c2 = 0.03 * 0.03;
};

/// Predictions are clamped to [kBceEpsilon, 1 - kBceEpsilon] before the log.
inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross entropy between a predicted and target alpha plane.
double loss_bce(const Plane& pred, const Plane& target);

/// 1 - sum(pred*target) / sum(pred + target - pred*target); 0 when the
/// union is empty.
double loss_iou(const Plane& pred, const Plane& target);

/// 1 - mean structural similarity over Gaussian-weighted windows centered on
/// every pixel (zero padding at the borders).
double loss_ssim(const Plane& pred, const Plane& target,
                 const LossConfig& config = {});

/// Weighted sum of the three terms.
double loss_total(const Plane& pred, const Plane& target,
                  const LossConfig& config = {});

}  // namespace layerkit
