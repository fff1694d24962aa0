#include "layerkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace layerkit {

namespace {

void check_pair(const Plane& pred, const Plane& target) {
    if (!pred.same_size(target))
        throw std::invalid_argument("loss: plane dimensions differ");
    if (pred.pixel_count() == 0)
        throw std::invalid_argument("loss: empty planes");
}

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(window);
    const double center = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double d = i - center;
        k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable convolution with zero padding, same size as input.
std::vector<double> conv_gauss(const std::vector<double>& src, int w, int h,
                               const std::vector<double>& kernel) {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<double> tmp(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) {
                const int xx = x + t;
                if (xx < 0 || xx >= w) continue;
                acc += kernel[t + r] * src[static_cast<size_t>(y) * w + xx];
            }
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    std::vector<double> out(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) {
                const int yy = y + t;
                if (yy < 0 || yy >= h) continue;
                acc += kernel[t + r] * tmp[static_cast<size_t>(yy) * w + x];
            }
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double loss_bce(const Plane& pred, const Plane& target) {
    check_pair(pred, target);
    double acc = 0.0;
    for (size_t i = 0; i < pred.data().size(); ++i) {
        const double p = std::min(1.0 - kBceEpsilon,
                                  std::max(kBceEpsilon,
                                           static_cast<double>(pred[i])));
        const double g = target[i];
        acc += -(g * std::log(p) + (1.0 - g) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(pred.data().size());
}

double loss_iou(const Plane& pred, const Plane& target) {
    check_pair(pred, target);
    double inter = 0.0;
    double uni = 0.0;
    for (size_t i = 0; i < pred.data().size(); ++i) {
        const double p = pred[i];
        const double g = target[i];
        inter += p * g;
        uni += p + g - p * g;
    }
    if (uni <= 0.0) return 0.0;
    return 1.0 - inter / uni;
}

double loss_ssim(const Plane& pred, const Plane& target,
                 const LossConfig& config) {
    check_pair(pred, target);
    if (config.ssim_window < 1 || config.ssim_window % 2 == 0)
        throw std::invalid_argument("loss_ssim: window must be odd");
    const int w = pred.width();
    const int h = pred.height();
    const auto kernel = gaussian_kernel(config.ssim_window, config.ssim_sigma);

    const size_t n = pred.data().size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        x[i] = pred[i];
        y[i] = target[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = conv_gauss(x, w, h, kernel);
    const auto mu_y = conv_gauss(y, w, h, kernel);
    const auto m_xx = conv_gauss(xx, w, h, kernel);
    const auto m_yy = conv_gauss(yy, w, h, kernel);
    const auto m_xy = conv_gauss(xy, w, h, kernel);

    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = m_yy[i] - mu_y[i] * mu_y[i];
        const double cov = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + config.ssim_c1) *
                           (2.0 * cov + config.ssim_c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] +
                            config.ssim_c1) *
                           (var_x + var_y + config.ssim_c2);
        acc += num / den;
    }
    return 1.0 - acc / static_cast<double>(n);
}

double loss_total(const Plane& pred, const Plane& target,
                  const LossConfig& config) {
    return config.bce_weight * loss_bce(pred, target) +
           config.iou_weight * loss_iou(pred, target) +
           config.ssim_weight * loss_ssim(pred, target, config);
}

}  // namespace layerkit
