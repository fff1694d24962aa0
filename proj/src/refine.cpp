#include "layerkit/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace layerkit {

namespace {

// Largest per-channel gap between a rim pixel and its fitted two-color mix
// before the fit is rejected: two 8-bit quantization steps, so genuine
// coverage mixes survive file roundtrips while off-line colors do not.
constexpr float kMixResidualLimit = 2.0f / 255.0f;

std::vector<ConnectedRegion> label_components(int width, int height,
                                              const std::vector<char>& in_set) {
    std::vector<ConnectedRegion> regions;
    std::vector<char> visited(in_set.size(), 0);
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(in_set.size()); ++start) {
        if (!in_set[start] || visited[start]) continue;
        ConnectedRegion region;
        region.min_x = region.max_x = start % width;
        region.min_y = region.max_y = start / width;
        stack.assign(1, start);
        visited[start] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            region.pixels.push_back(p);
            const int x = p % width;
            const int y = p / width;
            region.min_x = std::min(region.min_x, x);
            region.max_x = std::max(region.max_x, x);
            region.min_y = std::min(region.min_y, y);
            region.max_y = std::max(region.max_y, y);
            const int neighbors[4] = {x > 0 ? p - 1 : -1,
                                      x < width - 1 ? p + 1 : -1,
                                      y > 0 ? p - width : -1,
                                      y < height - 1 ? p + width : -1};
            for (int q : neighbors) {
                if (q >= 0 && in_set[q] && !visited[q]) {
                    visited[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        std::sort(region.pixels.begin(), region.pixels.end());
        regions.push_back(std::move(region));
    }
    std::sort(regions.begin(), regions.end(),
              [](const ConnectedRegion& a, const ConnectedRegion& b) {
                  if (a.pixels.size() != b.pixels.size())
                      return a.pixels.size() > b.pixels.size();
                  return a.pixels.front() < b.pixels.front();
              });
    return regions;
}

Mask region_to_mask(const ConnectedRegion& region, int width, int height) {
    Mask mask(width, height, 0);
    for (int p : region.pixels) mask[p] = 1;
    return mask;
}

}  // namespace

std::vector<ConnectedRegion> connected_components(const Plane& alpha, float cut) {
    std::vector<char> in_set(alpha.data().size());
    for (size_t i = 0; i < in_set.size(); ++i)
        in_set[i] = alpha[i] > cut ? 1 : 0;
    return label_components(alpha.width(), alpha.height(), in_set);
}

std::vector<ConnectedRegion> connected_components(const Mask& mask) {
    std::vector<char> in_set(mask.data().size());
    for (size_t i = 0; i < in_set.size(); ++i) in_set[i] = mask[i] ? 1 : 0;
    return label_components(mask.width(), mask.height(), in_set);
}

double flatness(const RasterImage& image, const std::vector<int>& region_pixels,
                const RefineConfig& config) {
    if (region_pixels.empty())
        throw std::invalid_argument("flatness: empty region");
    const int w = image.width();
    const int h = image.height();
    int flat = 0;
    for (int p : region_pixels) {
        const int x = p % w;
        const int y = p / w;
        double max_diff = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double v = image.at(x, y, c);
            if (x + 1 < w)
                max_diff = std::max(max_diff, std::abs(image.at(x + 1, y, c) - v));
            if (y + 1 < h)
                max_diff = std::max(max_diff, std::abs(image.at(x, y + 1, c) - v));
        }
        if (max_diff <= config.gradient_epsilon) ++flat;
    }
    return static_cast<double>(flat) / static_cast<double>(region_pixels.size());
}

int Palette::nearest(const LabColor& lab) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < colors.size(); ++i) {
        const double d = delta_e(lab, colors[i].lab);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Palette extract_palette(const std::vector<std::array<float, 3>>& colors,
                        int max_colors, const RefineConfig& config) {
    if (colors.empty())
        throw std::invalid_argument("extract_palette: empty color set");
    if (max_colors < 1)
        throw std::invalid_argument("extract_palette: max_colors must be >= 1");

    const double cell = std::max(config.palette_match_radius, 1e-6);
    using Cell = std::tuple<int64_t, int64_t, int64_t>;
    std::map<Cell, std::vector<int>> buckets;
    std::vector<LabColor> labs(colors.size());
    for (size_t i = 0; i < colors.size(); ++i) {
        labs[i] = srgb_to_lab(colors[i]);
        const Cell key{static_cast<int64_t>(std::floor(labs[i].L / cell)),
                       static_cast<int64_t>(std::floor(labs[i].a / cell)),
                       static_cast<int64_t>(std::floor(labs[i].b / cell))};
        buckets[key].push_back(static_cast<int>(i));
    }

    struct Cluster {
        Cell key;
        std::vector<int> members;
    };
    std::vector<Cluster> clusters;
    clusters.reserve(buckets.size());
    for (auto& [key, members] : buckets)
        clusters.push_back({key, std::move(members)});
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  if (a.members.size() != b.members.size())
                      return a.members.size() > b.members.size();
                  return a.key < b.key;
              });

    auto median_rgb = [&](const std::vector<int>& members) {
        std::array<float, 3> rep{};
        std::vector<float> channel(members.size());
        for (int c = 0; c < 3; ++c) {
            for (size_t i = 0; i < members.size(); ++i)
                channel[i] = colors[members[i]][c];
            const size_t mid = channel.size() / 2;
            std::nth_element(channel.begin(), channel.begin() + mid,
                             channel.end());
            rep[c] = channel[mid];
        }
        return rep;
    };

    Palette palette;
    const double target =
        config.percentile_coverage * static_cast<double>(colors.size());
    double covered = 0.0;
    for (const Cluster& cluster : clusters) {
        if (covered >= target) break;
        const std::array<float, 3> rep = median_rgb(cluster.members);
        const LabColor rep_lab = srgb_to_lab(rep);
        bool merged = false;
        for (PaletteEntry& entry : palette.colors) {
            if (delta_e(entry.lab, rep_lab) <= config.palette_match_radius) {
                entry.count += static_cast<int>(cluster.members.size());
                covered += static_cast<double>(cluster.members.size());
                merged = true;
                break;
            }
        }
        if (merged) continue;
        if (static_cast<int>(palette.colors.size()) >= max_colors) break;
        palette.colors.push_back(
            {rep, rep_lab, static_cast<int>(cluster.members.size())});
        covered += static_cast<double>(cluster.members.size());
    }
    return palette;
}

RasterImage refine_background(const RasterImage& completed, const Mask& mask,
                              const RefineConfig& config) {
    if (completed.width() != mask.width() || completed.height() != mask.height())
        throw std::invalid_argument("refine_background: dimensions differ");
    RasterImage out = completed;
    const int w = completed.width();
    const int h = completed.height();

    for (const ConnectedRegion& region : connected_components(mask)) {
        const Mask region_mask = region_to_mask(region, w, h);
        const Mask grown = dilate(region_mask, config.ring_width);
        std::vector<int> ring;
        for (int p = 0; p < w * h; ++p) {
            if (grown[p] && !mask[p]) ring.push_back(p);
        }
        if (ring.empty()) continue;
        if (flatness(completed, ring, config) < config.flatness_threshold)
            continue;

        std::vector<std::array<float, 3>> ring_colors;
        ring_colors.reserve(ring.size());
        for (int p : ring)
            ring_colors.push_back(completed.pixel(p % w, p / w));
        const Palette palette =
            extract_palette(ring_colors, config.bg_max_colors, config);

        for (int p : region.pixels) {
            const int x = p % w;
            const int y = p / w;
            const LabColor lab = srgb_to_lab(completed.pixel(x, y));
            out.set_pixel(x, y, palette.colors[palette.nearest(lab)].rgb);
        }
    }
    return out;
}

float boundary_alpha_least_squares(const std::array<float, 3>& x,
                                   const std::array<float, 3>& f,
                                   const std::array<float, 3>& b,
                                   float fallback) {
    double num = 0.0;
    double den = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(f[c]) - b[c];
        num += (static_cast<double>(x[c]) - b[c]) * d;
        den += d * d;
    }
    if (den < 1e-12) return fallback;
    return static_cast<float>(std::min(1.0, std::max(0.0, num / den)));
}

AlphaMap refine_foreground(const RasterImage& image, const AlphaMap& alpha,
                           const RasterImage& backdrop,
                           const RefineConfig& config) {
    if (!image.same_size(backdrop) || image.width() != alpha.width() ||
        image.height() != alpha.height())
        throw std::invalid_argument("refine_foreground: dimensions differ");
    const int w = image.width();
    const int h = image.height();
    const int n = w * h;

    // Refined values merge by max so the result does not depend on region
    // order; pixels no selected mask covers keep their original alpha (soft
    // skirts outside the mask must survive untouched).
    AlphaMap out(w, h, 0.0f);
    std::vector<char> touched(n, 0);
    const auto regions = connected_components(alpha, 0.5f);

    const RasterImage candidates = unblend(image, backdrop, alpha);
    std::vector<LabColor> image_lab(n);
    for (int p = 0; p < n; ++p)
        image_lab[p] = srgb_to_lab(image.pixel(p % w, p / w));

    auto merge_max = [&](int p, float v) {
        out[p] = touched[p] ? std::max(out[p], v) : v;
        touched[p] = 1;
    };

    for (const ConnectedRegion& region : regions) {
        if (flatness(candidates, region.pixels, config) <
            config.flatness_threshold) {
            for (int p : region.pixels) merge_max(p, alpha[p]);
            continue;
        }

        std::vector<std::array<float, 3>> region_colors;
        region_colors.reserve(region.pixels.size());
        for (int p : region.pixels)
            region_colors.push_back(candidates.pixel(p % w, p / w));
        const Palette palette =
            extract_palette(region_colors, config.fg_max_colors, config);

        std::vector<char> matched(n, 0);
        for (int p = 0; p < n; ++p) {
            for (const PaletteEntry& entry : palette.colors) {
                if (delta_e(image_lab[p], entry.lab) <=
                    config.palette_match_radius) {
                    matched[p] = 1;
                    break;
                }
            }
        }

        std::vector<char> selected(n, 0);
        for (const ConnectedRegion& comp : label_components(w, h, matched)) {
            int inside = 0;
            for (int p : comp.pixels)
                if (alpha[p] > 0.5f) ++inside;
            if (static_cast<double>(inside) >=
                config.overlap_threshold * comp.area()) {
                for (int p : comp.pixels) selected[p] = 1;
            }
        }

        // The mask interior snaps to 1; its 1-px inner rim gets a soft alpha
        // from the per-pixel least-squares fit. Pixels outside the mask are
        // left alone so a correct incoming matte passes through unchanged.
        // The rim uses the full 8-neighborhood: corner pixels on a diagonal
        // edge are coverage mixes too.
        auto touches_opposite = [&](int p) {
            const int x = p % w;
            const int y = p / w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (selected[ny * w + nx] != selected[p]) return true;
                }
            }
            return false;
        };

        for (int p = 0; p < n; ++p) {
            if (!selected[p]) continue;
            if (!touches_opposite(p)) {
                merge_max(p, 1.0f);
                continue;
            }
            const int x = p % w;
            const int y = p / w;
            const std::array<float, 3> px = image.pixel(x, y);
            const std::array<float, 3> bg = backdrop.pixel(x, y);
            const PaletteEntry& f =
                palette.colors[palette.nearest(image_lab[p])];
            const float a =
                boundary_alpha_least_squares(px, f.rgb, bg, 1.0f);
            // Accept the fit only where the foreground/backdrop line actually
            // explains the pixel. A rim pixel it cannot reconstruct is not a
            // coverage mix (a seam between two strokes, say) and keeps the
            // alpha it came in with.
            float resid = 0.0f;
            for (int c = 0; c < 3; ++c)
                resid = std::max(resid, std::abs(px[c] - (a * f.rgb[c] +
                                                          (1 - a) * bg[c])));
            merge_max(p, resid <= kMixResidualLimit ? a : alpha[p]);
        }
    }
    for (int p = 0; p < n; ++p)
        if (!touched[p]) out[p] = alpha[p];
    return out;
}

}  // namespace layerkit
