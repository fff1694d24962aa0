#include "layerkit/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "layerkit/metrics.hpp"

namespace layerkit {

namespace {

// mt19937_64 has a fully specified output sequence, and we derive values from
// it with fixed arithmetic only, so designs are reproducible across platforms.
struct Rng {
    std::mt19937_64 engine;

    explicit Rng(uint64_t seed) : engine(seed) {}

    uint32_t next_below(uint32_t n) {
        return n == 0 ? 0 : static_cast<uint32_t>(engine() % n);
    }
    // Uniform in [0, 1) with 53 random bits.
    double real() { return (engine() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * real(); }
    int irange(int lo, int hi) {
        return lo + static_cast<int>(next_below(static_cast<uint32_t>(hi - lo + 1)));
    }
    bool coin() { return next_below(2) == 1; }
};

struct Primitive {
    enum class Kind { box, ellipse, ring, segment } kind;
    // box: x0, y0, x1, y1
    // ellipse: cx, cy, rx, ry
    // ring: cx, cy, r_out, r_in
    // segment: x0, y0, x1, y1 with half-thickness in `extra`
    double a = 0, b = 0, c = 0, d = 0;
    double extra = 0;
    std::array<float, 3> color{};

    bool contains(double x, double y) const {
        switch (kind) {
            case Kind::box:
                return x >= a && x < c && y >= b && y < d;
            case Kind::ellipse: {
                double dx = (x - a) / c;
                double dy = (y - b) / d;
                return dx * dx + dy * dy <= 1.0;
            }
            case Kind::ring: {
                double dx = x - a;
                double dy = y - b;
                double r2 = dx * dx + dy * dy;
                return r2 <= c * c && r2 > d * d;
            }
            case Kind::segment: {
                double vx = c - a, vy = d - b;
                double len2 = vx * vx + vy * vy;
                double t = len2 > 0 ? ((x - a) * vx + (y - b) * vy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                double px = a + t * vx, py = b + t * vy;
                double dx = x - px, dy = y - py;
                return dx * dx + dy * dy <= extra * extra;
            }
        }
        return false;
    }
};

struct ShapePlan {
    ShapeKind kind;
    std::vector<Primitive> prims;
    // Pixel bounds covering every primitive, already clipped to the canvas.
    int px0 = 0, py0 = 0, px1 = 0, py1 = 0;
};

struct PlacedShape {
    ShapeKind kind;
    Layer layer;
    Mask support;    // alpha > 0
    Mask solid;      // alpha > 0.5
};

void grow_bounds(ShapePlan& plan, double x0, double y0, double x1, double y1,
                 int width, int height) {
    int ix0 = std::max(0, static_cast<int>(std::floor(x0)) - 1);
    int iy0 = std::max(0, static_cast<int>(std::floor(y0)) - 1);
    int ix1 = std::min(width - 1, static_cast<int>(std::ceil(x1)) + 1);
    int iy1 = std::min(height - 1, static_cast<int>(std::ceil(y1)) + 1);
    if (plan.prims.empty()) {
        plan.px0 = ix0;
        plan.py0 = iy0;
        plan.px1 = ix1;
        plan.py1 = iy1;
    } else {
        plan.px0 = std::min(plan.px0, ix0);
        plan.py0 = std::min(plan.py0, iy0);
        plan.px1 = std::max(plan.px1, ix1);
        plan.py1 = std::max(plan.py1, iy1);
    }
}

// Rasterizes with n x n subsamples per pixel; each subsample is claimed by the
// first covering primitive. A pixel covered by exactly one primitive keeps
// that primitive's color bit-for-bit.
PlacedShape rasterize(const ShapePlan& plan, int width, int height,
                      int subsamples) {
    PlacedShape out{plan.kind,
                    Layer(width, height),
                    Mask(width, height, 0),
                    Mask(width, height, 0)};
    const int n = subsamples;
    const double inv = 1.0 / n;
    const int total = n * n;
    std::vector<int> hits(plan.prims.size());
    for (int y = plan.py0; y <= plan.py1; ++y) {
        for (int x = plan.px0; x <= plan.px1; ++x) {
            std::fill(hits.begin(), hits.end(), 0);
            int covered = 0;
            for (int sy = 0; sy < n; ++sy) {
                for (int sx = 0; sx < n; ++sx) {
                    double px = x + (sx + 0.5) * inv;
                    double py = y + (sy + 0.5) * inv;
                    for (size_t i = 0; i < plan.prims.size(); ++i) {
                        if (plan.prims[i].contains(px, py)) {
                            ++hits[i];
                            ++covered;
                            break;
                        }
                    }
                }
            }
            if (covered == 0) continue;
            float alpha = static_cast<float>(covered) / static_cast<float>(total);
            std::array<float, 3> color{};
            int winners = 0;
            size_t single = 0;
            for (size_t i = 0; i < plan.prims.size(); ++i) {
                if (hits[i] > 0) {
                    ++winners;
                    single = i;
                }
            }
            if (winners == 1) {
                color = plan.prims[single].color;
            } else {
                for (size_t i = 0; i < plan.prims.size(); ++i) {
                    if (hits[i] == 0) continue;
                    double w = static_cast<double>(hits[i]) / covered;
                    for (int ch = 0; ch < 3; ++ch)
                        color[ch] += static_cast<float>(w * plan.prims[i].color[ch]);
                }
            }
            float* px = &out.layer.at(x, y, 0);
            px[0] = color[0];
            px[1] = color[1];
            px[2] = color[2];
            px[3] = alpha;
            out.support.at(x, y) = 1;
            if (alpha > 0.5f) out.solid.at(x, y) = 1;
        }
    }
    return out;
}

Mask erode(const Mask& m, int radius) {
    Mask inverted(m.width(), m.height(), 0);
    for (size_t i = 0; i < m.data().size(); ++i)
        inverted[i] = m[i] ? 0 : 1;
    Mask grown = dilate(inverted, radius);
    for (auto& v : grown.data()) v = v ? 0 : 1;
    return grown;
}

bool intersects(const Mask& a, const Mask& b) {
    for (size_t i = 0; i < a.data().size(); ++i)
        if (a[i] && b[i]) return true;
    return false;
}

bool contained_in(const Mask& inner, const Mask& outer) {
    for (size_t i = 0; i < inner.data().size(); ++i)
        if (inner[i] && !outer[i]) return false;
    return true;
}

struct Bounds {
    int x0, y0, x1, y1;  // inclusive
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
};

Bounds mask_bounds(const Mask& m) {
    Bounds b{m.width(), m.height(), -1, -1};
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            b.x0 = std::min(b.x0, x);
            b.y0 = std::min(b.y0, y);
            b.x1 = std::max(b.x1, x);
            b.y1 = std::max(b.y1, y);
        }
    }
    return b;
}

const char* kind_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::rect: return "rect";
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::ring: return "ring";
        case ShapeKind::bar: return "bar";
        case ShapeKind::glyph: return "glyph";
    }
    return "shape";
}

// Builds the primitives for one shape whose extent is roughly `size` pixels,
// centered near (cx, cy). Geometry only; the caller assigns colors.
ShapePlan plan_shape(Rng& rng, ShapeKind kind, double cx, double cy,
                     double size, int width, int height) {
    ShapePlan plan{kind, {}, 0, 0, 0, 0};
    auto add = [&](Primitive p) {
        double x0, y0, x1, y1;
        switch (p.kind) {
            case Primitive::Kind::box:
                x0 = p.a; y0 = p.b; x1 = p.c; y1 = p.d;
                break;
            case Primitive::Kind::ellipse:
                x0 = p.a - p.c; y0 = p.b - p.d; x1 = p.a + p.c; y1 = p.b + p.d;
                break;
            case Primitive::Kind::ring:
                x0 = p.a - p.c; y0 = p.b - p.c; x1 = p.a + p.c; y1 = p.b + p.c;
                break;
            case Primitive::Kind::segment:
                x0 = std::min(p.a, p.c) - p.extra;
                y0 = std::min(p.b, p.d) - p.extra;
                x1 = std::max(p.a, p.c) + p.extra;
                y1 = std::max(p.b, p.d) + p.extra;
                break;
            default:
                x0 = y0 = x1 = y1 = 0;
        }
        grow_bounds(plan, x0, y0, x1, y1, width, height);
        plan.prims.push_back(p);
    };

    switch (kind) {
        case ShapeKind::rect: {
            double w = size * rng.range(0.8, 1.2);
            double h = size * rng.range(0.8, 1.2);
            add({Primitive::Kind::box, cx - w / 2, cy - h / 2, cx + w / 2,
                 cy + h / 2, 0, {}});
            break;
        }
        case ShapeKind::ellipse: {
            double rx = size * rng.range(0.4, 0.6);
            double ry = size * rng.range(0.4, 0.6);
            add({Primitive::Kind::ellipse, cx, cy, rx, ry, 0, {}});
            break;
        }
        case ShapeKind::ring: {
            double r_out = size * rng.range(0.4, 0.55);
            double r_in = r_out * rng.range(0.5, 0.7);
            add({Primitive::Kind::ring, cx, cy, r_out, r_in, 0, {}});
            break;
        }
        case ShapeKind::bar: {
            double thickness = rng.range(3.0, 6.0);
            double length = size * rng.range(1.2, 1.8);
            if (rng.coin()) {
                add({Primitive::Kind::box, cx - length / 2, cy - thickness / 2,
                     cx + length / 2, cy + thickness / 2, 0, {}});
            } else {
                add({Primitive::Kind::box, cx - thickness / 2, cy - length / 2,
                     cx + thickness / 2, cy + length / 2, 0, {}});
            }
            break;
        }
        case ShapeKind::glyph: {
            // A few connected strokes on a coarse lattice inside the box.
            int strokes = rng.irange(2, 4);
            double half = size / 2;
            double px = cx + rng.range(-half * 0.6, half * 0.6);
            double py = cy + rng.range(-half * 0.6, half * 0.6);
            for (int s = 0; s < strokes; ++s) {
                double nx = cx + rng.range(-half, half);
                double ny = cy + rng.range(-half, half);
                double thickness = rng.range(2.5, 4.0);
                add({Primitive::Kind::segment, px, py, nx, ny, thickness / 2, {}});
                px = nx;
                py = ny;
            }
            break;
        }
    }
    return plan;
}

std::vector<std::array<float, 3>> sample_palette(Rng& rng, int count) {
    // Colors live on a coarse six-level grid, so any two distinct entries
    // differ by at least 0.2 in some channel. That keeps them apart under
    // 4/255 quantization and in Lab space.
    std::vector<std::array<float, 3>> palette;
    const float levels[6] = {0.0f, 0.2f, 0.4f, 0.6f, 0.8f, 1.0f};
    int attempts = 0;
    while (static_cast<int>(palette.size()) < count) {
        if (++attempts > 1000)
            throw GenerationError("could not sample a distinct palette");
        std::array<float, 3> candidate{levels[rng.next_below(6)],
                                       levels[rng.next_below(6)],
                                       levels[rng.next_below(6)]};
        bool ok = true;
        for (const auto& existing : palette) {
            int diff = 0;
            for (int ch = 0; ch < 3; ++ch)
                if (existing[ch] != candidate[ch]) ++diff;
            // Require two differing channels so near-misses like
            // (0,0,0.2) vs (0,0,0.4) do not end up in one design.
            if (diff < 2) {
                ok = false;
                break;
            }
        }
        if (ok) palette.push_back(candidate);
    }
    return palette;
}

Layer make_background(Rng& rng, const DesignSpec& spec,
                      const std::array<float, 3>& c0,
                      const std::array<float, 3>& c1) {
    Layer bg(spec.canvas_width, spec.canvas_height);
    auto fill = [&](int x, int y, const std::array<float, 3>& c) {
        float* px = &bg.at(x, y, 0);
        px[0] = c[0];
        px[1] = c[1];
        px[2] = c[2];
        px[3] = 1.0f;
    };
    switch (spec.background) {
        case BackgroundKind::flat:
            for (int y = 0; y < bg.height(); ++y)
                for (int x = 0; x < bg.width(); ++x) fill(x, y, c0);
            break;
        case BackgroundKind::two_tone: {
            bool vertical_split = rng.coin();
            double t = rng.range(0.3, 0.7);
            int cut = static_cast<int>(
                t * (vertical_split ? bg.width() : bg.height()));
            for (int y = 0; y < bg.height(); ++y)
                for (int x = 0; x < bg.width(); ++x)
                    fill(x, y, (vertical_split ? x : y) < cut ? c0 : c1);
            break;
        }
        case BackgroundKind::linear_gradient: {
            bool horizontal = rng.coin();
            for (int y = 0; y < bg.height(); ++y) {
                for (int x = 0; x < bg.width(); ++x) {
                    int pos = horizontal ? x : y;
                    int span = (horizontal ? bg.width() : bg.height()) - 1;
                    float t = span > 0 ? static_cast<float>(pos) / span : 0.0f;
                    std::array<float, 3> c{};
                    for (int ch = 0; ch < 3; ++ch)
                        c[ch] = c0[ch] + (c1[ch] - c0[ch]) * t;
                    fill(x, y, c);
                }
            }
            break;
        }
    }
    return bg;
}

}  // namespace

LayerSequence generate_design(const DesignSpec& spec,
                              std::vector<std::string>* names) {
    if (spec.canvas_width < 32 || spec.canvas_height < 32)
        throw std::invalid_argument("canvas must be at least 32x32");
    if (spec.min_layers < 0 || spec.max_layers < spec.min_layers)
        throw std::invalid_argument("bad layer count range");
    if (spec.shape_kinds.empty())
        throw std::invalid_argument("no shape kinds enabled");

    Rng rng(spec.seed);
    const int width = spec.canvas_width;
    const int height = spec.canvas_height;
    const double base = std::min(width, height);
    const int subsamples = spec.edge == EdgeKind::antialiased ? 4 : 1;
    const int layer_count = rng.irange(spec.min_layers, spec.max_layers);
    // Every element must stay clearly visible: a shape whose solid core is a
    // handful of pixels degenerates into edge noise under antialiasing.
    const int min_solid = std::max(16, width * height / 500);

    const int bg_colors = spec.background == BackgroundKind::flat ? 1 : 2;
    if (spec.palette_size < bg_colors + layer_count)
        throw GenerationError("palette too small for the requested layers");
    auto palette = sample_palette(rng, spec.palette_size);
    std::vector<std::array<float, 3>> pool(palette.begin() + bg_colors,
                                           palette.end());
    size_t next_color = 0;

    // Decide how many layers form one nesting chain (drawn bottom-up, each
    // inside its parent); the rest are placed apart from everything.
    int chain_len = 0;
    switch (spec.overlap_mode) {
        case OverlapMode::disjoint:
            chain_len = 0;
            break;
        case OverlapMode::stacked:
            chain_len = layer_count;
            break;
        case OverlapMode::mixed:
            chain_len = layer_count >= 2 ? rng.irange(2, std::min(layer_count, 3))
                                         : 0;
            break;
    }
    std::vector<ShapeKind> solid_kinds;
    for (ShapeKind k : spec.shape_kinds)
        if (k == ShapeKind::rect || k == ShapeKind::ellipse)
            solid_kinds.push_back(k);
    if (chain_len >= 2 && solid_kinds.empty())
        throw GenerationError(
            "nested layers need rect or ellipse shapes enabled");
    const bool has_glyph =
        std::find(spec.shape_kinds.begin(), spec.shape_kinds.end(),
                  ShapeKind::glyph) != spec.shape_kinds.end();

    auto take_colors = [&](int needed_later, bool allow_second) {
        std::vector<std::array<float, 3>> out;
        if (next_color >= pool.size())
            throw GenerationError("ran out of palette colors");
        out.push_back(pool[next_color++]);
        if (allow_second &&
            pool.size() - next_color > static_cast<size_t>(needed_later) &&
            rng.coin())
            out.push_back(pool[next_color++]);
        return out;
    };

    std::vector<PlacedShape> chain;
    std::vector<PlacedShape> loose;
    Mask occupied(width, height, 0);
    auto occupy = [&](const Mask& support) {
        // Radius 3 keeps a four-pixel gap between supports: wide enough that
        // even a dilated inpainting mask around one shape cannot reach
        // another shape's soft skirt.
        Mask grown = dilate(support, 3);
        for (size_t i = 0; i < occupied.data().size(); ++i)
            if (grown[i]) occupied[i] = 1;
    };

    // Keep the whole shape on canvas: the worst-case half extent per kind
    // plus a little slack for the soft edge.
    auto margin_for = [](ShapeKind kind, double size) {
        switch (kind) {
            case ShapeKind::bar: return size * 0.9 + 2.0;
            case ShapeKind::glyph: return size * 0.5 + 4.0;
            default: return size * 0.6 + 2.0;
        }
    };

    auto place_free = [&](const std::vector<ShapeKind>& kinds, double size_lo,
                          double size_hi,
                          const std::vector<std::array<float, 3>>& colors) {
        for (int attempt = 0; attempt < 400; ++attempt) {
            ShapeKind kind =
                kinds[rng.next_below(static_cast<uint32_t>(kinds.size()))];
            double size = rng.range(size_lo, size_hi);
            const double margin = margin_for(kind, size);
            if (width - margin <= margin || height - margin <= margin)
                continue;
            double cx = rng.range(margin, width - margin);
            double cy = rng.range(margin, height - margin);
            ShapePlan plan = plan_shape(rng, kind, cx, cy, size, width, height);
            for (size_t i = 0; i < plan.prims.size(); ++i)
                plan.prims[i].color = colors[std::min(i, colors.size() - 1)];
            PlacedShape shape = rasterize(plan, width, height, subsamples);
            if (shape.solid.count_set() < min_solid) continue;
            if (intersects(shape.support, occupied)) continue;
            occupy(shape.support);
            return shape;
        }
        throw GenerationError("could not place a free shape");
    };

    // Chain: the parent is a large solid shape, each child fits strictly
    // inside the parent's eroded interior so every overlap is a true
    // occlusion with a clean margin.
    if (chain_len >= 1) {
        bool parent_needs_interior = chain_len >= 2;
        const std::vector<ShapeKind>& parent_kinds =
            parent_needs_interior ? solid_kinds : spec.shape_kinds;
        // Deeper chains start from a larger root: every nesting level gives
        // up its rim, so the top of a length-3 chain still needs a solid core.
        double parent_lo, parent_hi;
        if (!parent_needs_interior) {
            parent_lo = 0.18;
            parent_hi = 0.3;
        } else if (chain_len == 2) {
            parent_lo = 0.46;
            parent_hi = 0.58;
        } else {
            parent_lo = 0.64;
            parent_hi = 0.76;
        }
        chain.push_back(place_free(
            parent_kinds, base * parent_lo, base * parent_hi,
            take_colors(layer_count - 1, !parent_needs_interior && has_glyph)));
        for (int depth = 1; depth < chain_len; ++depth) {
            // Radius 5: the child's grown inpainting mask plus the one-pixel
            // fill boundary must land on the parent's solid interior, well
            // clear of its soft rim.
            Mask interior = erode(chain.back().solid, 5);
            Bounds room = mask_bounds(interior);
            if (room.x1 < room.x0)
                throw GenerationError("parent shape has no interior left");
            bool more_children = depth + 1 < chain_len;
            const std::vector<ShapeKind>& kinds =
                more_children ? solid_kinds : spec.shape_kinds;
            double cap = 0.5 * std::min(room.width(), room.height());
            auto colors =
                take_colors(layer_count - static_cast<int>(chain.size()) - 1,
                            !more_children && has_glyph);
            // A shape that will host further children must leave enough core
            // after its own rim is eroded for a grandchild of viable size.
            const int host_extent = static_cast<int>(
                2.0 * std::sqrt(static_cast<double>(min_solid)) / 0.64 + 11.0);
            bool placed = false;
            for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
                ShapeKind kind =
                    kinds[rng.next_below(static_cast<uint32_t>(kinds.size()))];
                double size = cap * (more_children ? rng.range(0.78, 0.95)
                                                   : rng.range(0.6, 0.95));
                if (size < 4.0) size = 4.0;
                double cx = rng.range(room.x0 + 1.0, room.x1 + 0.0);
                double cy = rng.range(room.y0 + 1.0, room.y1 + 0.0);
                ShapePlan plan =
                    plan_shape(rng, kind, cx, cy, size, width, height);
                for (size_t i = 0; i < plan.prims.size(); ++i)
                    plan.prims[i].color = colors[std::min(i, colors.size() - 1)];
                PlacedShape shape = rasterize(plan, width, height, subsamples);
                if (shape.solid.count_set() < min_solid) continue;
                if (more_children) {
                    Bounds core = mask_bounds(shape.solid);
                    if (std::min(core.width(), core.height()) < host_extent)
                        continue;
                }
                if (!contained_in(shape.support, interior)) continue;
                chain.push_back(std::move(shape));
                placed = true;
            }
            if (!placed)
                throw GenerationError("could not nest a child shape");
        }
    }

    for (int i = chain_len; i < layer_count; ++i) {
        auto colors = take_colors(layer_count - i - 1, has_glyph);
        loose.push_back(place_free(spec.shape_kinds, base * 0.14, base * 0.24,
                                   colors));
    }

    // Bottom-to-top order: the chain keeps parent-before-child, loose shapes
    // slot in anywhere since they occlude nothing.
    std::vector<PlacedShape> ordered;
    ordered.reserve(chain.size() + loose.size());
    for (auto& s : chain) ordered.push_back(std::move(s));
    for (auto& s : loose) {
        size_t pos = rng.next_below(static_cast<uint32_t>(ordered.size() + 1));
        ordered.insert(ordered.begin() + pos, std::move(s));
    }

    LayerSequence seq;
    seq.canvas_width = width;
    seq.canvas_height = height;
    const auto& c0 = palette[0];
    const auto& c1 = palette[bg_colors > 1 ? 1 : 0];
    seq.layers.push_back(make_background(rng, spec, c0, c1));
    if (names) {
        names->clear();
        names->push_back("background");
    }
    for (auto& shape : ordered) {
        seq.layers.push_back(std::move(shape.layer));
        if (names) names->push_back(kind_name(shape.kind));
    }
    return seq;
}

std::vector<MattingPair> make_matting_pairs(const LayerSequence& seq,
                                            InpaintingBackend* inpainting) {
    std::vector<MattingPair> pairs;
    if (seq.layers.size() <= 1) return pairs;
    LayerSequence grouped = group_top_layers(seq);
    const int group_count = static_cast<int>(grouped.layers.size());

    for (int g = group_count - 1; g >= 1; --g) {
        LayerSequence remaining;
        remaining.canvas_width = grouped.canvas_width;
        remaining.canvas_height = grouped.canvas_height;
        remaining.layers.assign(grouped.layers.begin(),
                                grouped.layers.begin() + g + 1);
        MattingPair pair;
        pair.input = composite(remaining);
        pair.target = grouped.layers[g].alpha();
        pair.iteration = group_count - 1 - g;
        pair.inpainted_input = false;

        if (inpainting && g < group_count - 1) {
            // Regions the already-peeled groups used to cover, except where
            // they sit on top of layers that are still in the stack: those
            // pixels carry real content that must not be painted over.
            Mask removed(grouped.canvas_width, grouped.canvas_height, 0);
            for (int above = g + 1; above < group_count; ++above) {
                const Layer& l = grouped.layers[above];
                for (int y = 0; y < l.height(); ++y)
                    for (int x = 0; x < l.width(); ++x)
                        if (l.at(x, y, 3) > 0.5f) removed.at(x, y) = 1;
            }
            for (int below = 1; below <= g; ++below) {
                const Layer& l = grouped.layers[below];
                for (int y = 0; y < l.height(); ++y)
                    for (int x = 0; x < l.width(); ++x)
                        if (l.at(x, y, 3) > 0.5f) removed.at(x, y) = 0;
            }
            if (removed.count_set() > 0) {
                MattingPair variant;
                variant.input = inpainting->inpaint(pair.input, removed);
                variant.target = pair.target;
                variant.iteration = pair.iteration;
                variant.inpainted_input = true;
                pairs.push_back(std::move(pair));
                pairs.push_back(std::move(variant));
                continue;
            }
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace layerkit
