#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "layerkit/metrics.hpp"
#include "layerkit/synth.hpp"

using namespace layerkit;

namespace {

Layer opaque_background(int w, int h, std::array<float, 3> rgb) {
    RasterImage color(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) color.set_pixel(x, y, rgb);
    return Layer(color, Plane(w, h, 1.0f));
}

Layer rect_layer(int w, int h, int x0, int y0, int rw, int rh,
                 std::array<float, 3> rgb, float alpha = 1.0f) {
    Layer layer(w, h);
    for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) {
            layer.at(x, y, 0) = rgb[0];
            layer.at(x, y, 1) = rgb[1];
            layer.at(x, y, 2) = rgb[2];
            layer.at(x, y, 3) = alpha;
        }
    }
    return layer;
}

Layer random_layer(std::mt19937_64& rng, int w, int h) {
    Layer layer(w, h);
    for (float& v : layer.data())
        v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
    return layer;
}

double naive_soft_iou(const Plane& a, const Plane& b, bool binarize) {
    double inter = 0, uni = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            double av = a.at(x, y), bv = b.at(x, y);
            if (binarize) {
                av = av > 0.5 ? 1.0 : 0.0;
                bv = bv > 0.5 ? 1.0 : 0.0;
            }
            inter += std::min(av, bv);
            uni += std::max(av, bv);
        }
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

double naive_weighted_l1(const Layer& pred, const Layer& gt) {
    double weight = 0, acc = 0;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            double a = gt.at(x, y, 3);
            weight += a;
            for (int c = 0; c < 3; ++c)
                acc += a * std::abs(static_cast<double>(pred.at(x, y, c)) -
                                    gt.at(x, y, c));
        }
    }
    if (weight == 0) return 0.0;
    return std::min(1.0, acc / (3.0 * weight));
}

// every monotone path from (0,0) to (k-1,q-1), scored by the summed cell costs
double best_path_cost(const std::vector<std::vector<double>>& cost) {
    const int k = static_cast<int>(cost.size());
    const int q = static_cast<int>(cost[0].size());
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, int, double)> walk = [&](int i, int j, double sum) {
        sum += cost[i][j];
        if (i == k - 1 && j == q - 1) {
            best = std::min(best, sum);
            return;
        }
        if (i + 1 < k) walk(i + 1, j, sum);
        if (j + 1 < q) walk(i, j + 1, sum);
        if (i + 1 < k && j + 1 < q) walk(i + 1, j + 1, sum);
    };
    walk(0, 0, 0.0);
    return best;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("soft iou matches a naive evaluation") {
    std::mt19937_64 rng(70);
    for (int trial = 0; trial < 50; ++trial) {
        Plane a(9, 7), b(9, 7);
        for (float& v : a.data())
            v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
        for (float& v : b.data())
            v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
        bool binarize = trial % 2 == 0;
        CHECK(soft_iou(a, b, binarize) ==
              doctest::Approx(naive_soft_iou(a, b, binarize)).epsilon(1e-12));
    }

    Plane zero(5, 5, 0.0f), half(5, 5, 0.5f);
    CHECK(soft_iou(zero, zero) == 1.0);
    CHECK(soft_iou(zero, half) == 0.0);
    CHECK(soft_iou(half, half) == 1.0);
    CHECK_THROWS_AS(soft_iou(zero, Plane(4, 5, 0.0f)), std::invalid_argument);
}

TEST_CASE("weighted rgb l1 matches a naive evaluation") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        Layer pred = random_layer(rng, 8, 8);
        Layer gt = random_layer(rng, 8, 8);
        double got = weighted_rgb_l1(pred, gt);
        CHECK(got == doctest::Approx(naive_weighted_l1(pred, gt)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }

    Layer pred = random_layer(rng, 8, 8);
    Layer empty(8, 8);
    CHECK(weighted_rgb_l1(pred, empty) == 0.0);
}

TEST_CASE("layer distance combines both terms with the configured weights") {
    std::mt19937_64 rng(72);
    DistanceConfig config;
    config.alpha_weight = 0.3;
    config.color_weight = 0.7;
    for (int trial = 0; trial < 20; ++trial) {
        Layer pred = random_layer(rng, 6, 6);
        Layer gt = random_layer(rng, 6, 6);
        double want = 0.3 * (1.0 - naive_soft_iou(pred.alpha(), gt.alpha(),
                                                  false)) +
                      0.7 * naive_weighted_l1(pred, gt);
        CHECK(layer_distance(pred, gt, config) ==
              doctest::Approx(want).epsilon(1e-12));
    }
    Layer same = random_layer(rng, 6, 6);
    CHECK(layer_distance(same, same, DistanceConfig{}) == 0.0);
}

TEST_CASE("grouping matches an occlusion-driven reference") {
    // independent regrouping: peel off the layers nothing above overlaps,
    // merge each batch with the straight over operator
    auto reference_group = [](const LayerSequence& seq, float cut) {
        auto bin = [&](const Layer& l) {
            std::vector<char> s(l.data().size() / 4);
            for (size_t i = 0; i < s.size(); ++i)
                s[i] = l.data()[i * 4 + 3] > cut;
            return s;
        };
        std::vector<int> remaining;
        for (size_t i = 1; i < seq.size(); ++i)
            remaining.push_back(static_cast<int>(i));
        std::vector<std::vector<Layer>> batches_front_first;
        while (!remaining.empty()) {
            std::vector<int> top, rest;
            for (int i : remaining) {
                bool occluded = false;
                auto si = bin(seq.layers[i]);
                for (int j : remaining) {
                    if (j <= i) continue;
                    auto sj = bin(seq.layers[j]);
                    for (size_t p = 0; p < si.size(); ++p)
                        if (si[p] && sj[p]) { occluded = true; break; }
                    if (occluded) break;
                }
                (occluded ? rest : top).push_back(i);
            }
            std::vector<Layer> batch;
            for (int i : top) batch.push_back(seq.layers[i]);
            batches_front_first.push_back(std::move(batch));
            remaining = std::move(rest);
        }
        std::vector<Layer> out = {seq.layers[0]};
        for (auto it = batches_front_first.rbegin();
             it != batches_front_first.rend(); ++it) {
            Layer merged = it->front();
            for (size_t i = 1; i < it->size(); ++i) {
                const Layer& t = (*it)[i];
                Layer next(merged.width(), merged.height());
                for (int y = 0; y < merged.height(); ++y) {
                    for (int x = 0; x < merged.width(); ++x) {
                        double at = t.at(x, y, 3), ab = merged.at(x, y, 3);
                        double ao = at + ab * (1.0 - at);
                        next.at(x, y, 3) = static_cast<float>(ao);
                        for (int c = 0; c < 3; ++c) {
                            double v = ao == 0.0
                                           ? 0.0
                                           : (t.at(x, y, c) * at +
                                              merged.at(x, y, c) * ab *
                                                  (1.0 - at)) / ao;
                            next.at(x, y, c) = static_cast<float>(v);
                        }
                    }
                }
                merged = std::move(next);
            }
            out.push_back(std::move(merged));
        }
        return out;
    };

    for (uint64_t seed : {60, 61, 62, 63, 64, 65, 66, 67}) {
        DesignSpec spec;
        spec.seed = seed;
        spec.min_layers = spec.max_layers = 3;
        LayerSequence seq = generate_design(spec);
        LayerSequence grouped = group_top_layers(seq);
        auto want = reference_group(seq, 0.5f);
        REQUIRE(grouped.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i) {
            for (size_t p = 0; p < want[i].data().size(); ++p)
                CHECK(grouped.layers[i].data()[p] ==
                      doctest::Approx(want[i].data()[p]).epsilon(1e-6));
        }
    }
}

TEST_CASE("a loose shape joins the group of the layer it does not touch") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 32;
    seq.layers.push_back(opaque_background(32, 32, {1, 1, 1}));
    seq.layers.push_back(rect_layer(32, 32, 4, 4, 16, 16, {0.8f, 0.1f, 0.1f}));
    seq.layers.push_back(rect_layer(32, 32, 24, 24, 6, 6, {0.1f, 0.8f, 0.1f}));
    seq.layers.push_back(rect_layer(32, 32, 8, 8, 6, 6, {0.1f, 0.1f, 0.8f}));

    LayerSequence grouped = group_top_layers(seq);
    REQUIRE(grouped.size() == 3);
    // the big rect is occluded by the small blue one; the loose green rect
    // rides along with the top group
    CHECK(grouped.layers[1].data() == seq.layers[1].data());
    CHECK(grouped.layers[2].alpha_at(26, 26) == 1.0f);
    CHECK(grouped.layers[2].alpha_at(10, 10) == 1.0f);
    CHECK(grouped.layers[2].alpha_at(5, 5) == 0.0f);
}

TEST_CASE("the occlusion cut decides what counts as support") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 16;
    seq.layers.push_back(opaque_background(16, 16, {0, 0, 0}));
    seq.layers.push_back(rect_layer(16, 16, 2, 2, 8, 8, {1, 0, 0}, 0.6f));
    seq.layers.push_back(rect_layer(16, 16, 4, 4, 8, 8, {0, 1, 0}, 0.6f));

    CHECK(group_top_layers(seq, 0.5f).size() == 3);   // overlap at 0.6 counts
    CHECK(group_top_layers(seq, 0.7f).size() == 2);   // nothing exceeds 0.7
}

TEST_CASE("translucent non-occluding layers merge with the over operator") {
    LayerSequence seq;
    seq.canvas_width = seq.canvas_height = 12;
    seq.layers.push_back(opaque_background(12, 12, {0, 0, 0}));
    seq.layers.push_back(rect_layer(12, 12, 2, 2, 6, 6, {1, 0, 0}, 0.3f));
    seq.layers.push_back(rect_layer(12, 12, 4, 4, 6, 6, {0, 1, 0}, 0.3f));

    LayerSequence grouped = group_top_layers(seq);
    REQUIRE(grouped.size() == 2);
    const Layer& merged = grouped.layers[1];
    CHECK(merged.alpha_at(5, 5) == doctest::Approx(0.3 + 0.3 * 0.7).epsilon(1e-6));
    CHECK(merged.at(5, 5, 1) ==
          doctest::Approx(0.3 / (0.3 + 0.3 * 0.7)).epsilon(1e-6));
    CHECK(merged.alpha_at(2, 2) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("grouping preserves the composite bit for bit") {
    std::mt19937_64 seeds(73);
    for (int trial = 0; trial < 10; ++trial) {
        DesignSpec spec;
        spec.seed = seeds();
        LayerSequence seq = generate_design(spec);
        CHECK(composite(group_top_layers(seq)).data() ==
              composite(seq).data());
    }
}

TEST_CASE("alignment cost equals exhaustive path enumeration") {
    std::mt19937_64 rng(74);
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int q = 2 + static_cast<int>(rng() % 3);
        LayerSequence pred, gt;
        pred.canvas_width = pred.canvas_height = 8;
        gt.canvas_width = gt.canvas_height = 8;
        for (int i = 0; i < k; ++i) pred.layers.push_back(random_layer(rng, 8, 8));
        for (int j = 0; j < q; ++j) gt.layers.push_back(random_layer(rng, 8, 8));

        DistanceConfig config;
        AlignmentPairs got = dtw_align(pred, gt, config);

        std::vector<std::vector<double>> cost(k, std::vector<double>(q));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < q; ++j)
                cost[i][j] = layer_distance(pred.layers[i], gt.layers[j], config);

        double got_sum = 0;
        for (double d : got.pair_distances) got_sum += d;
        CHECK(got_sum == doctest::Approx(best_path_cost(cost)).epsilon(1e-9));
        CHECK(got.mean_distance ==
              doctest::Approx(got_sum / got.pairs.size()).epsilon(1e-12));

        // path structure: anchored ends, monotone single steps
        REQUIRE(!got.pairs.empty());
        CHECK(got.pairs.front() == std::pair<int, int>(0, 0));
        CHECK(got.pairs.back() == std::pair<int, int>(k - 1, q - 1));
        for (size_t s = 1; s < got.pairs.size(); ++s) {
            int di = got.pairs[s].first - got.pairs[s - 1].first;
            int dj = got.pairs[s].second - got.pairs[s - 1].second;
            CHECK(di >= 0);
            CHECK(dj >= 0);
            CHECK(di + dj >= 1);
            CHECK(di <= 1);
            CHECK(dj <= 1);
        }
    }
}

TEST_CASE("alignment of identical stacks walks the diagonal") {
    std::mt19937_64 rng(75);
    LayerSequence stack;
    stack.canvas_width = stack.canvas_height = 8;
    for (int i = 0; i < 3; ++i) stack.layers.push_back(random_layer(rng, 8, 8));

    AlignmentPairs got = dtw_align(stack, stack, DistanceConfig{});
    REQUIRE(got.pairs.size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(got.pairs[i] == std::pair<int, int>(i, i));
    CHECK(got.mean_distance == 0.0);
}

TEST_CASE("an over-split layer shows up as a merge gain") {
    LayerSequence gt, pred;
    gt.canvas_width = gt.canvas_height = 32;
    pred.canvas_width = pred.canvas_height = 32;
    gt.layers.push_back(opaque_background(32, 32, {1, 1, 1}));
    gt.layers.push_back(rect_layer(32, 32, 4, 8, 24, 16, {0.8f, 0.1f, 0.1f}));
    pred.layers.push_back(opaque_background(32, 32, {1, 1, 1}));
    pred.layers.push_back(rect_layer(32, 32, 4, 8, 12, 16, {0.8f, 0.1f, 0.1f}));
    pred.layers.push_back(rect_layer(32, 32, 16, 8, 12, 16, {0.8f, 0.1f, 0.1f}));

    DistanceConfig config;
    AlignmentPairs align = dtw_align(pred, gt, config);
    auto gains = find_gains(pred, gt, align, config, MergeSide::prediction);

    bool found = false;
    for (const MergeCandidate& cand : gains) {
        CHECK(cand.gain < 0.0);
        if (cand.index == 1) found = true;
    }
    CHECK(found);

    // identical stacks offer nothing to merge
    CHECK(find_gains(gt, gt, dtw_align(gt, gt, config), config).empty());
}

TEST_CASE("merge edits repair a split white background in one step") {
    const int n = 48;
    LayerSequence gt, pred;
    gt.canvas_width = gt.canvas_height = n;
    pred.canvas_width = pred.canvas_height = n;
    gt.layers.push_back(opaque_background(n, n, {1, 1, 1}));
    gt.layers.push_back(rect_layer(n, n, 28, 12, 14, 20, {0.7f, 0.1f, 0.2f}));

    // the background arrives split into left and right white halves
    pred.layers.push_back(rect_layer(n, n, 0, 0, n / 2, n, {1, 1, 1}));
    pred.layers.push_back(rect_layer(n, n, n / 2, 0, n / 2, n, {1, 1, 1}));
    pred.layers.push_back(rect_layer(n, n, 28, 12, 14, 20, {0.7f, 0.1f, 0.2f}));

    DistanceConfig config;
    MergeEditResult result = merge_edit(pred, gt, 5, config);

    REQUIRE(result.log.edits.size() == 1);
    CHECK(result.log.edits[0].side == MergeSide::prediction);
    CHECK(result.log.edits[0].index == 0);
    CHECK(result.log.edits[0].gain > 0.0);
    CHECK(result.log.edits[0].distance_after == 0.0);
    CHECK(result.alignment.mean_distance == 0.0);
    CHECK(result.pred.size() == 2);

    for (size_t i = 0; i < result.alignment.pairs.size(); ++i) {
        auto [pi, gi] = result.alignment.pairs[i];
        CHECK(soft_iou(result.pred.layers[pi].alpha(),
                       result.gt.layers[gi].alpha()) >= 0.999);
    }
}

TEST_CASE("a zero budget reduces merge edit to plain alignment") {
    std::mt19937_64 rng(76);
    LayerSequence pred, gt;
    pred.canvas_width = pred.canvas_height = 8;
    gt.canvas_width = gt.canvas_height = 8;
    for (int i = 0; i < 4; ++i) pred.layers.push_back(random_layer(rng, 8, 8));
    for (int j = 0; j < 3; ++j) gt.layers.push_back(random_layer(rng, 8, 8));

    DistanceConfig config;
    MergeEditResult result = merge_edit(pred, gt, 0, config);
    AlignmentPairs plain = dtw_align(pred, gt, config);
    CHECK(result.log.edits.empty());
    CHECK(result.alignment.pairs == plain.pairs);
    CHECK(result.alignment.mean_distance == plain.mean_distance);
}

TEST_CASE("merging can repair the ground-truth side too") {
    const int n = 32;
    LayerSequence gt, pred;
    gt.canvas_width = gt.canvas_height = n;
    pred.canvas_width = pred.canvas_height = n;
    pred.layers.push_back(opaque_background(n, n, {0, 0, 0}));
    pred.layers.push_back(rect_layer(n, n, 4, 4, 20, 20, {0.2f, 0.8f, 0.3f}));

    gt.layers.push_back(opaque_background(n, n, {0, 0, 0}));
    gt.layers.push_back(rect_layer(n, n, 4, 4, 10, 20, {0.2f, 0.8f, 0.3f}));
    gt.layers.push_back(rect_layer(n, n, 14, 4, 10, 20, {0.2f, 0.8f, 0.3f}));

    MergeEditResult result = merge_edit(pred, gt, 5, DistanceConfig{});
    CHECK(result.log.used(MergeSide::ground_truth) == 1);
    CHECK(result.log.used(MergeSide::prediction) == 0);
    CHECK(result.alignment.mean_distance == 0.0);
}

TEST_CASE("two-layer sides never merge no matter the budget") {
    const int n = 16;
    LayerSequence a, b;
    a.canvas_width = a.canvas_height = n;
    b.canvas_width = b.canvas_height = n;
    a.layers.push_back(opaque_background(n, n, {1, 1, 1}));
    a.layers.push_back(rect_layer(n, n, 2, 2, 6, 6, {0.5f, 0.1f, 0.9f}));
    b.layers.push_back(opaque_background(n, n, {1, 1, 1}));
    b.layers.push_back(rect_layer(n, n, 7, 7, 6, 6, {0.9f, 0.5f, 0.1f}));

    MergeEditResult result = merge_edit(a, b, 10, DistanceConfig{});
    CHECK(result.log.edits.empty());
    CHECK(result.pred.size() == 2);
    CHECK(result.gt.size() == 2);
}

TEST_CASE("evaluating a sequence against itself is perfect at every budget") {
    DesignSpec spec;
    spec.seed = 77;
    LayerSequence seq = generate_design(spec);

    EvalConfig config;
    config.max_edits = 3;
    EvalReport report = evaluate(seq, seq, config);

    REQUIRE(report.rows.size() == 4);
    const int groups = static_cast<int>(group_top_layers(seq).size());
    for (int i = 0; i < 4; ++i) {
        const EvalRow& row = report.rows[i];
        CHECK(row.edits_allowed == i);
        CHECK(row.edits_used_pred == 0);
        CHECK(row.edits_used_gt == 0);
        CHECK(row.rgb_l1 == 0.0);
        CHECK(row.alpha_soft_iou == 1.0);
        CHECK(row.mean_distance == 0.0);
        CHECK(row.pair_count == groups);
    }
}

TEST_CASE("a bigger budget never hurts an over-split prediction") {
    const int n = 48;
    LayerSequence gt, pred;
    gt.canvas_width = gt.canvas_height = n;
    pred.canvas_width = pred.canvas_height = n;
    gt.layers.push_back(opaque_background(n, n, {1, 1, 1}));
    gt.layers.push_back(rect_layer(n, n, 6, 6, 24, 24, {0.8f, 0.2f, 0.1f}));
    gt.layers.push_back(rect_layer(n, n, 12, 12, 12, 12, {0.1f, 0.2f, 0.8f}));

    pred.layers.push_back(opaque_background(n, n, {1, 1, 1}));
    pred.layers.push_back(rect_layer(n, n, 6, 6, 24, 12, {0.8f, 0.2f, 0.1f}));
    pred.layers.push_back(rect_layer(n, n, 6, 18, 24, 12, {0.8f, 0.2f, 0.1f}));
    pred.layers.push_back(rect_layer(n, n, 12, 12, 12, 12, {0.1f, 0.2f, 0.8f}));

    EvalConfig config;
    config.max_edits = 4;
    EvalReport report = evaluate(pred, gt, config);
    REQUIRE(report.rows.size() == 5);
    for (size_t i = 1; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].rgb_l1 <= report.rows[0].rgb_l1 + 1e-12);
        CHECK(report.rows[i].mean_distance <=
              report.rows[i - 1].mean_distance + 1e-12);
        CHECK(report.rows[i].edits_used_pred +
                  report.rows[i].edits_used_gt <=
              report.rows[i].edits_allowed);
    }
}

TEST_CASE("reports serialize consistently") {
    DesignSpec spec;
    spec.seed = 78;
    LayerSequence seq = generate_design(spec);
    EvalConfig config;
    config.max_edits = 2;
    EvalReport report = evaluate(seq, seq, config);

    std::string text = report_to_text(report);
    CHECK(text.find("# columns:") != std::string::npos);
    size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 5 + report.rows.size());  // header block plus one per row

    nlohmann::json doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["canvas"]["width"] == report.canvas_width);
    CHECK(doc["max_edits"] == 2);
    REQUIRE(doc["rows"].size() == report.rows.size());
    for (size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(doc["rows"][i]["edits_allowed"] ==
              report.rows[i].edits_allowed);
        CHECK(doc["rows"][i]["alpha_soft_iou"].get<double>() ==
              doctest::Approx(report.rows[i].alpha_soft_iou).epsilon(1e-12));
        CHECK(doc["rows"][i]["pair_count"] == report.rows[i].pair_count);
    }
}

}  // TEST_SUITE
