#include "layerkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace layerkit {

namespace {

std::vector<char> binarized_support(const Layer& layer, float cut) {
    std::vector<char> support(layer.data().size() / 4);
    for (size_t i = 0; i < support.size(); ++i)
        support[i] = layer.data()[i * 4 + 3] > cut ? 1 : 0;
    return support;
}

bool supports_overlap(const std::vector<char>& a, const std::vector<char>& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] && b[i]) return true;
    return false;
}

double side_distance(const Layer& merge_side, const Layer& other,
                     MergeSide side, const DistanceConfig& config) {
    return side == MergeSide::prediction
               ? layer_distance(merge_side, other, config)
               : layer_distance(other, merge_side, config);
}

}  // namespace

LayerSequence group_top_layers(const LayerSequence& seq, float occlusion_cut) {
    if (seq.layers.empty())
        throw std::invalid_argument("group_top_layers: empty sequence");
    LayerSequence out;
    out.canvas_width = seq.canvas_width;
    out.canvas_height = seq.canvas_height;
    out.layers.push_back(seq.layers[0]);
    if (seq.layers.size() == 1) return out;

    std::vector<int> remaining;
    for (size_t k = 1; k < seq.layers.size(); ++k)
        remaining.push_back(static_cast<int>(k));
    std::vector<std::vector<char>> supports(seq.layers.size());
    for (int k : remaining)
        supports[k] = binarized_support(seq.layers[k], occlusion_cut);

    std::vector<Layer> groups_front_first;
    while (!remaining.empty()) {
        std::vector<int> top;
        for (int k : remaining) {
            bool occluded = false;
            for (int j : remaining) {
                if (j > k && supports_overlap(supports[j], supports[k])) {
                    occluded = true;
                    break;
                }
            }
            if (!occluded) top.push_back(k);
        }
        Layer merged = seq.layers[top.front()];
        for (size_t i = 1; i < top.size(); ++i)
            merged = alpha_composite(seq.layers[top[i]], merged);
        groups_front_first.push_back(std::move(merged));
        std::vector<int> rest;
        for (int k : remaining)
            if (std::find(top.begin(), top.end(), k) == top.end())
                rest.push_back(k);
        remaining = std::move(rest);
    }
    for (auto it = groups_front_first.rbegin(); it != groups_front_first.rend();
         ++it)
        out.layers.push_back(std::move(*it));
    return out;
}

double soft_iou(const Plane& a, const Plane& b, bool binarize) {
    if (!a.same_size(b))
        throw std::invalid_argument("soft_iou: dimensions differ");
    double inter = 0.0;
    double uni = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        double av = a[i];
        double bv = b[i];
        if (binarize) {
            av = av > 0.5 ? 1.0 : 0.0;
            bv = bv > 0.5 ? 1.0 : 0.0;
        }
        inter += std::min(av, bv);
        uni += std::max(av, bv);
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

double weighted_rgb_l1(const Layer& pred, const Layer& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw std::invalid_argument("weighted_rgb_l1: dimensions differ");
    double weight = 0.0;
    double acc = 0.0;
    const auto& p = pred.data();
    const auto& g = gt.data();
    const size_t n = g.size() / 4;
    for (size_t i = 0; i < n; ++i) {
        const double a = g[i * 4 + 3];
        if (a == 0.0) continue;
        weight += a;
        double l1 = 0.0;
        for (int c = 0; c < 3; ++c)
            l1 += std::abs(static_cast<double>(p[i * 4 + c]) - g[i * 4 + c]);
        acc += a * l1;
    }
    if (weight == 0.0) return 0.0;
    return std::min(1.0, acc / (3.0 * weight));
}

double layer_distance(const Layer& pred, const Layer& gt,
                      const DistanceConfig& config) {
    const double iou = soft_iou(pred.alpha(), gt.alpha(), config.binarize_alpha);
    return config.alpha_weight * (1.0 - iou) +
           config.color_weight * weighted_rgb_l1(pred, gt);
}

AlignmentPairs dtw_align(const LayerSequence& pred, const LayerSequence& gt,
                         const DistanceConfig& config) {
    const int k = static_cast<int>(pred.layers.size());
    const int q = static_cast<int>(gt.layers.size());
    if (k == 0 || q == 0)
        throw std::invalid_argument("dtw_align: empty sequence");
    if (pred.canvas_width != gt.canvas_width ||
        pred.canvas_height != gt.canvas_height)
        throw std::invalid_argument("dtw_align: canvas dimensions differ");

    std::vector<std::vector<double>> cost(k, std::vector<double>(q));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < q; ++j)
            cost[i][j] = layer_distance(pred.layers[i], gt.layers[j], config);

    // Accumulated matrix; the origin cell stays zero, which offsets every
    // path by the same constant and leaves the argmin unchanged.
    std::vector<std::vector<double>> acc(k, std::vector<double>(q, 0.0));
    for (int i = 1; i < k; ++i) acc[i][0] = acc[i - 1][0] + cost[i][0];
    for (int j = 1; j < q; ++j) acc[0][j] = acc[0][j - 1] + cost[0][j];
    for (int i = 1; i < k; ++i)
        for (int j = 1; j < q; ++j)
            acc[i][j] = cost[i][j] + std::min({acc[i - 1][j - 1],
                                               acc[i - 1][j], acc[i][j - 1]});

    AlignmentPairs out;
    int i = k - 1;
    int j = q - 1;
    out.pairs.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else if (acc[i - 1][j - 1] <= acc[i - 1][j] &&
                   acc[i - 1][j - 1] <= acc[i][j - 1]) {
            --i;
            --j;
        } else if (acc[i - 1][j] <= acc[i - 1][j - 1] &&
                   acc[i - 1][j] <= acc[i][j - 1]) {
            --i;
        } else {
            --j;
        }
        out.pairs.emplace_back(i, j);
    }
    std::reverse(out.pairs.begin(), out.pairs.end());

    double sum = 0.0;
    for (const auto& [pi, gi] : out.pairs) {
        out.pair_distances.push_back(cost[pi][gi]);
        sum += cost[pi][gi];
    }
    out.mean_distance = sum / static_cast<double>(out.pairs.size());
    return out;
}

std::vector<MergeCandidate> find_gains(const LayerSequence& pred,
                                       const LayerSequence& gt,
                                       const AlignmentPairs& pairs,
                                       const DistanceConfig& config,
                                       MergeSide side) {
    const LayerSequence& merge_seq =
        side == MergeSide::prediction ? pred : gt;
    const LayerSequence& other_seq =
        side == MergeSide::prediction ? gt : pred;
    const int n = static_cast<int>(merge_seq.layers.size());

    std::vector<std::vector<int>> matched(n);
    for (const auto& [pi, gi] : pairs.pairs) {
        if (side == MergeSide::prediction)
            matched[pi].push_back(gi);
        else
            matched[gi].push_back(pi);
    }

    std::vector<MergeCandidate> out;
    for (int i = 0; i + 1 < n; ++i) {
        const Layer merged =
            alpha_composite(merge_seq.layers[i + 1], merge_seq.layers[i]);

        double cur = 0.0;
        for (int m : matched[i])
            cur += side_distance(merge_seq.layers[i], other_seq.layers[m],
                                 side, config);
        for (int m : matched[i + 1])
            cur += side_distance(merge_seq.layers[i + 1], other_seq.layers[m],
                                 side, config);

        double merged_takes_first = 0.0;
        for (int m : matched[i])
            merged_takes_first +=
                side_distance(merged, other_seq.layers[m], side, config);

        double best = merged_takes_first;
        for (int m : matched[i + 1])
            best += side_distance(merged, other_seq.layers[m], side, config);

        if (i + 2 < n) {
            double carry = merged_takes_first;
            for (int m : matched[i + 1])
                carry += side_distance(merge_seq.layers[i + 2],
                                       other_seq.layers[m], side, config);
            best = std::min(best, carry);
        }

        if (best < cur) out.push_back({i, best - cur});
    }
    return out;
}

int EditLog::used(MergeSide side) const {
    int n = 0;
    for (const EditLogEntry& e : edits)
        if (e.side == side) ++n;
    return n;
}

MergeEditResult merge_edit(LayerSequence pred, LayerSequence gt, int max_edits,
                           const DistanceConfig& config) {
    MergeEditResult result;
    AlignmentPairs align = dtw_align(pred, gt, config);

    while (static_cast<int>(result.log.edits.size()) < max_edits &&
           (pred.layers.size() > 2 || gt.layers.size() > 2)) {
        bool found = false;
        MergeSide best_side = MergeSide::prediction;
        int best_index = 0;
        double best_gain = 0.0;
        for (MergeSide side :
             {MergeSide::prediction, MergeSide::ground_truth}) {
            const LayerSequence& seq =
                side == MergeSide::prediction ? pred : gt;
            if (seq.layers.size() <= 2) continue;
            for (const MergeCandidate& cand :
                 find_gains(pred, gt, align, config, side)) {
                if (!found || cand.gain < best_gain) {
                    found = true;
                    best_side = side;
                    best_index = cand.index;
                    best_gain = cand.gain;
                }
            }
        }
        if (!found) break;

        LayerSequence& seq =
            best_side == MergeSide::prediction ? pred : gt;
        seq.layers[best_index] = alpha_composite(seq.layers[best_index + 1],
                                                 seq.layers[best_index]);
        seq.layers.erase(seq.layers.begin() + best_index + 1);

        align = dtw_align(pred, gt, config);
        result.log.edits.push_back(
            {best_side, best_index, -best_gain, align.mean_distance});
    }

    result.alignment = align;
    result.pred = std::move(pred);
    result.gt = std::move(gt);
    return result;
}

EvalReport evaluate(const LayerSequence& pred, const LayerSequence& gt,
                    const EvalConfig& config) {
    if (pred.canvas_width != gt.canvas_width ||
        pred.canvas_height != gt.canvas_height)
        throw std::invalid_argument("evaluate: canvas dimensions differ");
    if (config.max_edits < 0)
        throw std::invalid_argument("evaluate: negative edit budget");

    const LayerSequence grouped_pred =
        group_top_layers(pred, config.occlusion_cut);
    const LayerSequence grouped_gt = group_top_layers(gt, config.occlusion_cut);

    EvalReport report;
    report.config = config;
    report.canvas_width = gt.canvas_width;
    report.canvas_height = gt.canvas_height;

    for (int budget = 0; budget <= config.max_edits; ++budget) {
        const MergeEditResult r =
            merge_edit(grouped_pred, grouped_gt, budget, config.distance);
        EvalRow row;
        row.edits_allowed = budget;
        row.edits_used_pred = r.log.used(MergeSide::prediction);
        row.edits_used_gt = r.log.used(MergeSide::ground_truth);
        double l1 = 0.0;
        double iou = 0.0;
        for (const auto& [pi, gi] : r.alignment.pairs) {
            l1 += weighted_rgb_l1(r.pred.layers[pi], r.gt.layers[gi]);
            iou += soft_iou(r.pred.layers[pi].alpha(), r.gt.layers[gi].alpha(),
                            config.distance.binarize_alpha);
        }
        const double count =
            static_cast<double>(r.alignment.pairs.size());
        row.rgb_l1 = l1 / count;
        row.alpha_soft_iou = iou / count;
        row.mean_distance = r.alignment.mean_distance;
        row.pair_count = static_cast<int>(r.alignment.pairs.size());
        report.rows.push_back(row);
    }
    return report;
}

std::string report_to_text(const EvalReport& report) {
    char line[256];
    std::string out;
    out += "# layer decomposition evaluation\n";
    std::snprintf(line, sizeof(line), "# canvas: %dx%d\n",
                  report.canvas_width, report.canvas_height);
    out += line;
    std::snprintf(line, sizeof(line),
                  "# distance: %.3f*(1-soft_iou(alpha)) + %.3f*min(1, "
                  "gt_weighted_rgb_l1)\n",
                  report.config.distance.alpha_weight,
                  report.config.distance.color_weight);
    out += line;
    std::snprintf(line, sizeof(line),
                  "# binarize_alpha=%d occlusion_cut=%.3f max_edits=%d\n",
                  report.config.distance.binarize_alpha ? 1 : 0,
                  report.config.occlusion_cut, report.config.max_edits);
    out += line;
    out +=
        "# columns: edits_allowed edits_used_pred edits_used_gt rgb_l1 "
        "alpha_soft_iou mean_distance pair_count\n";
    for (const EvalRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%d %d %d %.6f %.6f %.6f %d\n",
                      row.edits_allowed, row.edits_used_pred,
                      row.edits_used_gt, row.rgb_l1, row.alpha_soft_iou,
                      row.mean_distance, row.pair_count);
        out += line;
    }
    return out;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["canvas"] = {{"width", report.canvas_width},
                     {"height", report.canvas_height}};
    doc["distance"] = {
        {"alpha_weight", report.config.distance.alpha_weight},
        {"color_weight", report.config.distance.color_weight},
        {"binarize_alpha", report.config.distance.binarize_alpha},
    };
    doc["occlusion_cut"] = report.config.occlusion_cut;
    doc["max_edits"] = report.config.max_edits;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const EvalRow& row : report.rows) {
        doc["rows"].push_back({{"edits_allowed", row.edits_allowed},
                               {"edits_used_pred", row.edits_used_pred},
                               {"edits_used_gt", row.edits_used_gt},
                               {"rgb_l1", row.rgb_l1},
                               {"alpha_soft_iou", row.alpha_soft_iou},
                               {"mean_distance", row.mean_distance},
                               {"pair_count", row.pair_count}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace layerkit
