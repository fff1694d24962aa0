#pragma once

#include <string>
#include <utility>
#include <vector>

#include "layerkit/raster.hpp"

namespace layerkit {

struct DistanceConfig {
    double alpha_weight = 0.5;
    double color_weight = 0.5;
    bool binarize_alpha = false;  // soft IoU by default
};

/// Merges each run of mutually visible layers into one layer: repeatedly
/// extracts the layers whose binarized support is not overlapped by any
/// higher remaining layer and alpha-composites them. The background always
/// forms group 0 and the composite image is preserved.
LayerSequence group_top_layers(const LayerSequence& seq,
                               float occlusion_cut = 0.5f);

/// Soft intersection-over-union of two alpha planes (sum of minima over sum
/// of maxima); 1 when both planes are identically zero.
double soft_iou(const Plane& a, const Plane& b, bool binarize = false);

/// Ground-truth-weighted color term of the layer distance: the gt-alpha
/// weighted mean L1 over RGB, clamped to [0,1]. Zero when gt alpha is empty.
double weighted_rgb_l1(const Layer& pred, const Layer& gt);

/// Distance between a predicted layer and a ground-truth layer:
/// alpha_weight * (1 - soft_iou) + color_weight * weighted_rgb_l1.
double layer_distance(const Layer& pred, const Layer& gt,
                      const DistanceConfig& config);

/// Monotone alignment between two layer stacks.
struct AlignmentPairs {
    std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
    std::vector<double> pair_distances;
    double mean_distance = 0.0;
};

/// Dynamic-time-warping alignment of two grouped sequences (back to front).
/// The path always contains (0,0) and (K,Q) and both index streams are
/// non-decreasing; ties during backtrace prefer the diagonal step.
AlignmentPairs dtw_align(const LayerSequence& pred, const LayerSequence& gt,
                         const DistanceConfig& config);

enum class MergeSide { prediction, ground_truth };

struct MergeCandidate {
    int index = 0;     // merge layers index and index+1
    double gain = 0.0; // negative when merging reduces the matched distance
};

/// For each adjacent pair on the chosen side, compares the current matched
/// distance sum against the best reassignment after merging the pair
/// (optionally handing the second slot to the next layer up). Emits only
/// candidates whose gain is negative.
std::vector<MergeCandidate> find_gains(const LayerSequence& pred,
                                       const LayerSequence& gt,
                                       const AlignmentPairs& pairs,
                                       const DistanceConfig& config,
                                       MergeSide side = MergeSide::prediction);

struct EditLogEntry {
    MergeSide side;
    int index;
    double gain;            // distance decrease, positive
    double distance_after;  // mean aligned distance after this edit
};

struct EditLog {
    std::vector<EditLogEntry> edits;

    int used(MergeSide side) const;
};

struct MergeEditResult {
    AlignmentPairs alignment;
    EditLog log;
    LayerSequence pred;
    LayerSequence gt;
};

/// Greedy merge search: while the edit budget lasts and a side still has more
/// than two layers, realigns, evaluates merge gains on both sides, and applies
/// the single best strictly improving merge.
MergeEditResult merge_edit(LayerSequence pred, LayerSequence gt, int max_edits,
                           const DistanceConfig& config);

struct EvalRow {
    int edits_allowed = 0;
    int edits_used_pred = 0;
    int edits_used_gt = 0;
    double rgb_l1 = 0.0;
    double alpha_soft_iou = 0.0;
    double mean_distance = 0.0;
    int pair_count = 0;
};

struct EvalConfig {
    DistanceConfig distance;
    float occlusion_cut = 0.5f;
    int max_edits = 5;
};

struct EvalReport {
    EvalConfig config;
    int canvas_width = 0;
    int canvas_height = 0;
    std::vector<EvalRow> rows;
};

/// Groups both sequences and reports aligned quality for every edit budget
/// from 0 to config.max_edits.
EvalReport evaluate(const LayerSequence& pred, const LayerSequence& gt,
                    const EvalConfig& config);

std::string report_to_text(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

}  // namespace layerkit
