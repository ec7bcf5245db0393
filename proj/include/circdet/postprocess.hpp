#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "circdet/geometry.hpp"
#include "circdet/loss_ref.hpp"
#include "circdet/target_builder.hpp"

namespace circdet {

/// Where a detection came from: grid size and cell. grid_size 0 means unknown.
struct Provenance {
  int grid_size = 0;
  int i = 0;
  int j = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Raster order across a pyramid: larger grids first, then row, then column.
bool raster_before(const Provenance& a, const Provenance& b);

struct Detection {
  Quad quad;
  double score = 0.0;  // merged detections carry summed scores, so > 1 is possible
  std::optional<int> vertical;
  Provenance source;
};

struct NmsStats {
  std::size_t merge_tests = 0;  // IoU evaluations in the LANMS merge pass
  std::size_t nms_tests = 0;    // IoU evaluations in greedy suppression
};

/// One detection per cell whose text probability exceeds `threshold`, in
/// raster order (largest grid first). Quads are decoded in normalized units
/// and multiplied by `scale` (pass the image side to get pixels). Cells whose
/// regression does not decode to a valid anchor are skipped.
std::vector<Detection> filter_by_confidence(std::span<const PredictionGrid> grids,
                                            double threshold = 0.5, double scale = 1.0);

/// A prediction that reproduces the labels exactly: one-hot logits of the
/// given magnitude, regression equal to the targets.
PredictionGrid perfect_prediction(const LabelGrid& labels, double logit = 20.0);

/// Score-weighted corner average; scores add. b's corners are first matched to
/// a's by orientation and cyclic shift. Vertical flag and provenance follow the
/// higher-scoring operand.
Detection weighted_merge(const Detection& a, const Detection& b);

/// Greedy NMS: highest score first (ties to the earlier index), suppressing
/// everything with iou > iou_thresh against a kept detection.
std::vector<Detection> standard_nms(std::span<const Detection> dets, double iou_thresh = 0.5,
                                    NmsStats* stats = nullptr);

/// Locality-aware NMS over raster-ordered detections: a single pass merging
/// each detection into the running candidate while iou > merge_iou, then
/// standard_nms over the merged candidates.
std::vector<Detection> lanms(std::span<const Detection> dets, double merge_iou = 0.5,
                             double final_iou = 0.5, NmsStats* stats = nullptr);

}  // namespace circdet
