#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "circdet/data_io.hpp"
#include "circdet/postprocess.hpp"

namespace circdet {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct ImageCounts {
  std::string image_id;
  MatchCounts counts;
};

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  double iou_thresh = 0.5;
  std::vector<ImageCounts> per_image;

  /// Precision, recall and F from the counts; each is 0 when undefined.
  static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

/// Greedy one-to-one matching for one image. Detections are visited by
/// descending score (ties in input order); each takes the unmatched non-ignore
/// ground truth with the highest iou >= iou_thresh (ties to the earlier gt).
/// An unmatched detection overlapping an ignore region at iou >= iou_thresh is
/// dropped from the counts; any other is a false positive.
MatchCounts match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                             double iou_thresh = 0.5);

struct EvalOptions {
  double iou_thresh = 0.5;
  double default_scale = 1.0;            // multiplies detection coordinates
  std::map<std::string, double> scales;  // per-image override
};

/// Micro-averaged over images. Both maps must cover the same image ids, else
/// MissingImage. per_image is sorted by image id.
EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& dets,
                    const std::map<std::string, std::vector<Annotation>>& gts,
                    const EvalOptions& opts = {});

std::string format_report_text(const EvalReport& r);
/// Stable key order, for golden-file comparison.
std::string format_report_json(const EvalReport& r);

}  // namespace circdet
