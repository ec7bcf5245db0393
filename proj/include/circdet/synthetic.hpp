#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "circdet/evaluation.hpp"
#include "circdet/postprocess.hpp"
#include "circdet/target_builder.hpp"

namespace circdet {

/// Seeded scene of 1-8 pairwise disjoint boxes on a square image. The first
/// box is sized to scale-match grid `first_level` of the pyramid and centered
/// on one of that grid's cell centers; later boxes pick random levels.
std::vector<GroundTruthBox> make_scene(std::uint64_t seed, std::uint64_t index,
                                       const PyramidSpec& pyramid, double image_size,
                                       std::size_t first_level);

struct ClosedLoopOptions {
  std::size_t scenes = 100;
  std::uint64_t seed = 1;
  double image_size = 384.0;
  PyramidSpec pyramid = PyramidSpec::default_pyramid();
  double conf_threshold = 0.5;
  double merge_iou = 0.5;
  double final_iou = 0.5;
  double iou_thresh = 0.5;
};

struct ClosedLoopResult {
  EvalReport report;
  std::size_t boxes = 0;
  std::size_t ignore_boxes = 0;
  std::size_t raw_detections = 0;
  std::size_t final_detections = 0;
  std::vector<std::size_t> positives_per_level;  // Text cells per pyramid level
};

/// Scenes -> build_targets -> labels as perfect predictions ->
/// filter_by_confidence -> lanms -> evaluate.
ClosedLoopResult run_closed_loop(const ClosedLoopOptions& opts);

/// n detections in `clusters` tight groups scattered over a 2000 x 2000 px
/// field, returned in raster order of a stride-8 grid.
std::vector<Detection> clustered_detections(std::size_t n, std::size_t clusters, std::uint64_t seed);

}  // namespace circdet
