#include "circdet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

namespace circdet {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

RotatedBox box_for_level(std::mt19937_64& rng, const GridSpec& g, double image_size) {
  const double cell = image_size / g.size;
  const double h = uniform(rng, 1.25, 3.75) * cell;
  const double aspect = g.size >= 6 ? uniform(rng, 1.0, 5.0) : uniform(rng, 1.0, 1.6);
  const double theta = uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2);
  const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(g.size));
  const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(g.size));
  return RotatedBox::make((j + 0.5) * cell, (i + 0.5) * cell, h * aspect, h, theta);
}

}  // namespace

std::vector<GroundTruthBox> make_scene(std::uint64_t seed, std::uint64_t index,
                                       const PyramidSpec& pyramid, double image_size,
                                       std::size_t first_level) {
  auto rng = make_rng(seed, index);
  const std::size_t target = 1 + rng() % 8;

  std::vector<std::size_t> small_levels;
  for (std::size_t k = 0; k < pyramid.grids.size(); ++k) {
    if (pyramid.grids[k].size >= 4) small_levels.push_back(k);
  }
  if (small_levels.empty()) small_levels.push_back(0);

  std::vector<GroundTruthBox> boxes;
  boxes.push_back({box_for_level(rng, pyramid.grids.at(first_level), image_size), false});
  for (int attempt = 0; attempt < 200 && boxes.size() < target; ++attempt) {
    const std::size_t level = small_levels[rng() % small_levels.size()];
    const RotatedBox b = box_for_level(rng, pyramid.grids[level], image_size);
    const bool ignore = uniform(rng, 0.0, 1.0) < 0.15;
    const Quad q = quad_from_rbox(b);
    const bool overlaps = std::any_of(boxes.begin(), boxes.end(), [&](const GroundTruthBox& o) {
      return polygon_intersection_area(q, quad_from_rbox(o.box)) > 0.0;
    });
    if (!overlaps) boxes.push_back({b, ignore});
  }
  return boxes;
}

ClosedLoopResult run_closed_loop(const ClosedLoopOptions& opts) {
  opts.pyramid.validate();
  ClosedLoopResult result;
  result.positives_per_level.assign(opts.pyramid.grids.size(), 0);

  std::map<std::string, std::vector<Detection>> dets;
  std::map<std::string, std::vector<Annotation>> gts;
  for (std::size_t s = 0; s < opts.scenes; ++s) {
    const auto boxes =
        make_scene(opts.seed, s, opts.pyramid, opts.image_size, s % opts.pyramid.grids.size());
    const auto labels = build_targets(boxes, opts.pyramid, opts.image_size);

    std::vector<PredictionGrid> preds;
    for (std::size_t g = 0; g < labels.size(); ++g) {
      preds.push_back(perfect_prediction(labels[g]));
      for (const CellLabel& c : labels[g].cells) result.positives_per_level[g] += c.cls == CellClass::Text;
    }
    const auto raw = filter_by_confidence(preds, opts.conf_threshold, opts.image_size);
    auto kept = lanms(raw, opts.merge_iou, opts.final_iou);
    result.raw_detections += raw.size();
    result.final_detections += kept.size();

    char id[32];
    std::snprintf(id, sizeof id, "scene_%03zu", s);
    std::vector<Annotation> anns;
    for (const GroundTruthBox& b : boxes) {
      anns.push_back(Annotation{quad_from_rbox(b.box), b.ignore ? "###" : "text", b.ignore});
      ++result.boxes;
      result.ignore_boxes += b.ignore;
    }
    dets[id] = std::move(kept);
    gts[id] = std::move(anns);
  }
  EvalOptions eo;
  eo.iou_thresh = opts.iou_thresh;
  result.report = evaluate(dets, gts, eo);
  return result;
}

std::vector<Detection> clustered_detections(std::size_t n, std::size_t clusters, std::uint64_t seed) {
  constexpr double kField = 2000.0;
  constexpr double kStride = 8.0;
  auto rng = make_rng(seed, 0xC1u);
  clusters = std::max<std::size_t>(1, clusters);

  std::vector<RotatedBox> bases;
  for (int attempt = 0; bases.size() < clusters && attempt < 100000; ++attempt) {
    const RotatedBox b = RotatedBox::make(uniform(rng, 120, kField - 120), uniform(rng, 60, kField - 60),
                                          uniform(rng, 64, 200), uniform(rng, 16, 32),
                                          uniform(rng, -0.3, 0.3));
    const bool clash = std::any_of(bases.begin(), bases.end(), [&](const RotatedBox& o) {
      return std::abs(o.cx - b.cx) < 0.5 * (o.w + b.w) + 10 && std::abs(o.cy - b.cy) < 0.5 * (o.w + b.w) + 10;
    });
    if (!clash) bases.push_back(b);
  }

  std::vector<Detection> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const RotatedBox& base = bases[k % bases.size()];
    const RotatedBox m = RotatedBox::make(
        base.cx + uniform(rng, -1.5, 1.5), base.cy + uniform(rng, -1.5, 1.5),
        base.w * uniform(rng, 0.97, 1.03), base.h * uniform(rng, 0.97, 1.03),
        base.theta + uniform(rng, -0.02, 0.02));
    const Point2 at = base.center() + rotate({uniform(rng, -0.4, 0.4) * base.w,
                                              uniform(rng, -0.4, 0.4) * base.h},
                                             base.theta);
    Detection d;
    d.quad = quad_from_rbox(m);
    d.score = uniform(rng, 0.5, 1.0);
    d.source = Provenance{static_cast<int>(kField / kStride), static_cast<int>(at.y / kStride),
                          static_cast<int>(at.x / kStride)};
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return raster_before(a.source, b.source); });
  return out;
}

}  // namespace circdet
