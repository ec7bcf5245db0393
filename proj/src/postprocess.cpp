#include "circdet/postprocess.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "circdet/anchor_codec.hpp"
#include "circdet/errors.hpp"

namespace circdet {

bool raster_before(const Provenance& a, const Provenance& b) {
  if (a.grid_size != b.grid_size) return a.grid_size > b.grid_size;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

std::vector<Detection> filter_by_confidence(std::span<const PredictionGrid> grids,
                                            double threshold, double scale) {
  std::vector<std::size_t> order(grids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return grids[a].grid.size > grids[b].grid.size;
  });

  std::vector<Detection> out;
  for (std::size_t g : order) {
    const PredictionGrid& grid = grids[g];
    for (int i = 0; i < grid.grid.size; ++i) {
      for (int j = 0; j < grid.grid.size; ++j) {
        const AnchorDelta& cell = grid.at(i, j);
        const double p_text = softmax(cell.logits)[static_cast<std::size_t>(CellClass::Text)];
        if (!(p_text > threshold)) continue;
        Quad q;
        try {
          q = decode_circle_anchor(apply_delta(cell.reg, i, j, grid.grid));
        } catch (const InvalidAnchor&) {
          continue;
        } catch (const NonFinite&) {
          continue;
        }
        for (Point2& p : q.corners) p = scale * p;
        const int vertical = cell.vertical_logits[1] > cell.vertical_logits[0] ? 1 : 0;
        out.push_back(Detection{q, p_text, vertical, Provenance{grid.grid.size, i, j}});
      }
    }
  }
  return out;
}

PredictionGrid perfect_prediction(const LabelGrid& labels, double logit) {
  PredictionGrid pred(labels.grid);
  for (std::size_t c = 0; c < labels.cells.size(); ++c) {
    const CellLabel& l = labels.cells[c];
    AnchorDelta& d = pred.cells[c];
    d.logits[static_cast<std::size_t>(l.cls)] = logit;
    if (l.regression) d.reg = *l.regression;
    if (l.vertical) d.vertical_logits[static_cast<std::size_t>(*l.vertical)] = logit;
  }
  return pred;
}

Detection weighted_merge(const Detection& a, const Detection& b) {
  Quad qb = b.quad;
  if ((signed_area(a.quad) < 0.0) != (signed_area(qb) < 0.0)) {
    std::reverse(qb.corners.begin(), qb.corners.end());
  }
  std::size_t shift = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < 4; ++s) {
    double d = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const Point2 diff = a.quad[k] - qb[(k + s) % 4];
      d += dot(diff, diff);
    }
    if (d < best) {
      best = d;
      shift = s;
    }
  }

  const double total = a.score + b.score;
  Detection out;
  for (std::size_t k = 0; k < 4; ++k) {
    const Point2 pa = a.quad[k];
    const Point2 pb = qb[(k + shift) % 4];
    out.quad[k] = {(a.score * pa.x + b.score * pb.x) / total,
                   (a.score * pa.y + b.score * pb.y) / total};
  }
  out.score = total;
  const Detection& lead = b.score > a.score ? b : a;
  out.vertical = lead.vertical;
  out.source = lead.source;
  return out;
}

std::vector<Detection> standard_nms(std::span<const Detection> dets, double iou_thresh,
                                    NmsStats* stats) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> keep;
  std::size_t tests = 0;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t k = order[oi];
    if (suppressed[k]) continue;
    keep.push_back(dets[k]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t m = order[oj];
      if (suppressed[m]) continue;
      ++tests;
      if (iou(dets[k].quad, dets[m].quad) > iou_thresh) suppressed[m] = true;
    }
  }
  if (stats) stats->nms_tests += tests;
  return keep;
}

std::vector<Detection> lanms(std::span<const Detection> dets, double merge_iou, double final_iou,
                             NmsStats* stats) {
  std::vector<Detection> merged;
  std::size_t tests = 0;
  for (const Detection& d : dets) {
    if (!merged.empty()) {
      ++tests;
      if (iou(d.quad, merged.back().quad) > merge_iou) {
        merged.back() = weighted_merge(merged.back(), d);
        continue;
      }
    }
    merged.push_back(d);
  }
  if (stats) stats->merge_tests += tests;
  return standard_nms(merged, final_iou, stats);
}

}  // namespace circdet
