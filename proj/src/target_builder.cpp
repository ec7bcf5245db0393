#include "circdet/target_builder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "circdet/errors.hpp"

namespace circdet {

LabelGrid::LabelGrid(GridSpec g)
    : grid(g), cells(static_cast<std::size_t>(g.size) * static_cast<std::size_t>(g.size)) {}

PyramidSpec PyramidSpec::default_pyramid() {
  PyramidSpec p;
  for (int size : {48, 24, 12, 6, 3, 1}) p.grids.push_back(GridSpec{size, 1.5});
  return p;
}

void PyramidSpec::validate() const {
  for (std::size_t k = 0; k < grids.size(); ++k) {
    grids[k].validate();
    if (k > 0 && grids[k].size >= grids[k - 1].size) {
      throw InvalidConfig("pyramid grid sizes must be strictly decreasing");
    }
  }
  if (!(alpha > 0.5 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in (0.5, 1]");
}

double ellipse_score(const RotatedBox& b, Point2 p) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw DegenerateBox("ellipse score needs w, h > 0");
  const double a = 0.5 * b.w;
  const double bb = 0.5 * b.h;
  const double s = std::sin(b.theta);
  const double c = std::cos(b.theta);
  const double qa = a * a * s * s + bb * bb * c * c;
  const double qb = -2.0 * (a * a - bb * bb) * s * c;
  const double qc = a * a * c * c + bb * bb * s * s;
  const double f = a * a * bb * bb;
  const double x = p.x - b.cx;
  const double y = p.y - b.cy;
  const double q = qa * x * x + qb * x * y + qc * y * y;
  if (q >= f) return 0.0;
  return std::sqrt(std::max(0.0, 1.0 - q / f));
}

CellClass classify_cell(double score, double alpha) {
  if (score >= alpha) return CellClass::Text;
  if (score >= 0.5) return CellClass::Ambiguous;
  return CellClass::Negative;
}

bool scale_match(double box_height_px, const GridSpec& grid, double image_size_px) {
  const double cell_h = image_size_px / grid.size;
  const double ratio = box_height_px / cell_h;
  return ratio > 1.0 && ratio < 4.0;
}

CircleAnchor normalized_anchor(const RotatedBox& box_px, double image_size_px) {
  const double s = image_size_px;
  return CircleAnchor{box_px.cx / s, box_px.cy / s, box_px.w * box_px.h / (s * s),
                      0.5 * std::hypot(box_px.w, box_px.h) / s, box_px.theta};
}

std::vector<LabelGrid> build_targets(std::span<const GroundTruthBox> boxes,
                                     const PyramidSpec& pyramid, double image_size_px) {
  pyramid.validate();
  if (!(image_size_px > 0.0)) throw InvalidConfig("image size must be positive");

  std::vector<LabelGrid> out;
  out.reserve(pyramid.grids.size());
  std::vector<std::size_t> matched;
  for (const GridSpec& g : pyramid.grids) {
    LabelGrid labels(g);
    matched.clear();
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      if (scale_match(boxes[k].box.h, g, image_size_px)) matched.push_back(k);
    }
    const double cell = image_size_px / g.size;
    for (int i = 0; i < g.size; ++i) {
      for (int j = 0; j < g.size; ++j) {
        const Point2 p{(j + 0.5) * cell, (i + 0.5) * cell};
        double best = 0.0;
        double best_ignore = 0.0;
        const GroundTruthBox* winner = nullptr;
        for (std::size_t k : matched) {
          const GroundTruthBox& gt = boxes[k];
          const double s = ellipse_score(gt.box, p);
          if (gt.ignore) {
            best_ignore = std::max(best_ignore, s);
            continue;
          }
          if (s <= 0.0) continue;
          if (winner == nullptr || s > best || (s == best && gt.box.area() > winner->box.area())) {
            winner = &gt;
            best = s;
          }
        }

        CellLabel& label = labels.at(i, j);
        label.score = best;
        label.cls = classify_cell(best, pyramid.alpha);
        if (label.cls == CellClass::Text) {
          label.regression = compute_delta(normalized_anchor(winner->box, image_size_px), i, j, g);
          label.vertical = vertical_flag(winner->box.theta);
        } else if (label.cls == CellClass::Negative && best_ignore >= 0.5) {
          label.cls = CellClass::Ambiguous;
          label.score = best_ignore;
        }
      }
    }
    out.push_back(std::move(labels));
  }
  return out;
}

std::vector<std::vector<LabelGrid>> build_targets_batch(
    std::span<const std::vector<GroundTruthBox>> images, const PyramidSpec& pyramid,
    double image_size_px, unsigned threads) {
  pyramid.validate();
  std::vector<std::vector<LabelGrid>> out(images.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, images.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t k = next++; k < images.size() && !failed; k = next++) {
      try {
        out[k] = build_targets(images[k], pyramid, image_size_px);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace circdet
