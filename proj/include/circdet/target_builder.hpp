#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "circdet/anchor_codec.hpp"
#include "circdet/geometry.hpp"

namespace circdet {

struct CellLabel {
  CellClass cls = CellClass::Negative;
  std::optional<Regression> regression;  // present iff cls == Text
  std::optional<int> vertical;           // present iff cls == Text
  double score = 0.0;

  friend bool operator==(const CellLabel&, const CellLabel&) = default;
};

/// Row-major size x size matrix of cell labels.
struct LabelGrid {
  GridSpec grid;
  std::vector<CellLabel> cells;

  explicit LabelGrid(GridSpec g = {});

  CellLabel& at(int i, int j) { return cells[static_cast<std::size_t>(i) * grid.size + j]; }
  const CellLabel& at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * grid.size + j];
  }
  friend bool operator==(const LabelGrid&, const LabelGrid&) = default;
};

struct PyramidSpec {
  std::vector<GridSpec> grids;
  double alpha = 0.7;

  /// Six maps for a 384 x 384 input: 48, 24, 12, 6, 3 and the global 1 x 1.
  static PyramidSpec default_pyramid();

  /// Sizes strictly decreasing, each grid valid, 0.5 < alpha <= 1.
  void validate() const;
};

struct GroundTruthBox {
  RotatedBox box;
  bool ignore = false;
};

/// Semi-ellipse score of point p against box b, both in the same units:
/// 1 at the center, falling to exactly 0 on and outside the inscribed ellipse.
/// Throws DegenerateBox if w or h <= 0.
double ellipse_score(const RotatedBox& b, Point2 p);

/// Text when score >= alpha, Ambiguous when 0.5 <= score < alpha, else Negative.
CellClass classify_cell(double score, double alpha);

/// True iff 1 < box_height / cell_height < 4, cell_height = image_size / grid.size.
bool scale_match(double box_height_px, const GridSpec& grid, double image_size_px);

/// Labels for every grid of the pyramid on a square image of side
/// image_size_px. Boxes are in pixels. Each cell center is scored against the
/// scale-matched non-ignore boxes and takes the class of the best one (ties go
/// to the larger box, then to the earlier box). A cell left negative that an
/// ignore box scores at >= 0.5 becomes Ambiguous.
std::vector<LabelGrid> build_targets(std::span<const GroundTruthBox> boxes,
                                     const PyramidSpec& pyramid, double image_size_px);

/// build_targets over many images, spread across up to `threads` workers.
/// Output order follows input order regardless of scheduling.
std::vector<std::vector<LabelGrid>> build_targets_batch(
    std::span<const std::vector<GroundTruthBox>> images, const PyramidSpec& pyramid,
    double image_size_px, unsigned threads = 0);

/// Box in pixels -> circle anchor in normalized [0, 1] image coordinates.
CircleAnchor normalized_anchor(const RotatedBox& box_px, double image_size_px);

}  // namespace circdet
