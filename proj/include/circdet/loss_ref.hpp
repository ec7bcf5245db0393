#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "circdet/anchor_codec.hpp"
#include "circdet/target_builder.hpp"

namespace circdet {

/// Row-major size x size matrix of per-cell predictions. Also used to hold
/// per-cell gradients, which have the same shape.
struct PredictionGrid {
  GridSpec grid;
  std::vector<AnchorDelta> cells;

  explicit PredictionGrid(GridSpec g = {});

  AnchorDelta& at(int i, int j) { return cells[static_cast<std::size_t>(i) * grid.size + j]; }
  const AnchorDelta& at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * grid.size + j];
  }
};

struct LossWeights {
  double lambda_loc = 1.0;
  double lambda_vertical = 1.0;
  double negative_ratio = 3.0;
};

struct LossBreakdown {
  double cls = 0.0;
  double loc = 0.0;
  double vertical = 0.0;
  double total = 0.0;
  std::size_t n_cls = 0;
  std::size_t n_reg = 0;
};

/// Cells taking part in the classification term, flattened over the pyramid
/// in grid order and row-major within a grid.
using SelectionMask = std::vector<bool>;

double smooth_l1(double x);
double smooth_l1_grad(double x);

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[true_class], max-shifted. Throws ClassOutOfRange.
double softmax_ce(std::span<const double> logits, std::size_t true_class);

/// Keeps every non-negative cell plus the floor(ratio * k) negatives with the
/// largest loss, k = number of Text cells. With k = 0 keeps max(1, floor(ratio))
/// negatives. Equal losses are kept in raster order.
SelectionMask hard_negative_select(std::span<const double> cls_losses,
                                   std::span<const CellClass> labels, double ratio = 3.0);
SelectionMask hard_negative_select(std::span<const double> cls_losses, const LabelGrid& labels,
                                   double ratio = 3.0);

/// Mining over a whole image: per-cell cross-entropy of the predictions
/// against the labels, then hard_negative_select on the flattened pyramid.
SelectionMask select_cells(std::span<const PredictionGrid> preds,
                           std::span<const LabelGrid> labels, double ratio = 3.0);

/// cls / max(n_cls, 1) + lambda_loc * loc / max(n_reg, 1)
///   + lambda_vertical * vertical / max(n_reg, 1).
/// Throws ShapeMismatch when the grids do not pair up.
LossBreakdown total_loss(std::span<const PredictionGrid> preds, std::span<const LabelGrid> labels,
                         const LossWeights& w = {});
LossBreakdown total_loss(std::span<const PredictionGrid> preds, std::span<const LabelGrid> labels,
                         const SelectionMask& mask, const LossWeights& w = {});

/// Analytic gradient of total_loss with the mining mask held fixed.
std::vector<PredictionGrid> loss_gradient(std::span<const PredictionGrid> preds,
                                          std::span<const LabelGrid> labels,
                                          const LossWeights& w = {});
std::vector<PredictionGrid> loss_gradient(std::span<const PredictionGrid> preds,
                                          std::span<const LabelGrid> labels,
                                          const SelectionMask& mask, const LossWeights& w = {});

}  // namespace circdet
