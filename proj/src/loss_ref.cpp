#include "circdet/loss_ref.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "circdet/errors.hpp"

namespace circdet {

namespace {

// Neumaier summation; keeps reductions insensitive to term order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void check_shapes(std::span<const PredictionGrid> preds, std::span<const LabelGrid> labels) {
  if (preds.size() != labels.size()) throw ShapeMismatch("prediction and label pyramids differ");
  for (std::size_t g = 0; g < preds.size(); ++g) {
    if (preds[g].grid.size != labels[g].grid.size ||
        preds[g].cells.size() != labels[g].cells.size() ||
        labels[g].cells.size() !=
            static_cast<std::size_t>(labels[g].grid.size) * labels[g].grid.size) {
      throw ShapeMismatch("grid " + std::to_string(g) + " shape mismatch");
    }
  }
}

std::size_t cell_count(std::span<const LabelGrid> labels) {
  std::size_t n = 0;
  for (const auto& l : labels) n += l.cells.size();
  return n;
}

std::size_t class_index(CellClass c) { return static_cast<std::size_t>(c); }

std::size_t text_count(std::span<const LabelGrid> labels) {
  std::size_t k = 0;
  for (const auto& l : labels) {
    for (const auto& c : l.cells) k += c.cls == CellClass::Text;
  }
  return k;
}

}  // namespace

PredictionGrid::PredictionGrid(GridSpec g)
    : grid(g), cells(static_cast<std::size_t>(g.size) * static_cast<std::size_t>(g.size)) {}

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (x >= 1.0) return 1.0;
  if (x <= -1.0) return -1.0;
  return x;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

double softmax_ce(std::span<const double> logits, std::size_t true_class) {
  if (logits.size() < 2 || true_class >= logits.size()) {
    throw ClassOutOfRange("class index " + std::to_string(true_class) + " outside " +
                          std::to_string(logits.size()) + " logits");
  }
  // The max term contributes exactly 1; log1p of the rest keeps confident
  // predictions accurate to full relative precision.
  const auto top = std::max_element(logits.begin(), logits.end());
  const double m = *top;
  double rest = 0.0;
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it != top) rest += std::exp(*it - m);
  }
  return std::log1p(rest) - (logits[true_class] - m);
}

SelectionMask hard_negative_select(std::span<const double> cls_losses,
                                   std::span<const CellClass> labels, double ratio) {
  if (cls_losses.size() != labels.size()) throw ShapeMismatch("loss and label counts differ");
  if (!(ratio > 0.0)) throw InvalidConfig("negative ratio must be positive");

  SelectionMask keep(labels.size(), false);
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == CellClass::Negative) {
      negatives.push_back(k);
    } else {
      keep[k] = true;
      positives += labels[k] == CellClass::Text;
    }
  }
  const std::size_t quota =
      positives == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(ratio)))
                     : static_cast<std::size_t>(std::floor(ratio * static_cast<double>(positives)));
  const std::size_t n_keep = std::min(quota, negatives.size());
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_keep),
                    negatives.end(), [&](std::size_t a, std::size_t b) {
                      if (cls_losses[a] != cls_losses[b]) return cls_losses[a] > cls_losses[b];
                      return a < b;
                    });
  for (std::size_t k = 0; k < n_keep; ++k) keep[negatives[k]] = true;
  return keep;
}

SelectionMask hard_negative_select(std::span<const double> cls_losses, const LabelGrid& labels,
                                   double ratio) {
  std::vector<CellClass> classes;
  classes.reserve(labels.cells.size());
  for (const auto& c : labels.cells) classes.push_back(c.cls);
  return hard_negative_select(cls_losses, classes, ratio);
}

SelectionMask select_cells(std::span<const PredictionGrid> preds,
                           std::span<const LabelGrid> labels, double ratio) {
  check_shapes(preds, labels);
  std::vector<double> losses;
  std::vector<CellClass> classes;
  losses.reserve(cell_count(labels));
  classes.reserve(cell_count(labels));
  for (std::size_t g = 0; g < preds.size(); ++g) {
    for (std::size_t c = 0; c < preds[g].cells.size(); ++c) {
      const CellClass cls = labels[g].cells[c].cls;
      losses.push_back(softmax_ce(preds[g].cells[c].logits, class_index(cls)));
      classes.push_back(cls);
    }
  }
  return hard_negative_select(losses, classes, ratio);
}

LossBreakdown total_loss(std::span<const PredictionGrid> preds, std::span<const LabelGrid> labels,
                         const LossWeights& w) {
  return total_loss(preds, labels, select_cells(preds, labels, w.negative_ratio), w);
}

LossBreakdown total_loss(std::span<const PredictionGrid> preds, std::span<const LabelGrid> labels,
                         const SelectionMask& mask, const LossWeights& w) {
  check_shapes(preds, labels);
  if (mask.size() != cell_count(labels)) throw ShapeMismatch("selection mask size mismatch");

  CompensatedSum cls, loc, vert;
  LossBreakdown out;
  std::size_t flat = 0;
  for (std::size_t g = 0; g < preds.size(); ++g) {
    for (std::size_t c = 0; c < preds[g].cells.size(); ++c, ++flat) {
      const AnchorDelta& p = preds[g].cells[c];
      const CellLabel& l = labels[g].cells[c];
      if (mask[flat]) {
        cls.add(softmax_ce(p.logits, class_index(l.cls)));
        ++out.n_cls;
      }
      if (l.cls != CellClass::Text) continue;
      if (!l.regression || !l.vertical) throw ShapeMismatch("text cell without regression target");
      const auto pr = p.reg.as_array();
      const auto tr = l.regression->as_array();
      for (std::size_t k = 0; k < kRegressionSize; ++k) loc.add(smooth_l1(pr[k] - tr[k]));
      vert.add(softmax_ce(p.vertical_logits, static_cast<std::size_t>(*l.vertical)));
      ++out.n_reg;
    }
  }
  out.cls = cls.value();
  out.loc = loc.value();
  out.vertical = vert.value();
  const double n_cls = static_cast<double>(std::max<std::size_t>(out.n_cls, 1));
  const double n_reg = static_cast<double>(std::max<std::size_t>(out.n_reg, 1));
  out.total = out.cls / n_cls + w.lambda_loc * out.loc / n_reg +
              w.lambda_vertical * out.vertical / n_reg;
  return out;
}

std::vector<PredictionGrid> loss_gradient(std::span<const PredictionGrid> preds,
                                          std::span<const LabelGrid> labels,
                                          const LossWeights& w) {
  return loss_gradient(preds, labels, select_cells(preds, labels, w.negative_ratio), w);
}

std::vector<PredictionGrid> loss_gradient(std::span<const PredictionGrid> preds,
                                          std::span<const LabelGrid> labels,
                                          const SelectionMask& mask, const LossWeights& w) {
  check_shapes(preds, labels);
  if (mask.size() != cell_count(labels)) throw ShapeMismatch("selection mask size mismatch");

  const std::size_t n_sel = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  const double cls_scale = 1.0 / static_cast<double>(std::max<std::size_t>(n_sel, 1));
  const double reg_norm = static_cast<double>(std::max<std::size_t>(text_count(labels), 1));
  const double loc_scale = w.lambda_loc / reg_norm;
  const double vert_scale = w.lambda_vertical / reg_norm;

  std::vector<PredictionGrid> grads;
  grads.reserve(preds.size());
  std::size_t flat = 0;
  for (std::size_t g = 0; g < preds.size(); ++g) {
    PredictionGrid out(preds[g].grid);
    for (std::size_t c = 0; c < preds[g].cells.size(); ++c, ++flat) {
      const AnchorDelta& p = preds[g].cells[c];
      const CellLabel& l = labels[g].cells[c];
      AnchorDelta& d = out.cells[c];
      if (mask[flat]) {
        const auto prob = softmax(p.logits);
        for (std::size_t k = 0; k < kNumClasses; ++k) {
          d.logits[k] = cls_scale * (prob[k] - (k == class_index(l.cls) ? 1.0 : 0.0));
        }
      }
      if (l.cls != CellClass::Text) continue;
      if (!l.regression || !l.vertical) throw ShapeMismatch("text cell without regression target");
      const auto pr = p.reg.as_array();
      const auto tr = l.regression->as_array();
      std::array<double, kRegressionSize> gr{};
      for (std::size_t k = 0; k < kRegressionSize; ++k) gr[k] = loc_scale * smooth_l1_grad(pr[k] - tr[k]);
      d.reg = Regression::from_array(gr);
      const auto pv = softmax(p.vertical_logits);
      for (std::size_t k = 0; k < 2; ++k) {
        d.vertical_logits[k] =
            vert_scale * (pv[k] - (k == static_cast<std::size_t>(*l.vertical) ? 1.0 : 0.0));
      }
    }
    grads.push_back(std::move(out));
  }
  return grads;
}

}  // namespace circdet
