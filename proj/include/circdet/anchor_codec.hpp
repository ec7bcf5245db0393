#pragma once

#include <array>
#include <cstddef>

#include "circdet/geometry.hpp"

namespace circdet {

/// Circle-anchor form of an oriented rectangle: center, area, half-diagonal
/// radius and long-edge angle. Valid iff a > 0, r > 0 and a <= 2 r^2.
struct CircleAnchor {
  double x = 0.0;
  double y = 0.0;
  double a = 0.0;
  double r = 0.0;
  double theta = 0.0;
};

inline constexpr std::size_t kNumClasses = 3;  // background, text, ambiguous
inline constexpr std::size_t kRegressionSize = 5;

enum class CellClass : unsigned char { Negative = 0, Text = 1, Ambiguous = 2 };

/// Grid-relative regression offsets, in the order stored on disk and used by
/// the loss: dx, dy, da, dr, dtheta.
struct Regression {
  double dx = 0.0;
  double dy = 0.0;
  double da = 0.0;
  double dr = 0.0;
  double dtheta = 0.0;

  std::array<double, kRegressionSize> as_array() const { return {dx, dy, da, dr, dtheta}; }
  static Regression from_array(const std::array<double, kRegressionSize>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  friend bool operator==(const Regression&, const Regression&) = default;
};

/// Per-cell network output.
struct AnchorDelta {
  std::array<double, kNumClasses> logits{};
  Regression reg{};
  std::array<double, 2> vertical_logits{};
};

/// A size x size feature map; r_a is the anchor scale factor.
struct GridSpec {
  int size = 1;
  double r_a = 1.5;

  /// Throws InvalidConfig unless size >= 1 and r_a > 0.
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Slack on a <= 2 r^2 before decoding is rejected; within it the arcsin
/// argument is clamped to 1.
inline constexpr double kArcsinSlack = 1e-9;

Quad decode_circle_anchor(const CircleAnchor& c);

CircleAnchor encode_circle_anchor(const RotatedBox& b);

/// Cell (i, j) is row i, column j. Coordinates are normalized to [0, 1] with
/// cell centers at ((j + 0.5) / size, (i + 0.5) / size):
///
///   x = (dx * r_a + j + 0.5) / size        r = exp(dr) * r_a / size
///   y = (dy * r_a + i + 0.5) / size        a = exp(da) * r_a / size
///
/// Throws NonFinite if any result overflows.
CircleAnchor apply_delta(const Regression& d, int cell_i, int cell_j, const GridSpec& g);

/// Inverse of apply_delta. Throws NonPositive if c.a or c.r <= 0.
Regression compute_delta(const CircleAnchor& c, int cell_i, int cell_j, const GridSpec& g);

/// 0 for |theta| <= 45 degrees (inclusive), 1 otherwise.
int vertical_flag(double theta);

}  // namespace circdet
