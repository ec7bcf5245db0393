#include "circdet/anchor_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "circdet/errors.hpp"

namespace circdet {

namespace {

void check_cell(int i, int j, const GridSpec& g) {
  g.validate();
  if (i < 0 || j < 0 || i >= g.size || j >= g.size) {
    throw InvalidConfig("cell index outside the grid");
  }
}

}  // namespace

void GridSpec::validate() const {
  if (size < 1) throw InvalidConfig("grid size must be >= 1");
  if (!(r_a > 0.0) || !std::isfinite(r_a)) throw InvalidConfig("r_a must be positive");
}

Quad decode_circle_anchor(const CircleAnchor& c) {
  if (!(c.a > 0.0) || !(c.r > 0.0)) throw InvalidAnchor("anchor needs a > 0 and r > 0");
  double ratio = c.a / (2.0 * c.r * c.r);
  if (!std::isfinite(ratio) || ratio > 1.0 + kArcsinSlack) {
    throw InvalidAnchor("anchor area exceeds 2 r^2");
  }
  ratio = std::min(ratio, 1.0);
  const double alpha = 0.5 * std::asin(ratio);

  // p3 carries a minus sign on y relative to p2; with the same sign the two
  // corners coincide at theta = 0.
  const Point2 p2{c.r * std::cos(alpha + c.theta), c.r * std::sin(alpha + c.theta)};
  const Point2 p3{c.r * std::cos(alpha - c.theta), -c.r * std::sin(alpha - c.theta)};
  const Point2 center{c.x, c.y};
  return Quad{{center - p3, center + p2, center + p3, center - p2}};
}

CircleAnchor encode_circle_anchor(const RotatedBox& b) {
  return CircleAnchor{b.cx, b.cy, b.w * b.h, 0.5 * std::hypot(b.w, b.h), b.theta};
}

CircleAnchor apply_delta(const Regression& d, int cell_i, int cell_j, const GridSpec& g) {
  check_cell(cell_i, cell_j, g);
  const double n = g.size;
  CircleAnchor c{(d.dx * g.r_a + cell_j + 0.5) / n,
                 (d.dy * g.r_a + cell_i + 0.5) / n,
                 std::exp(d.da) * g.r_a / n,
                 std::exp(d.dr) * g.r_a / n,
                 std::isfinite(d.dtheta) ? fold_half_pi(d.dtheta) : d.dtheta};
  if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.a) ||
      !std::isfinite(c.r) || !std::isfinite(c.theta)) {
    throw NonFinite("decoded anchor is not finite");
  }
  return c;
}

Regression compute_delta(const CircleAnchor& c, int cell_i, int cell_j, const GridSpec& g) {
  check_cell(cell_i, cell_j, g);
  if (!(c.a > 0.0) || !(c.r > 0.0)) throw NonPositive("anchor area and radius must be positive");
  const double n = g.size;
  return Regression{(c.x * n - cell_j - 0.5) / g.r_a,
                    (c.y * n - cell_i - 0.5) / g.r_a,
                    std::log(c.a * n / g.r_a),
                    std::log(c.r * n / g.r_a),
                    c.theta};
}

int vertical_flag(double theta) {
  // Absorbs the rounding of 45 degrees converted to radians.
  constexpr double kBoundary = std::numbers::pi / 4.0 + 1e-12;
  return std::abs(theta) <= kBoundary ? 0 : 1;
}

}  // namespace circdet
