#include "circdet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "circdet/errors.hpp"

namespace circdet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

// Relative tolerance for treating a long/short edge pair as equal.
constexpr double kSquareTieRel = 1e-9;

bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool lexicographically_less(const Quad& a, const Quad& b) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (a[i].x != b[i].x) return a[i].x < b[i].x;
    if (a[i].y != b[i].y) return a[i].y < b[i].y;
  }
  return false;
}

}  // namespace

double norm(Point2 a) { return std::hypot(a.x, a.y); }

Point2 rotate(Point2 v, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double fold_half_pi(double theta) {
  if (theta > -kHalfPi && theta <= kHalfPi) return theta;
  double t = std::fmod(theta + kHalfPi, kPi);
  if (t <= 0.0) t += kPi;
  return t - kHalfPi;
}

RotatedBox RotatedBox::make(double cx, double cy, double w, double h, double theta) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(theta)) {
    throw DegenerateBox("rotated box has non-finite center or angle");
  }
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h)) {
    throw DegenerateBox("rotated box needs finite positive w and h");
  }
  if (h > w) {
    std::swap(w, h);
    theta += kHalfPi;
  }
  theta = fold_half_pi(theta);
  if (w == h && std::abs(theta) > kHalfPi / 2.0) {
    theta += theta > 0.0 ? -kHalfPi : kHalfPi;
  }
  return RotatedBox{cx, cy, w, h, theta};
}

double signed_area(std::span<const Point2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

double signed_area(const Quad& q) { return signed_area(std::span<const Point2>(q.corners)); }

double area(const Quad& q) { return std::abs(signed_area(q)); }

bool is_convex(const Quad& q) {
  const double orient = signed_area(q);
  double scale = 0.0;
  for (std::size_t i = 0; i < 4; ++i) scale = std::max(scale, norm(q[(i + 1) % 4] - q[i]));
  const double tol = 1e-12 * scale * scale;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 e0 = q[(i + 1) % 4] - q[i];
    const Point2 e1 = q[(i + 2) % 4] - q[(i + 1) % 4];
    const double turn = cross(e0, e1);
    if (orient >= 0.0 ? turn < -tol : turn > tol) return false;
  }
  return true;
}

Quad normalize_quad(const Quad& q) {
  Quad out = q;
  if (segments_cross(q[0], q[1], q[2], q[3]) || segments_cross(q[1], q[2], q[3], q[0])) {
    const Point2 c = 0.25 * (q[0] + q[1] + q[2] + q[3]);
    std::stable_sort(out.corners.begin(), out.corners.end(), [c](Point2 a, Point2 b) {
      return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
  }
  if (signed_area(out) < 0.0) std::reverse(out.corners.begin(), out.corners.end());
  if (!is_convex(out)) throw NonConvexQuad("quadrilateral is not convex");
  return out;
}

Quad quad_from_rbox(const RotatedBox& b) {
  const double hw = 0.5 * b.w;
  const double hh = 0.5 * b.h;
  const Point2 c = b.center();
  return Quad{{c + rotate({-hw, hh}, b.theta), c + rotate({hw, hh}, b.theta),
               c + rotate({hw, -hh}, b.theta), c + rotate({-hw, -hh}, b.theta)}};
}

RotatedBox rbox_from_quad(const Quad& q, double max_skew) {
  std::array<Point2, 4> e{};
  std::array<double, 4> len{};
  for (std::size_t i = 0; i < 4; ++i) {
    e[i] = q[(i + 1) % 4] - q[i];
    len[i] = norm(e[i]);
    if (!(len[i] >= kDegenerateEps)) throw DegenerateQuad("quad has a degenerate edge");
  }

  if (std::isfinite(max_skew)) {
    const double skew_a = std::abs(len[0] - len[2]) / std::max(len[0], len[2]);
    const double skew_b = std::abs(len[1] - len[3]) / std::max(len[1], len[3]);
    double worst = std::max(skew_a, skew_b);
    for (std::size_t i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(dot(e[i], e[(i + 1) % 4])) / (len[i] * len[(i + 1) % 4]));
    }
    if (worst > max_skew) throw NotRectangular("quad is not close enough to a rectangle");
  }

  const Point2 center = 0.25 * (q[0] + q[1] + q[2] + q[3]);
  const double pair_a = 0.5 * (len[0] + len[2]);
  const double pair_b = 0.5 * (len[1] + len[3]);
  // Opposite edges run in opposite directions; subtracting averages them.
  const Point2 dir_a = e[0] - e[2];
  const Point2 dir_b = e[1] - e[3];
  const double theta_a = fold_half_pi(std::atan2(dir_a.y, dir_a.x));
  const double theta_b = fold_half_pi(std::atan2(dir_b.y, dir_b.x));

  const double w = std::max(pair_a, pair_b);
  const double h = std::min(pair_a, pair_b);
  double theta = 0.0;
  if (pair_a - pair_b > kSquareTieRel * w) {
    theta = theta_a;
  } else if (pair_b - pair_a > kSquareTieRel * w) {
    theta = theta_b;
  } else if (std::abs(theta_a) != std::abs(theta_b)) {
    theta = std::abs(theta_a) < std::abs(theta_b) ? theta_a : theta_b;
  } else {
    theta = std::max(theta_a, theta_b);
  }
  RotatedBox out{center.x, center.y, w, h, theta};
  if (!(h > 0.0)) throw DegenerateQuad("quad has zero extent");
  return out;
}

bool contains(const Quad& q, Point2 p) {
  const double orient = signed_area(q) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (orient * cross(q[(i + 1) % 4] - q[i], p - q[i]) < 0.0) return false;
  }
  return true;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> out(subject.begin(), subject.end());
  std::vector<Point2> next;
  next.reserve(out.size() + clip.size());
  const std::size_t m = clip.size();
  for (std::size_t k = 0; k < m && !out.empty(); ++k) {
    const Point2 c0 = clip[k];
    const Point2 edge = clip[(k + 1) % m] - c0;
    next.clear();
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 s = out[i];
      const Point2 t = out[(i + 1) % n];
      const double cs = cross(edge, s - c0);
      const double ct = cross(edge, t - c0);
      if (cs >= 0.0) next.push_back(s);
      if ((cs >= 0.0) != (ct >= 0.0)) {
        const double u = cs / (cs - ct);
        next.push_back(s + u * (t - s));
      }
    }
    out.swap(next);
  }
  return out;
}

double polygon_intersection_area(const Quad& a, const Quad& b) {
  Quad na = normalize_quad(a);
  Quad nb = normalize_quad(b);
  if (lexicographically_less(nb, na)) std::swap(na, nb);
  const auto poly = clip_convex(na.corners, nb.corners);
  return std::abs(signed_area(poly));
}

double iou(const Quad& a, const Quad& b) {
  Quad na = normalize_quad(a);
  Quad nb = normalize_quad(b);
  const double area_a = signed_area(na);
  const double area_b = signed_area(nb);
  if (area_a <= 0.0 && area_b <= 0.0) return 0.0;
  if (lexicographically_less(nb, na)) std::swap(na, nb);
  const double inter = std::abs(signed_area(clip_convex(na.corners, nb.corners)));
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace circdet
