#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

namespace circdet {

// Image convention throughout: x grows right, y grows DOWN. Rotating by a
// positive angle is therefore clockwise on screen.

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double norm(Point2 a);

/// Rotate v by theta (clockwise on screen in the y-down frame).
Point2 rotate(Point2 v, double theta);

/// Four corners p1..p4.
///
/// Corner order produced by quad_from_rbox (and by circle-anchor decoding) for
/// a box with long edge w, short edge h and angle theta is the box-frame
/// offsets
///
///   p1 = (-w/2, +h/2), p2 = (+w/2, +h/2), p3 = (+w/2, -h/2), p4 = (-w/2, -h/2)
///
/// rotated by theta. In screen terms (theta = 0) that is bottom-left,
/// bottom-right, top-right, top-left, i.e. counter-clockwise on screen and a
/// negative shoelace area. normalize_quad reverses it to the ICDAR-style
/// clockwise-on-screen order (top-left first for theta = 0).
struct Quad {
  std::array<Point2, 4> corners{};

  Point2& operator[](std::size_t i) { return corners[i]; }
  const Point2& operator[](std::size_t i) const { return corners[i]; }
  friend bool operator==(const Quad&, const Quad&) = default;
};

/// Oriented rectangle. Construct through RotatedBox::make, which enforces
/// w >= h > 0 and folds theta into (-pi/2, pi/2]; squares get |theta| <= pi/4.
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;

  /// Canonicalizing constructor. Swaps w/h (adding pi/2 to theta) if h > w.
  /// Throws DegenerateBox for non-positive or non-finite sizes.
  static RotatedBox make(double cx, double cy, double w, double h, double theta);

  double area() const { return w * h; }
  Point2 center() const { return {cx, cy}; }
};

inline constexpr double kDegenerateEps = 1e-12;

/// Fold an angle into (-pi/2, pi/2].
double fold_half_pi(double theta);

/// Shoelace area; positive for clockwise-on-screen order in the y-down frame.
double signed_area(std::span<const Point2> poly);
double signed_area(const Quad& q);
double area(const Quad& q);

bool is_convex(const Quad& q);

/// Positively oriented copy of q. Self-intersecting (bow-tie) input is
/// reordered around its centroid. Throws NonConvexQuad if the result is not
/// convex.
Quad normalize_quad(const Quad& q);

Quad quad_from_rbox(const RotatedBox& b);

/// Best-fit oriented rectangle of a near-rectangular quad. max_skew bounds the
/// relative mismatch of opposite edges and |cos| of the corner angles;
/// infinity disables the check. Throws DegenerateQuad if any edge is shorter
/// than kDegenerateEps, NotRectangular if max_skew is exceeded.
RotatedBox rbox_from_quad(const Quad& q,
                          double max_skew = std::numeric_limits<double>::infinity());

bool contains(const Quad& q, Point2 p);

/// Clip a convex polygon against a convex, positively oriented clip polygon.
std::vector<Point2> clip_convex(std::span<const Point2> subject,
                                std::span<const Point2> clip);

double polygon_intersection_area(const Quad& a, const Quad& b);

/// Intersection over union of two convex quads. Symmetric bit-for-bit; 0 when
/// both quads have zero area.
double iou(const Quad& a, const Quad& b);

}  // namespace circdet
