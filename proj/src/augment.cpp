#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "circdet/data_io.hpp"

namespace circdet {

namespace {

// Portable draws: the engine and seed_seq are fully specified by the
// standard, the distributions are not.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Point2 quad_center(const Quad& q) { return 0.25 * (q[0] + q[1] + q[2] + q[3]); }

struct CropResult {
  bool keep = false;
  Quad quad;
};

CropResult crop_annotation(const Quad& q, double cw, double ch, double min_residual) {
  const Point2 c = quad_center(q);
  if (c.x < 0.0 || c.y < 0.0 || c.x > cw || c.y > ch) return {};
  const bool inside = std::all_of(q.corners.begin(), q.corners.end(), [&](Point2 p) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= cw && p.y <= ch;
  });
  if (inside) return {true, q};

  const double full = area(q);
  if (!(full > 0.0)) return {};
  const std::array<Point2, 4> rect{{{0.0, 0.0}, {cw, 0.0}, {cw, ch}, {0.0, ch}}};
  const auto clipped = clip_convex(q.corners, rect);
  if (std::abs(signed_area(clipped)) < min_residual * full) return {};

  double theta = 0.0;
  try {
    theta = rbox_from_quad(q).theta;
  } catch (const Error&) {
    return {};
  }
  const Point2 u{std::cos(theta), std::sin(theta)};
  const Point2 v{-u.y, u.x};
  double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
  for (Point2 p : clipped) {
    umin = std::min(umin, dot(p, u));
    umax = std::max(umax, dot(p, u));
    vmin = std::min(vmin, dot(p, v));
    vmax = std::max(vmax, dot(p, v));
  }
  Quad fit{{umin * u + vmin * v, umax * u + vmin * v, umax * u + vmax * v, umin * u + vmax * v}};
  for (Point2& p : fit.corners) {
    p.x = std::clamp(p.x, 0.0, cw);
    p.y = std::clamp(p.y, 0.0, ch);
  }
  try {
    fit = normalize_quad(fit);
  } catch (const NonConvexQuad&) {
    return {};
  }
  if (!(area(fit) > 0.0)) return {};
  return {true, fit};
}

// Exact values at the right angles keep quarter turns lossless.
void angle_trig(double deg, double& c, double& s) {
  const double m = std::fmod(deg, 360.0);
  const double r = m < 0.0 ? m + 360.0 : m;
  if (r == 0.0) { c = 1.0; s = 0.0; return; }
  if (r == 90.0) { c = 0.0; s = 1.0; return; }
  if (r == 180.0) { c = -1.0; s = 0.0; return; }
  if (r == 270.0) { c = 0.0; s = -1.0; return; }
  const double rad = deg * std::numbers::pi / 180.0;
  c = std::cos(rad);
  s = std::sin(rad);
}

}  // namespace

AugmentDraw draw_augment(const AugmentConfig& cfg, std::uint64_t draw_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(draw_index),
                    static_cast<std::uint32_t>(draw_index >> 32)};
  std::mt19937_64 rng(seq);
  AugmentDraw d;
  d.canvas_scale = uniform(rng, cfg.canvas_range[0], cfg.canvas_range[1]);
  d.canvas_x = uniform01(rng);
  d.canvas_y = uniform01(rng);
  d.crop_scale = uniform(rng, cfg.crop_scale_range[0], cfg.crop_scale_range[1]);
  d.crop_x = uniform01(rng);
  d.crop_y = uniform01(rng);
  d.flip = uniform01(rng) < cfg.flip_prob;
  if (!cfg.angle_set.empty()) d.angle_deg = cfg.angle_set[rng() % cfg.angle_set.size()];
  if (!cfg.use_canvas) d.canvas_scale = 1.0;
  return d;
}

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, std::uint64_t draw_index) {
  return augment_sample(s, cfg, draw_augment(cfg, draw_index));
}

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, const AugmentDraw& draw) {
  if (s.width <= 0 || s.height <= 0) throw InvalidConfig("sample needs positive dimensions");
  Sample out = s;

  auto translate = [&out](double dx, double dy) {
    for (Annotation& a : out.annotations) {
      for (Point2& p : a.quad.corners) p = {p.x + dx, p.y + dy};
    }
  };

  if (cfg.use_canvas && draw.canvas_scale != 1.0) {
    const int cw = std::max(s.width, static_cast<int>(std::lround(draw.canvas_scale * s.width)));
    const int ch = std::max(s.height, static_cast<int>(std::lround(draw.canvas_scale * s.height)));
    translate(std::floor(draw.canvas_x * (cw - out.width)), std::floor(draw.canvas_y * (ch - out.height)));
    out.width = cw;
    out.height = ch;
  }

  {
    const int cw = std::clamp(static_cast<int>(std::lround(draw.crop_scale * out.width)), 1, out.width);
    const int ch = std::clamp(static_cast<int>(std::lround(draw.crop_scale * out.height)), 1, out.height);
    const double x0 = std::floor(draw.crop_x * (out.width - cw));
    const double y0 = std::floor(draw.crop_y * (out.height - ch));
    if (x0 != 0.0 || y0 != 0.0) translate(-x0, -y0);
    std::vector<Annotation> kept;
    for (const Annotation& a : out.annotations) {
      const CropResult r = crop_annotation(a.quad, cw, ch, cfg.min_residual_area);
      if (r.keep) kept.push_back(Annotation{r.quad, a.text, a.ignore});
    }
    out.annotations = std::move(kept);
    out.width = cw;
    out.height = ch;
  }

  if (draw.flip) {
    const double w = out.width;
    for (Annotation& a : out.annotations) {
      Quad m;
      // Mirroring reverses orientation; swapping within pairs restores it and
      // makes the flip an involution.
      constexpr std::array<std::size_t, 4> src{1, 0, 3, 2};
      for (std::size_t k = 0; k < 4; ++k) m[k] = {w - a.quad[src[k]].x, a.quad[src[k]].y};
      a.quad = m;
    }
  }

  if (draw.angle_deg != 0.0) {
    double c = 1.0, sn = 0.0;
    angle_trig(draw.angle_deg, c, sn);
    const double w = out.width;
    const double h = out.height;
    const int nw = static_cast<int>(std::ceil(std::abs(w * c) + std::abs(h * sn) - 1e-9));
    const int nh = static_cast<int>(std::ceil(std::abs(w * sn) + std::abs(h * c) - 1e-9));
    const Point2 from{0.5 * w, 0.5 * h};
    const Point2 to{0.5 * nw, 0.5 * nh};
    for (Annotation& a : out.annotations) {
      for (Point2& p : a.quad.corners) {
        const Point2 d = p - from;
        p = to + Point2{c * d.x - sn * d.y, sn * d.x + c * d.y};
      }
    }
    out.width = nw;
    out.height = nh;
  }

  if (cfg.require_nonempty && out.annotations.empty()) {
    throw EmptyResult("no annotation survived augmentation of " + s.image_id);
  }
  return out;
}

}  // namespace circdet
