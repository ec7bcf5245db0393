#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "circdet/postprocess.hpp"
#include "circdet/synthetic.hpp"
#include "oracles.hpp"

using namespace circdet;

namespace {

Quad square(double x, double y, double side = 1.0) {
  return Quad{{Point2{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}}};
}

Detection det(const Quad& q, double score, Provenance src = {}) { return Detection{q, score, 0, src}; }

bool same(const Detection& a, const Detection& b) {
  return a.quad == b.quad && a.score == b.score && a.vertical == b.vertical && a.source == b.source;
}

bool same(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!same(a[k], b[k])) return false;
  }
  return true;
}

std::vector<Detection> random_set(oracle::Rng& rng, int n) {
  std::vector<Detection> out;
  for (int k = 0; k < n; ++k) {
    const RotatedBox b = RotatedBox::make(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(5, 30),
                                          rng.uniform(3, 10), oracle::half_open_angle(rng));
    const double score = std::round(rng.uniform(0.5, 1.0) * 20) / 20;
    out.push_back(det(quad_from_rbox(b), score, {8, k / 8, k % 8}));
  }
  return out;
}

}  // namespace

TEST_CASE("raster order") {
  CHECK(raster_before({48, 5, 5}, {24, 0, 0}));
  CHECK(raster_before({24, 0, 9}, {24, 1, 0}));
  CHECK(raster_before({24, 1, 0}, {24, 1, 1}));
  CHECK_FALSE(raster_before({24, 1, 1}, {24, 1, 1}));
}

TEST_CASE("filter_by_confidence") {
  PredictionGrid bg(GridSpec{4, 1.5});
  for (auto& c : bg.cells) c.logits = {5, -5, -5};
  CHECK(filter_by_confidence({&bg, 1}).empty());

  PredictionGrid one(GridSpec{4, 1.5});
  for (auto& c : one.cells) c.logits = {5, -5, -5};
  const double p = 0.9;
  one.at(2, 1).logits = {0, std::log(p / (1 - p) * 2), 0};
  one.at(2, 1).reg = compute_delta(CircleAnchor{0.3, 0.6, 0.02, 0.15, 0.4}, 2, 1, one.grid);
  one.at(2, 1).vertical_logits = {0, 1};
  const auto dets = filter_by_confidence({&one, 1}, 0.5, 100.0);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].score == doctest::Approx(0.9));
  CHECK(dets[0].vertical == 1);
  CHECK(dets[0].source == Provenance{4, 2, 1});
  const Quad ref = decode_circle_anchor(apply_delta(one.at(2, 1).reg, 2, 1, one.grid));
  for (int k = 0; k < 4; ++k) {
    CHECK(dets[0].quad[k].x == doctest::Approx(100 * ref[k].x));
    CHECK(dets[0].quad[k].y == doctest::Approx(100 * ref[k].y));
  }
  CHECK(filter_by_confidence({&one, 1}, 1.0).empty());

  one.at(2, 1).reg.da += 5;  // a > 2 r^2: not a valid anchor
  CHECK(filter_by_confidence({&one, 1}).empty());
}

TEST_CASE("filter_by_confidence orders larger grids first") {
  std::vector<PredictionGrid> grids{PredictionGrid(GridSpec{2, 1.5}), PredictionGrid(GridSpec{4, 1.5})};
  for (auto& g : grids) {
    for (auto& c : g.cells) {
      c.logits = {0, 5, 0};
      c.reg.da = -3;
    }
  }
  const auto dets = filter_by_confidence(grids);
  REQUIRE(dets.size() == 20);
  for (std::size_t k = 1; k < dets.size(); ++k) CHECK(raster_before(dets[k - 1].source, dets[k].source));
}

TEST_CASE("weighted_merge") {
  const Detection a = det(square(0, 0), 0.9);
  const Detection b = det(square(0, 0), 0.6);
  const Detection m = weighted_merge(a, b);
  CHECK(m.score == doctest::Approx(1.5));
  for (int k = 0; k < 4; ++k) {
    CHECK(m.quad[k].x == doctest::Approx(a.quad[k].x));
    CHECK(m.quad[k].y == doctest::Approx(a.quad[k].y));
  }

  const Detection off = weighted_merge(det(square(0, 0), 0.5), det(square(0.2, 0), 0.5));
  CHECK(off.score == 1.0);
  const Quad expect = square(0.1, 0);
  for (int k = 0; k < 4; ++k) {
    CHECK(off.quad[k].x == doctest::Approx(expect[k].x));
    CHECK(off.quad[k].y == doctest::Approx(expect[k].y));
  }

  // Corner order and orientation of the second operand do not matter.
  Quad shuffled = square(0.2, 0);
  std::reverse(shuffled.corners.begin(), shuffled.corners.end());
  std::rotate(shuffled.corners.begin(), shuffled.corners.begin() + 1, shuffled.corners.end());
  const Detection off2 = weighted_merge(det(square(0, 0), 0.5), det(shuffled, 0.5));
  CHECK(oracle::corner_set_distance(off2.quad, {expect.corners.begin(), expect.corners.end()}) < 1e-12);
}

TEST_CASE("weighted_merge is symmetric and follows the stronger operand's metadata") {
  oracle::Rng rng(1);
  for (int n = 0; n < 500; ++n) {
    const RotatedBox b = oracle::random_box(rng, 5, 30, 20);
    const RotatedBox c = RotatedBox::make(b.cx + rng.uniform(-1, 1), b.cy + rng.uniform(-1, 1), b.w * 1.05,
                                          b.h * 0.95, b.theta + rng.uniform(-0.05, 0.05));
    Detection x = det(quad_from_rbox(b), rng.uniform(0.5, 1), {48, 1, 2});
    Detection y = det(quad_from_rbox(c), rng.uniform(0.5, 1), {48, 1, 3});
    x.vertical = 0;
    y.vertical = 1;
    const Detection xy = weighted_merge(x, y), yx = weighted_merge(y, x);
    CHECK(oracle::corner_set_distance(xy.quad, {yx.quad.corners.begin(), yx.quad.corners.end()}) < 1e-12);
    const Detection& lead = x.score >= y.score ? x : y;
    CHECK(xy.vertical == lead.vertical);
    CHECK(xy.source == lead.source);
  }
}

TEST_CASE("standard_nms basics") {
  const std::vector<Detection> disjoint{det(square(0, 0), 0.9), det(square(5, 0), 0.8), det(square(9, 9), 0.7)};
  CHECK(standard_nms(disjoint).size() == 3);

  const std::vector<Detection> twins{det(square(0, 0), 0.8), det(square(0, 0), 0.9)};
  const auto kept = standard_nms(twins);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);

  const std::vector<Detection> tie{det(square(0, 0), 0.9, {1, 0, 0}), det(square(0, 0), 0.9, {1, 0, 1})};
  CHECK(standard_nms(tie)[0].source == Provenance{1, 0, 0});
  CHECK(standard_nms({}).empty());
}

TEST_CASE("standard_nms equals the definition and is an antichain") {
  oracle::Rng rng(2);
  for (int n = 0; n < 200; ++n) {
    const auto dets = random_set(rng, rng.integer(0, 40));
    const double thr = rng.uniform(0.1, 0.7);
    const auto kept = standard_nms(dets, thr);
    CHECK(same(kept, oracle::brute_nms(dets, thr)));
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) CHECK(iou(kept[a].quad, kept[b].quad) <= thr);
    }
  }
}

TEST_CASE("lanms with merging disabled is standard_nms") {
  oracle::Rng rng(3);
  for (int n = 0; n < 200; ++n) {
    const auto dets = random_set(rng, rng.integer(0, 40));
    NmsStats stats;
    CHECK(same(lanms(dets, 1.0, 0.5, &stats), standard_nms(dets, 0.5)));
    CHECK(stats.merge_tests <= dets.size());
  }
  CHECK(lanms({}).empty());
}

TEST_CASE("lanms collapses a run of near-identical boxes") {
  oracle::Rng rng(4);
  std::vector<Detection> line;
  const RotatedBox base = RotatedBox::make(200, 100, 160, 24, 0.1);
  for (int k = 0; k < 100; ++k) {
    const RotatedBox b = RotatedBox::make(base.cx + rng.uniform(-1, 1), base.cy + rng.uniform(-1, 1),
                                          base.w + rng.uniform(-2, 2), base.h + rng.uniform(-1, 1),
                                          base.theta + rng.uniform(-0.01, 0.01));
    line.push_back(det(quad_from_rbox(b), rng.uniform(0.6, 1.0), {48, 12, k}));
  }
  const auto fast = lanms(line);
  const auto slow = standard_nms(line);
  REQUIRE(fast.size() == 1);
  REQUIRE(slow.size() == 1);
  CHECK(iou(fast[0].quad, slow[0].quad) >= 0.9);
}

TEST_CASE("lanms outputs overlap their inputs") {
  oracle::Rng rng(5);
  for (int n = 0; n < 100; ++n) {
    auto dets = random_set(rng, rng.integer(1, 40));
    const auto out = lanms(dets, 0.5, 0.5);
    CHECK(out.size() <= dets.size());
    for (const Detection& o : out) {
      double best = 0;
      for (const Detection& d : dets) best = std::max(best, iou(o.quad, d.quad));
      CHECK(best >= 0.5);
    }
  }
}

TEST_CASE("clustered detections: lanms does linear merge work") {
  const auto dets = clustered_detections(4000, 20, 3);
  NmsStats fast, slow;
  const auto a = lanms(dets, 0.5, 0.5, &fast);
  const auto b = standard_nms(dets, 0.5, &slow);
  CHECK(fast.merge_tests <= dets.size());
  CHECK(fast.merge_tests + fast.nms_tests < slow.nms_tests / 5);
  CHECK(a.size() == b.size());
}
