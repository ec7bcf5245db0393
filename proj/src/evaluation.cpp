#include "circdet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace circdet {

EvalReport EvalReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  const auto td = static_cast<double>(tp);
  r.precision = tp + fp == 0 ? 0.0 : td / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : td / static_cast<double>(tp + fn);
  r.fscore = r.precision + r.recall == 0.0
                 ? 0.0
                 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

MatchCounts match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                             double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> matched(gts.size(), false);
  MatchCounts out;
  for (std::size_t k : order) {
    const Quad& q = dets[k].quad;
    std::size_t best = gts.size();
    double best_iou = -1.0;
    bool hits_ignore = false;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].ignore) {
        hits_ignore = hits_ignore || iou(q, gts[g].quad) >= iou_thresh;
        continue;
      }
      if (matched[g]) continue;
      const double v = iou(q, gts[g].quad);
      if (v >= iou_thresh && v > best_iou) {
        best = g;
        best_iou = v;
      }
    }
    if (best < gts.size()) {
      matched[best] = true;
      ++out.tp;
    } else if (!hits_ignore) {
      ++out.fp;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gts[g].ignore && !matched[g]) ++out.fn;
  }
  return out;
}

EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& dets,
                    const std::map<std::string, std::vector<Annotation>>& gts,
                    const EvalOptions& opts) {
  for (const auto& [id, _] : dets) {
    if (!gts.contains(id)) throw MissingImage("detections for unknown image " + id);
  }
  for (const auto& [id, _] : gts) {
    if (!dets.contains(id)) throw MissingImage("no detections for image " + id);
  }

  std::vector<ImageCounts> per_image;
  MatchCounts total;
  for (const auto& [id, anns] : gts) {
    std::vector<Detection> scaled = dets.at(id);
    const auto it = opts.scales.find(id);
    const double s = it == opts.scales.end() ? opts.default_scale : it->second;
    if (s != 1.0) {
      for (Detection& d : scaled) {
        for (Point2& p : d.quad.corners) p = s * p;
      }
    }
    const MatchCounts c = match_detections(scaled, anns, opts.iou_thresh);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
    per_image.push_back(ImageCounts{id, c});
  }
  EvalReport r = EvalReport::from_counts(total.tp, total.fp, total.fn);
  r.iou_thresh = opts.iou_thresh;
  r.per_image = std::move(per_image);
  return r;
}

std::string format_report_text(const EvalReport& r) {
  std::string out;
  char buf[160];
  for (const ImageCounts& img : r.per_image) {
    std::snprintf(buf, sizeof buf, "image %s: tp=%zu fp=%zu fn=%zu\n", img.image_id.c_str(),
                  img.counts.tp, img.counts.fp, img.counts.fn);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "total: tp=%zu fp=%zu fn=%zu\n", r.tp, r.fp, r.fn);
  out += buf;
  std::snprintf(buf, sizeof buf, "precision=%.4f recall=%.4f fscore=%.4f\n", r.precision, r.recall,
                r.fscore);
  out += buf;
  return out;
}

std::string format_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["iou_threshold"] = r.iou_thresh;
  j["images"] = r.per_image.size();
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["fscore"] = r.fscore;
  j["per_image"] = nlohmann::ordered_json::array();
  for (const ImageCounts& img : r.per_image) {
    nlohmann::ordered_json e;
    e["image_id"] = img.image_id;
    e["tp"] = img.counts.tp;
    e["fp"] = img.counts.fp;
    e["fn"] = img.counts.fn;
    j["per_image"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace circdet
