#include "circdet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "circdet/config.hpp"
#include "circdet/data_io.hpp"
#include "circdet/errors.hpp"
#include "circdet/evaluation.hpp"
#include "circdet/postprocess.hpp"
#include "circdet/synthetic.hpp"

namespace circdet::cli {

namespace fs = std::filesystem;

namespace {

// Flags that may override the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> pyramid;
  std::optional<double> alpha;
  std::optional<double> r_a;
  std::optional<double> conf_threshold;
  std::optional<double> merge_iou;
  std::optional<double> final_iou;
  std::optional<double> iou_thresh;
  std::optional<double> image_size;

  Settings resolve() const {
    Settings s = config ? load_settings(*config) : Settings{};
    if (pyramid) s.pyramid = parse_int_list(*pyramid);
    if (alpha) s.alpha = *alpha;
    if (r_a) s.r_a = *r_a;
    if (conf_threshold) s.conf_threshold = *conf_threshold;
    if (merge_iou) s.merge_iou = *merge_iou;
    if (final_iou) s.final_iou = *final_iou;
    if (iou_thresh) s.iou_thresh = *iou_thresh;
    if (image_size) s.image_size = *image_size;
    return s;
  }
};

void add_config(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value settings file");
}

std::string ensure_gt_id(const fs::path& p, GtFormat format, bool& ok) {
  const std::string name = p.filename().string();
  ok = false;
  if (format == GtFormat::Icdar) {
    if (name.starts_with("gt_") && p.extension() == ".txt") {
      ok = true;
      return p.stem().string().substr(3);
    }
    return {};
  }
  if (p.extension() == ".gt") {
    ok = true;
    return p.stem().string();
  }
  return {};
}

std::map<std::string, fs::path> list_files(const fs::path& dir,
                                           const std::function<std::optional<std::string>(const fs::path&)>& id_of) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto id = id_of(entry.path())) out[*id] = entry.path();
  }
  return out;
}

std::map<std::string, fs::path> list_gt(const fs::path& dir, GtFormat format) {
  return list_files(dir, [format](const fs::path& p) -> std::optional<std::string> {
    bool ok = false;
    std::string id = ensure_gt_id(p, format, ok);
    if (!ok) return std::nullopt;
    return id;
  });
}

std::map<std::string, fs::path> list_results(const fs::path& dir) {
  return list_files(dir, [](const fs::path& p) -> std::optional<std::string> {
    const std::string name = p.filename().string();
    if (!name.starts_with("res_") || p.extension() != ".txt") return std::nullopt;
    return p.stem().string().substr(4);
  });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

GtFormat format_from(const std::string& s) { return s == "td500" ? GtFormat::Td500 : GtFormat::Icdar; }

// --- prediction text files --------------------------------------------------
//   grid <size> <r_a>
//   <i> <j> <l0> <l1> <l2> <dx> <dy> <da> <dr> <dtheta> <v0> <v1>
// Cells that are not listed keep all-zero outputs.
std::vector<PredictionGrid> read_predictions(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<PredictionGrid> grids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "grid") {
      GridSpec g;
      if (!(ls >> g.size >> g.r_a)) throw MalformedLine(number, "expected: grid <size> <r_a>");
      g.validate();
      grids.emplace_back(g);
      continue;
    }
    if (grids.empty()) throw MalformedLine(number, "cell line before any grid line");
    int i = 0, j = 0;
    std::istringstream cs(line);
    AnchorDelta d;
    std::array<double, kRegressionSize> reg{};
    if (!(cs >> i >> j >> d.logits[0] >> d.logits[1] >> d.logits[2] >> reg[0] >> reg[1] >> reg[2] >>
          reg[3] >> reg[4] >> d.vertical_logits[0] >> d.vertical_logits[1])) {
      throw MalformedLine(number, "expected 12 numbers: i j logits[3] regression[5] vertical[2]");
    }
    PredictionGrid& g = grids.back();
    if (i < 0 || j < 0 || i >= g.grid.size || j >= g.grid.size) {
      throw MalformedLine(number, "cell index outside the grid");
    }
    d.reg = Regression::from_array(reg);
    g.at(i, j) = d;
  }
  return grids;
}

// --- subcommands ------------------------------------------------------------

struct BuildTargetsArgs {
  Overrides o;
  std::string gt_dir, out_dir, format = "icdar";
  std::optional<double> src_width, src_height;
};

int cmd_build_targets(const BuildTargetsArgs& a, std::ostream& out, std::ostream& err) {
  const Settings s = a.o.resolve();
  const PyramidSpec pyramid = s.pyramid_spec();
  const GtFormat format = format_from(a.format);
  const double sx = s.image_size / a.src_width.value_or(s.image_size);
  const double sy = s.image_size / a.src_height.value_or(s.image_size);
  make_dir(a.out_dir);

  std::size_t files = 0, boxes = 0, skipped = 0;
  for (const auto& [id, path] : list_gt(a.gt_dir, format)) {
    std::vector<GroundTruthBox> gts;
    for (const Annotation& ann : read_annotations(path, format)) {
      Quad q = ann.quad;
      for (Point2& p : q.corners) p = {p.x * sx, p.y * sy};
      try {
        gts.push_back({rbox_from_quad(q), ann.ignore});
      } catch (const Error& e) {
        err << "warning: " << path.filename().string() << ": skipped annotation: " << e.what() << "\n";
        ++skipped;
      }
    }
    TargetFile t{id, pyramid.alpha, build_targets(gts, pyramid, s.image_size)};
    save_targets(t, fs::path(a.out_dir) / (id + ".tgt"));
    ++files;
    boxes += gts.size();
  }
  out << "wrote " << files << " target files (" << boxes << " boxes, " << skipped << " skipped)\n";
  return kExitOk;
}

struct DecodeArgs {
  Overrides o;
  std::string input, out_dir;
};

int cmd_decode(const DecodeArgs& a, std::ostream& out) {
  const Settings s = a.o.resolve();
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.input)) {
    for (const auto& e : fs::directory_iterator(a.input)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".tgt" || ext == ".pred")) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else if (fs::is_regular_file(a.input)) {
    inputs.push_back(a.input);
  } else {
    throw IoError("no such input: " + a.input);
  }
  make_dir(a.out_dir);

  std::size_t total = 0;
  for (const fs::path& p : inputs) {
    std::vector<PredictionGrid> preds;
    std::string id = p.stem().string();
    if (p.extension() == ".tgt") {
      const TargetFile t = load_targets(p);
      if (!t.image_id.empty()) id = t.image_id;
      for (const LabelGrid& g : t.grids) preds.push_back(perfect_prediction(g));
    } else {
      preds = read_predictions(p);
    }
    const auto dets = filter_by_confidence(preds, s.conf_threshold, s.image_size);
    std::ostringstream text;
    write_detections(text, dets, /*with_provenance=*/true);
    write_text(fs::path(a.out_dir) / ("res_" + id + ".txt"), text.str());
    total += dets.size();
  }
  out << "decoded " << inputs.size() << " files, " << total << " detections\n";
  return kExitOk;
}

struct NmsArgs {
  Overrides o;
  std::string in, out, mode = "lanms";
};

int cmd_nms(const NmsArgs& a, std::ostream& out) {
  const Settings s = a.o.resolve();
  std::vector<Detection> dets = read_detections(fs::path(a.in));
  const bool has_raster = !dets.empty() && std::all_of(dets.begin(), dets.end(), [](const Detection& d) {
    return d.source.grid_size > 0;
  });
  if (has_raster) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& x, const Detection& y) { return raster_before(x.source, y.source); });
  }
  NmsStats stats;
  const auto kept = a.mode == "naive" ? standard_nms(dets, s.final_iou, &stats)
                                      : lanms(dets, s.merge_iou, s.final_iou, &stats);
  std::ostringstream text;
  write_detections(text, kept);
  write_text(a.out, text.str());
  out << a.mode << ": kept " << kept.size() << " of " << dets.size() << " detections ("
      << stats.merge_tests << " merge tests, " << stats.nms_tests << " suppression tests)\n";
  return kExitOk;
}

struct AugmentArgs {
  std::string gt_dir, out_dir, format = "icdar";
  std::uint64_t seed = 0;
  std::size_t draws = 1;
  bool canvas = false;
  int width = 1280, height = 720;
};

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
  const GtFormat format = format_from(a.format);
  AugmentConfig cfg;
  cfg.seed = a.seed;
  cfg.use_canvas = a.canvas;
  make_dir(a.out_dir);

  std::string manifest;
  std::size_t produced = 0;
  std::uint64_t index = 0;
  for (const auto& [id, path] : list_gt(a.gt_dir, format)) {
    Sample sample{id, a.width, a.height, read_annotations(path, format)};
    for (std::size_t k = 0; k < a.draws; ++k, ++index) {
      const Sample aug = augment_sample(sample, cfg, index);
      const std::string out_id = id + "_aug" + std::to_string(k);
      std::ostringstream text;
      write_annotations(text, aug.annotations);
      write_text(fs::path(a.out_dir) / ("gt_" + out_id + ".txt"), text.str());
      manifest += out_id + " " + std::to_string(aug.width) + " " + std::to_string(aug.height) + "\n";
      ++produced;
    }
  }
  write_text(fs::path(a.out_dir) / "augment_manifest.txt", manifest);
  out << "wrote " << produced << " augmented samples\n";
  return kExitOk;
}

struct EvaluateArgs {
  Overrides o;
  std::string det_dir, gt_dir, format = "icdar";
  std::optional<std::string> json;
  double scale = 1.0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Settings s = a.o.resolve();
  const GtFormat format = format_from(a.format);
  std::map<std::string, std::vector<Annotation>> gts;
  for (const auto& [id, path] : list_gt(a.gt_dir, format)) gts[id] = read_annotations(path, format);
  std::map<std::string, std::vector<Detection>> dets;
  for (const auto& [id, path] : list_results(a.det_dir)) dets[id] = read_detections(path);

  EvalOptions eo;
  eo.iou_thresh = s.iou_thresh;
  eo.default_scale = a.scale;
  const EvalReport r = evaluate(dets, gts, eo);
  out << format_report_text(r);
  if (a.json) {
    if (*a.json == "-") {
      out << format_report_json(r);
    } else {
      write_text(*a.json, format_report_json(r));
    }
  }
  return kExitOk;
}

struct BenchArgs {
  std::size_t n = 20000, clusters = 50, repeats = 3;
  std::uint64_t seed = 7;
  Overrides o;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const Settings s = a.o.resolve();
  const auto dets = clustered_detections(a.n, a.clusters, a.seed);
  using clock = std::chrono::steady_clock;
  auto time_ms = [&](auto&& fn) {
    double best = 1e300;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, a.repeats); ++r) {
      const auto t0 = clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    return best;
  };
  NmsStats naive_stats, lanms_stats;
  std::size_t naive_kept = 0, lanms_kept = 0;
  const double naive_ms = time_ms([&] {
    naive_stats = {};
    naive_kept = standard_nms(dets, s.final_iou, &naive_stats).size();
  });
  const double lanms_ms = time_ms([&] {
    lanms_stats = {};
    lanms_kept = lanms(dets, s.merge_iou, s.final_iou, &lanms_stats).size();
  });
  char buf[256];
  out << "mode    detections  kept  iou_tests     best_ms\n";
  std::snprintf(buf, sizeof buf, "naive   %10zu  %4zu  %9zu  %10.3f\n", dets.size(), naive_kept,
                naive_stats.nms_tests, naive_ms);
  out << buf;
  std::snprintf(buf, sizeof buf, "lanms   %10zu  %4zu  %9zu  %10.3f\n", dets.size(), lanms_kept,
                lanms_stats.merge_tests + lanms_stats.nms_tests, lanms_ms);
  out << buf;
  std::snprintf(buf, sizeof buf, "speedup %.1fx\n", lanms_ms > 0 ? naive_ms / lanms_ms : 0.0);
  out << buf;
  return kExitOk;
}

struct SelfcheckArgs {
  std::size_t scenes = 100;
  std::uint64_t seed = 1;
  Overrides o;
};

int cmd_selfcheck(const SelfcheckArgs& a, std::ostream& out) {
  const Settings s = a.o.resolve();
  ClosedLoopOptions opts;
  opts.scenes = a.scenes;
  opts.seed = a.seed;
  opts.image_size = s.image_size;
  opts.pyramid = s.pyramid_spec();
  opts.conf_threshold = s.conf_threshold;
  opts.merge_iou = s.merge_iou;
  opts.final_iou = s.final_iou;
  opts.iou_thresh = s.iou_thresh;
  const ClosedLoopResult r = run_closed_loop(opts);

  out << "closed-loop selfcheck: " << a.scenes << " scenes, seed " << a.seed << "\n";
  out << "boxes: " << r.boxes << " (ignore " << r.ignore_boxes << ")\n";
  out << "text cells per level:";
  for (std::size_t k = 0; k < r.positives_per_level.size(); ++k) {
    out << " " << opts.pyramid.grids[k].size << ":" << r.positives_per_level[k];
  }
  out << "\n";
  out << "detections: raw=" << r.raw_detections << " after_nms=" << r.final_detections << "\n";
  out << "tp=" << r.report.tp << " fp=" << r.report.fp << " fn=" << r.report.fn << "\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "P=%.3f R=%.3f F=%.3f\n", r.report.precision, r.report.recall,
                r.report.fscore);
  out << buf;
  const bool perfect = r.report.fp == 0 && r.report.fn == 0 && r.report.tp > 0;
  return perfect ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circle-anchor text detection geometry toolkit", "circdet"};
  app.require_subcommand(1);
  app.fallthrough(false);

  BuildTargetsArgs bt;
  auto* c_bt = app.add_subcommand("build-targets", "ground-truth directory -> label grid files");
  c_bt->add_option("--gt", bt.gt_dir, "directory of gt_<id>.txt or <id>.gt files")->required();
  c_bt->add_option("--out", bt.out_dir, "output directory for <id>.tgt")->required();
  c_bt->add_option("--format", bt.format)->check(CLI::IsMember({"icdar", "td500"}));
  c_bt->add_option("--src-width", bt.src_width, "width of the annotation frame (default image size)");
  c_bt->add_option("--src-height", bt.src_height, "height of the annotation frame (default image size)");
  c_bt->add_option("--image-size", bt.o.image_size);
  c_bt->add_option("--pyramid", bt.o.pyramid, "comma-separated grid sizes");
  c_bt->add_option("--alpha", bt.o.alpha);
  c_bt->add_option("--r-a", bt.o.r_a);
  add_config(c_bt, bt.o);

  DecodeArgs dc;
  auto* c_dc = app.add_subcommand("decode", "target or prediction files -> detections");
  c_dc->add_option("--in", dc.input, ".tgt/.pred file or a directory of them")->required();
  c_dc->add_option("--out", dc.out_dir, "output directory for res_<id>.txt")->required();
  c_dc->add_option("--image-size", dc.o.image_size);
  c_dc->add_option("--threshold", dc.o.conf_threshold);
  add_config(c_dc, dc.o);

  NmsArgs nm;
  auto* c_nm = app.add_subcommand("nms", "suppress a detections file");
  c_nm->add_option("--in", nm.in)->required();
  c_nm->add_option("--out", nm.out)->required();
  c_nm->add_option("--mode", nm.mode)->check(CLI::IsMember({"naive", "lanms"}));
  c_nm->add_option("--merge-iou", nm.o.merge_iou);
  c_nm->add_option("--final-iou", nm.o.final_iou);
  add_config(c_nm, nm.o);

  AugmentArgs ag;
  auto* c_ag = app.add_subcommand("augment", "ground-truth directory + seed -> transformed ground truth");
  c_ag->add_option("--gt", ag.gt_dir)->required();
  c_ag->add_option("--out", ag.out_dir)->required();
  c_ag->add_option("--format", ag.format)->check(CLI::IsMember({"icdar", "td500"}));
  c_ag->add_option("--seed", ag.seed);
  c_ag->add_option("--draws", ag.draws, "augmented copies per image");
  c_ag->add_flag("--canvas", ag.canvas, "place on an enlarged canvas before cropping");
  c_ag->add_option("--width", ag.width, "source image width");
  c_ag->add_option("--height", ag.height, "source image height");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "precision / recall / F of res_<id>.txt against ground truth");
  c_ev->add_option("--det", ev.det_dir)->required();
  c_ev->add_option("--gt", ev.gt_dir)->required();
  c_ev->add_option("--format", ev.format)->check(CLI::IsMember({"icdar", "td500"}));
  c_ev->add_option("--iou", ev.o.iou_thresh);
  c_ev->add_option("--scale", ev.scale, "multiplies detection coordinates");
  c_ev->add_option("--json", ev.json, "machine-readable report path, '-' for stdout");
  add_config(c_ev, ev.o);

  BenchArgs bn;
  auto* c_bn = app.add_subcommand("bench-nms", "time naive NMS against LANMS on clustered detections");
  c_bn->add_option("--n", bn.n);
  c_bn->add_option("--clusters", bn.clusters);
  c_bn->add_option("--seed", bn.seed);
  c_bn->add_option("--repeats", bn.repeats);
  c_bn->add_option("--merge-iou", bn.o.merge_iou);
  c_bn->add_option("--final-iou", bn.o.final_iou);
  add_config(c_bn, bn.o);

  SelfcheckArgs sc;
  auto* c_sc = app.add_subcommand("selfcheck", "closed-loop check: targets as perfect predictions must score F = 1");
  c_sc->add_option("--scenes", sc.scenes);
  c_sc->add_option("--seed", sc.seed);
  add_config(c_sc, sc.o);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    const std::string help = subs.empty() ? app.help() : subs.front()->help();
    if (e.get_exit_code() == 0) {
      out << help;
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << help;
    return kExitValidation;
  }

  try {
    if (c_bt->parsed()) return cmd_build_targets(bt, out, err);
    if (c_dc->parsed()) return cmd_decode(dc, out);
    if (c_nm->parsed()) return cmd_nms(nm, out);
    if (c_ag->parsed()) return cmd_augment(ag, out);
    if (c_ev->parsed()) return cmd_evaluate(ev, out);
    if (c_bn->parsed()) return cmd_bench(bn, out);
    if (c_sc->parsed()) return cmd_selfcheck(sc, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace circdet::cli
