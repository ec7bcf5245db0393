#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "circdet/errors.hpp"
#include "circdet/geometry.hpp"
#include "circdet/postprocess.hpp"
#include "circdet/target_builder.hpp"

namespace circdet {

struct Annotation {
  Quad quad;  // pixels
  std::string text;
  bool ignore = false;  // "###" transcription or TD500 difficult flag

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Sample {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class GtFormat { Icdar, Td500 };

// ---------------------------------------------------------------------------
// Annotation files

/// "x1,y1,x2,y2,x3,y3,x4,y4,transcription". Everything after the eighth comma
/// is the transcription, commas included. Tolerates a UTF-8 BOM and a
/// trailing CR. Throws MalformedLine.
Annotation parse_icdar_line(std::string_view line, std::size_t line_number = 0);

/// "index difficulty x y w h theta": an axis-aligned (x, y, w, h) box rotated
/// by theta radians about its center. Throws MalformedLine.
Annotation parse_td500_line(std::string_view line, std::size_t line_number = 0);

struct ParseReport {
  std::vector<Annotation> annotations;
  std::vector<MalformedLine> errors;
};

/// Parses every line, collecting malformed ones instead of stopping. Blank
/// lines are skipped.
ParseReport parse_annotations(std::istream& in, GtFormat format);

/// Strict file reader: throws IoError if unreadable, the first MalformedLine
/// otherwise.
std::vector<Annotation> read_annotations(const std::filesystem::path& path, GtFormat format);

/// ICDAR-style lines with shortest round-trip decimal coordinates.
void write_annotations(std::ostream& out, std::span<const Annotation> anns);

// ---------------------------------------------------------------------------
// Detection files

/// "x1,y1,x2,y2,x3,y3,x4,y4,score" per detection, corners rounded to integer
/// pixels in clockwise-on-screen order, score with four decimals. Sorted by
/// descending score, then raster provenance. with_provenance appends
/// ",grid,i,j" so a later LANMS pass can restore raster order.
void write_detections(std::ostream& out, std::span<const Detection> dets,
                      bool with_provenance = false);

/// Accepts the 9-field form and the 12-field form with provenance.
Detection parse_detection_line(std::string_view line, std::size_t line_number = 0);

std::vector<Detection> read_detections(std::istream& in);
std::vector<Detection> read_detections(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentConfig {
  std::array<double, 2> crop_scale_range{0.1, 1.0};
  double flip_prob = 0.5;
  std::vector<double> angle_set{-90, -75, -60, -45, -30, -15, 0, 15, 30, 45, 60, 75, 90};
  std::array<double, 2> canvas_range{1.0, 3.0};
  bool use_canvas = false;          // TD500-style placement on an enlarged canvas
  double min_residual_area = 0.25;  // clipped boxes keep at least this fraction
  bool require_nonempty = false;
  std::uint64_t seed = 0;
};

/// One realization of the random choices. Fractions position the canvas and
/// crop inside the free space.
struct AugmentDraw {
  double canvas_scale = 1.0;
  double canvas_x = 0.0;
  double canvas_y = 0.0;
  double crop_scale = 1.0;
  double crop_x = 0.0;
  double crop_y = 0.0;
  bool flip = false;
  double angle_deg = 0.0;

  static AugmentDraw identity() { return {}; }
};

/// Deterministic in (cfg.seed, draw_index).
AugmentDraw draw_augment(const AugmentConfig& cfg, std::uint64_t draw_index);

/// Canvas placement (if enabled), crop, horizontal flip, then rotation about
/// the image center onto an enlarged canvas. Annotations whose center leaves
/// the crop are dropped; clipped ones are refit as rectangles in their own
/// orientation and kept if at least min_residual_area of them survives.
/// Throws EmptyResult when require_nonempty and nothing survives.
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, const AugmentDraw& draw);
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, std::uint64_t draw_index);

// ---------------------------------------------------------------------------
// Target container (layout in docs/target_format.md)

inline constexpr std::uint32_t kTargetFormatVersion = 1;

struct TargetFile {
  std::string image_id;
  double alpha = 0.7;
  std::vector<LabelGrid> grids;

  friend bool operator==(const TargetFile&, const TargetFile&) = default;
};

std::string encode_targets(const TargetFile& t);
/// Throws VersionMismatch or CorruptFile.
TargetFile decode_targets(std::string_view bytes);

void save_targets(const TargetFile& t, const std::filesystem::path& path);
TargetFile load_targets(const std::filesystem::path& path);

/// Whole file as bytes; throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace circdet
