#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "circdet/data_io.hpp"

namespace circdet {

namespace {

constexpr std::string_view kBom = "\xEF\xBB\xBF";

std::string_view strip_line(std::string_view s) {
  if (s.starts_with(kBom)) s.remove_prefix(kBom.size());
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view tok, double& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  if (tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_int(std::string_view tok, long long& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < s.size()) {
    while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    std::size_t e = k;
    while (e < s.size() && !std::isspace(static_cast<unsigned char>(s[e]))) ++e;
    if (e > k) out.push_back(s.substr(k, e - k));
    k = e;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = s.find(',', start);
    if (c == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, c - start));
    start = c + 1;
  }
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

// Reverses order if needed so the quad is clockwise on screen; no convexity
// requirement, since detections may come from anywhere.
Quad clockwise(const Quad& q) {
  Quad out = q;
  if (signed_area(out) < 0.0) std::reverse(out.corners.begin(), out.corners.end());
  return out;
}

void append_shortest(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Annotation parse_icdar_line(std::string_view line, std::size_t line_number) {
  line = strip_line(line);
  std::array<std::string_view, 8> fields{};
  std::size_t start = 0;
  std::size_t n = 0;
  std::string_view text;
  bool has_text = false;
  while (n < 8) {
    const std::size_t c = line.find(',', start);
    if (c == std::string_view::npos) {
      fields[n++] = line.substr(start);
      break;
    }
    fields[n++] = line.substr(start, c - start);
    start = c + 1;
    if (n == 8) {
      text = line.substr(start);
      has_text = true;
    }
  }
  if (n < 8) {
    throw MalformedLine(line_number, "expected 8 comma-separated coordinates, found " +
                                         std::to_string(n) + " fields");
  }
  Annotation a;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!parse_number(fields[2 * k], a.quad[k].x) || !parse_number(fields[2 * k + 1], a.quad[k].y)) {
      throw MalformedLine(line_number, "coordinate of corner " + std::to_string(k + 1) +
                                           " is not a number");
    }
  }
  if (has_text) a.text = std::string(text);
  a.ignore = a.text == "###";
  return a;
}

Annotation parse_td500_line(std::string_view line, std::size_t line_number) {
  line = strip_line(line);
  const auto tok = split_ws(line);
  if (tok.size() != 7) {
    throw MalformedLine(line_number, "expected 7 whitespace-separated fields, found " +
                                         std::to_string(tok.size()));
  }
  long long index = 0;
  long long difficulty = 0;
  if (!parse_int(tok[0], index) || !parse_int(tok[1], difficulty)) {
    throw MalformedLine(line_number, "index and difficulty must be integers");
  }
  if (difficulty != 0 && difficulty != 1) {
    throw MalformedLine(line_number, "difficulty must be 0 or 1");
  }
  std::array<double, 5> v{};
  for (std::size_t k = 0; k < 5; ++k) {
    if (!parse_number(tok[k + 2], v[k])) {
      throw MalformedLine(line_number, "field " + std::to_string(k + 3) + " is not a number");
    }
  }
  const auto [x, y, w, h, theta] = v;
  if (!(w > 0.0) || !(h > 0.0)) throw MalformedLine(line_number, "box width and height must be positive");

  const Point2 c{x + 0.5 * w, y + 0.5 * h};
  const std::array<Point2, 4> offsets{{{-0.5 * w, -0.5 * h},
                                       {0.5 * w, -0.5 * h},
                                       {0.5 * w, 0.5 * h},
                                       {-0.5 * w, 0.5 * h}}};
  Annotation a;
  for (std::size_t k = 0; k < 4; ++k) a.quad[k] = c + rotate(offsets[k], theta);
  a.ignore = difficulty == 1;
  return a;
}

ParseReport parse_annotations(std::istream& in, GtFormat format) {
  ParseReport report;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (is_blank(strip_line(line))) continue;
    try {
      report.annotations.push_back(format == GtFormat::Icdar ? parse_icdar_line(line, number)
                                                             : parse_td500_line(line, number));
    } catch (const MalformedLine& e) {
      report.errors.push_back(e);
    }
  }
  return report;
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path, GtFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto report = parse_annotations(in, format);
  if (!report.errors.empty()) {
    const MalformedLine& e = report.errors.front();
    throw MalformedLine(e.line_number(), path.filename().string() + ": " + e.reason());
  }
  return std::move(report.annotations);
}

void write_annotations(std::ostream& out, std::span<const Annotation> anns) {
  std::string line;
  for (const Annotation& a : anns) {
    line.clear();
    for (const Point2& p : a.quad.corners) {
      append_shortest(line, p.x);
      line += ',';
      append_shortest(line, p.y);
      line += ',';
    }
    line += a.text;
    line += '\n';
    out << line;
  }
}

void write_detections(std::ostream& out, std::span<const Detection> dets, bool with_provenance) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return raster_before(dets[a].source, dets[b].source);
  });
  char buf[64];
  for (std::size_t k : order) {
    const Detection& d = dets[k];
    const Quad q = clockwise(d.quad);
    std::string line;
    for (const Point2& p : q.corners) {
      line += std::to_string(std::llround(p.x));
      line += ',';
      line += std::to_string(std::llround(p.y));
      line += ',';
    }
    std::snprintf(buf, sizeof buf, "%.4f", d.score);
    line += buf;
    if (with_provenance) {
      line += ',' + std::to_string(d.source.grid_size) + ',' + std::to_string(d.source.i) + ',' +
              std::to_string(d.source.j);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("failed writing detections");
}

Detection parse_detection_line(std::string_view line, std::size_t line_number) {
  line = strip_line(line);
  const auto f = split_commas(line);
  if (f.size() != 9 && f.size() != 12) {
    throw MalformedLine(line_number, "expected 9 or 12 comma-separated fields, found " +
                                         std::to_string(f.size()));
  }
  Detection d;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!parse_number(f[2 * k], d.quad[k].x) || !parse_number(f[2 * k + 1], d.quad[k].y)) {
      throw MalformedLine(line_number, "coordinate of corner " + std::to_string(k + 1) +
                                           " is not a number");
    }
  }
  if (!parse_number(f[8], d.score) || !(d.score > 0.0)) {
    throw MalformedLine(line_number, "score must be a positive number");
  }
  if (f.size() == 12) {
    long long g = 0, i = 0, j = 0;
    if (!parse_int(f[9], g) || !parse_int(f[10], i) || !parse_int(f[11], j)) {
      throw MalformedLine(line_number, "provenance fields must be integers");
    }
    d.source = Provenance{static_cast<int>(g), static_cast<int>(i), static_cast<int>(j)};
  }
  return d;
}

std::vector<Detection> read_detections(std::istream& in) {
  std::vector<Detection> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (is_blank(strip_line(line))) continue;
    out.push_back(parse_detection_line(line, number));
  }
  return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_detections(in);
  } catch (const MalformedLine& e) {
    throw MalformedLine(e.line_number(), path.filename().string() + ": " + e.reason());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return std::move(ss).str();
}

}  // namespace circdet
