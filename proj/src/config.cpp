#include "circdet/config.hpp"

#include <charconv>
#include <cmath>

#include "circdet/data_io.hpp"
#include "circdet/errors.hpp"

namespace circdet {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw InvalidConfig("config key '" + std::string(key) + "': not a number: " + std::string(v));
  }
  return out;
}

}  // namespace

PyramidSpec Settings::pyramid_spec() const {
  PyramidSpec p;
  for (int size : pyramid) p.grids.push_back(GridSpec{size, r_a});
  p.alpha = alpha;
  p.validate();
  return p;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view tok = trim(text.substr(start, comma - start));
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw InvalidConfig("not an integer list: " + std::string(text));
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

Settings parse_settings(std::string_view text, Settings s) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidConfig("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "pyramid") {
      s.pyramid = parse_int_list(value);
    } else if (key == "alpha") {
      s.alpha = to_double(key, value);
    } else if (key == "r_a") {
      s.r_a = to_double(key, value);
    } else if (key == "lambda1") {
      s.lambda1 = to_double(key, value);
    } else if (key == "lambda2") {
      s.lambda2 = to_double(key, value);
    } else if (key == "conf_threshold") {
      s.conf_threshold = to_double(key, value);
    } else if (key == "merge_iou") {
      s.merge_iou = to_double(key, value);
    } else if (key == "final_iou") {
      s.final_iou = to_double(key, value);
    } else if (key == "iou_thresh") {
      s.iou_thresh = to_double(key, value);
    } else if (key == "image_size") {
      s.image_size = to_double(key, value);
    } else {
      throw InvalidConfig("unknown config key '" + std::string(key) + "'");
    }
  }
  return s;
}

Settings load_settings(const std::filesystem::path& path, Settings base) {
  return parse_settings(read_file(path), std::move(base));
}

}  // namespace circdet
