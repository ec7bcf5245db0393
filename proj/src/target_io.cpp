#include <bit>
#include <cstring>
#include <fstream>

#include "circdet/data_io.hpp"

namespace circdet {

namespace {

constexpr std::string_view kMagic = "CDTG";
constexpr std::uint8_t kNoVertical = 0xFF;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : buf_(b) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{static_cast<std::uint8_t>(buf_[pos_++])} << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{static_cast<std::uint8_t>(buf_[pos_++])} << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw CorruptFile("target file truncated");
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_targets(const TargetFile& t) {
  Writer w;
  w.bytes(kMagic);
  w.u32(kTargetFormatVersion);
  w.u32(static_cast<std::uint32_t>(t.image_id.size()));
  w.bytes(t.image_id);
  w.f64(t.alpha);
  w.u32(static_cast<std::uint32_t>(t.grids.size()));
  for (const LabelGrid& g : t.grids) {
    w.u32(static_cast<std::uint32_t>(g.grid.size));
    w.f64(g.grid.r_a);
  }
  for (const LabelGrid& g : t.grids) {
    for (const CellLabel& c : g.cells) w.u8(static_cast<std::uint8_t>(c.cls));
    for (const CellLabel& c : g.cells) {
      w.u8(c.vertical ? static_cast<std::uint8_t>(*c.vertical) : kNoVertical);
    }
    for (const CellLabel& c : g.cells) w.f64(c.score);
    for (const CellLabel& c : g.cells) {
      for (double v : c.regression.value_or(Regression{}).as_array()) w.f64(v);
    }
  }
  w.u64(fnv1a(w.str()));
  return std::move(w.str());
}

TargetFile decode_targets(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CorruptFile("not a target file");
  }
  Reader header(bytes.substr(kMagic.size(), 4));
  const std::uint32_t version = header.u32();
  if (version != kTargetFormatVersion) {
    throw VersionMismatch("target file version " + std::to_string(version) + ", expected " +
                          std::to_string(kTargetFormatVersion));
  }
  if (bytes.size() < kMagic.size() + 4 + 8) throw CorruptFile("target file truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  if (Reader(bytes.substr(bytes.size() - 8)).u64() != fnv1a(body)) {
    throw CorruptFile("target file checksum mismatch");
  }

  Reader r(body.substr(kMagic.size() + 4));
  TargetFile t;
  t.image_id = std::string(r.bytes(r.u32()));
  t.alpha = r.f64();
  const std::uint32_t n_grids = r.u32();
  if (n_grids > r.remaining() / 12) throw CorruptFile("grid count exceeds file size");
  std::vector<GridSpec> specs;
  for (std::uint32_t k = 0; k < n_grids; ++k) {
    GridSpec g;
    const std::uint32_t size = r.u32();
    if (size == 0 || size > 1u << 15) throw CorruptFile("implausible grid size");
    g.size = static_cast<int>(size);
    g.r_a = r.f64();
    specs.push_back(g);
  }
  for (const GridSpec& spec : specs) {
    LabelGrid g(spec);
    const std::size_t n = g.cells.size();
    if (r.remaining() < n * (2 + 8 + 8 * kRegressionSize)) throw CorruptFile("target file truncated");
    for (CellLabel& c : g.cells) {
      const std::uint8_t cls = r.u8();
      if (cls > 2) throw CorruptFile("invalid class id");
      c.cls = static_cast<CellClass>(cls);
    }
    for (CellLabel& c : g.cells) {
      const std::uint8_t v = r.u8();
      const bool text = c.cls == CellClass::Text;
      if (text ? v > 1 : v != kNoVertical) throw CorruptFile("vertical flag inconsistent with class");
      if (text) c.vertical = v;
    }
    for (CellLabel& c : g.cells) c.score = r.f64();
    for (CellLabel& c : g.cells) {
      std::array<double, kRegressionSize> reg{};
      for (double& v : reg) v = r.f64();
      if (c.cls == CellClass::Text) c.regression = Regression::from_array(reg);
    }
    t.grids.push_back(std::move(g));
  }
  if (r.remaining() != 0) throw CorruptFile("trailing bytes in target file");
  return t;
}

void save_targets(const TargetFile& t, const std::filesystem::path& path) {
  const std::string bytes = encode_targets(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

TargetFile load_targets(const std::filesystem::path& path) { return decode_targets(read_file(path)); }

}  // namespace circdet
