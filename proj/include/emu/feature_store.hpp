#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "emu/rng.hpp"
#include "emu/types.hpp"

namespace emu {

namespace detail {

// Explicit little-endian packing; identical bytes on every platform.
inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context) : data_(data), context_(std::move(context)) {}

  uint16_t u16() { return static_cast<uint16_t>(byte() | (byte() << 8)); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  size_t remaining() const { return data_.size() - pos_; }
  void expect_exhausted() const {
    if (pos_ != data_.size())
      throw ValidationError(context_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
  }

 private:
  uint32_t byte() {
    need(1);
    return static_cast<unsigned char>(data_[pos_++]);
  }
  void need(size_t n) const {
    if (pos_ + n > data_.size()) throw ValidationError(context_ + ": truncated payload");
  }

  std::string_view data_;
  std::string context_;
  size_t pos_ = 0;
};

}  // namespace detail

// N x D matrix of per-region feature values with the region metadata the
// EMUF container carries (box, subject flag, edit label). Values are f32 in
// files and promoted to double in memory.
struct FeatureTable {
  std::string image_id;  // not stored in the container; conventionally the file stem
  std::vector<Region> regions;
  int dim = 0;
  std::vector<double> values;  // row-major, regions.size() x dim

  size_t row_count() const { return regions.size(); }
  double at(size_t row, size_t col) const { return values[row * dim + col]; }

  void validate() const {
    if (dim < 0) throw ValidationError("feature table: negative dim");
    if (values.size() != regions.size() * static_cast<size_t>(dim))
      throw ValidationError("feature table: value count does not match N x D");
    for (double v : values)
      if (!std::isfinite(v)) throw ValidationError("feature table: non-finite value");
  }

  bool operator==(const FeatureTable&) const = default;
};

inline constexpr uint32_t kEmufVersion = 1;
inline constexpr uint8_t kEmufLabelCodes[4] = {0, 1, 2, 3};  // none, introduced, altered, missing

inline uint8_t edit_label_code(EditLabel l) { return static_cast<uint8_t>(l); }
inline EditLabel edit_label_from_code(uint8_t c) {
  if (c > 3) throw ValidationError("EMUF: unknown edit label code " + std::to_string(c));
  return static_cast<EditLabel>(c);
}

// Canonical EMUF encoding: magic, version, N, D, N region records, N*D f32.
// Equal tables produce identical bytes.
inline std::string write_features(const FeatureTable& t) {
  t.validate();
  std::string out;
  out.reserve(16 + t.regions.size() * 20 + t.values.size() * 4);
  out += "EMUF";
  detail::put_u32(out, kEmufVersion);
  detail::put_u32(out, static_cast<uint32_t>(t.regions.size()));
  detail::put_u32(out, static_cast<uint32_t>(t.dim));
  for (const Region& r : t.regions) {
    detail::put_f32(out, static_cast<float>(r.box.x1));
    detail::put_f32(out, static_cast<float>(r.box.y1));
    detail::put_f32(out, static_cast<float>(r.box.x2));
    detail::put_f32(out, static_cast<float>(r.box.y2));
    out.push_back(static_cast<char>(r.is_subject ? 1 : 0));
    out.push_back(static_cast<char>(edit_label_code(r.edit_label)));
    detail::put_u16(out, 0);  // reserved
  }
  for (double v : t.values) detail::put_f32(out, static_cast<float>(v));
  return out;
}

// The container stores no image id; callers pass one (conventionally the
// file stem). Reconstructed regions are indexed by row position.
inline FeatureTable read_features(std::string_view bytes, std::string image_id = "") {
  detail::ByteReader r(bytes, "EMUF");
  if (bytes.size() < 4 || r.bytes(4) != "EMUF") throw ValidationError("EMUF: bad magic");
  uint32_t version = r.u32();
  if (version != kEmufVersion)
    throw ValidationError("EMUF: unsupported version " + std::to_string(version));
  uint32_t n = r.u32();
  uint32_t d = r.u32();
  if (n > (1u << 20) || d > (1u << 20)) throw ValidationError("EMUF: implausible N or D in header");
  if (r.remaining() != static_cast<size_t>(n) * 20 + static_cast<size_t>(n) * d * 4)
    throw ValidationError("EMUF: declared N=" + std::to_string(n) + " D=" + std::to_string(d) +
                          " inconsistent with payload length");

  FeatureTable t;
  t.image_id = std::move(image_id);
  t.dim = static_cast<int>(d);
  t.regions.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    Region reg;
    reg.index = static_cast<int>(i);
    reg.box.x1 = r.f32();
    reg.box.y1 = r.f32();
    reg.box.x2 = r.f32();
    reg.box.y2 = r.f32();
    reg.is_subject = r.bytes(1)[0] != 0;
    reg.edit_label = edit_label_from_code(static_cast<uint8_t>(r.bytes(1)[0]));
    uint16_t reserved = r.u16();
    if (reserved != 0) throw ValidationError("EMUF: nonzero reserved field in region record");
    t.regions.push_back(std::move(reg));
  }
  t.values.resize(static_cast<size_t>(n) * d);
  for (double& v : t.values) v = r.f32();
  r.expect_exhausted();
  return t;
}

// Box coordinates in synthetic features are stored divided by this; a power
// of two so the probe recovers them exactly in f32.
inline constexpr double kSynthCoordScale = 1024.0;
inline constexpr int kSynthAttributeDims = 8;

// Deterministic stand-in for a detector feature extractor. Dimensions 0-3
// hold box coordinates / 1024, dim 4 the subject flag, dims 5-7 a one-hot of
// {introduced, altered, missing}; the rest is counter-based noise keyed by
// (seed, region index, dimension).
inline FeatureTable synth_features(const std::vector<Region>& regions, uint64_t seed, int dim,
                                   std::string image_id = "") {
  if (dim < kSynthAttributeDims)
    throw std::invalid_argument("synth_features: dim must be >= " + std::to_string(kSynthAttributeDims));
  FeatureTable t;
  t.image_id = std::move(image_id);
  t.regions = regions;
  t.dim = dim;
  t.values.resize(regions.size() * static_cast<size_t>(dim));
  for (size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    double* row = t.values.data() + i * dim;
    row[0] = static_cast<float>(r.box.x1 / kSynthCoordScale);
    row[1] = static_cast<float>(r.box.y1 / kSynthCoordScale);
    row[2] = static_cast<float>(r.box.x2 / kSynthCoordScale);
    row[3] = static_cast<float>(r.box.y2 / kSynthCoordScale);
    row[4] = r.is_subject ? 1.0 : 0.0;
    row[5] = r.edit_label == EditLabel::introduced ? 1.0 : 0.0;
    row[6] = r.edit_label == EditLabel::altered ? 1.0 : 0.0;
    row[7] = r.edit_label == EditLabel::missing ? 1.0 : 0.0;
    for (int dcol = kSynthAttributeDims; dcol < dim; ++dcol) {
      uint64_t key = mix_keys(mix_keys(seed, static_cast<uint64_t>(r.index)), static_cast<uint64_t>(dcol));
      // 24-bit mantissa so the value is exact in f32
      double unit = static_cast<double>(key >> 40) * 0x1.0p-24;
      row[dcol] = static_cast<float>(2.0 * unit - 1.0);
    }
  }
  return t;
}

}  // namespace emu
