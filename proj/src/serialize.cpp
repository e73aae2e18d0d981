#include "poolface/serialize.hpp"

#include <bit>
#include <cstring>

namespace poolface {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw Error(ErrorCode::ParseError, "truncated binary record");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

// ---------------------------------------------------------------------------

void write(ByteWriter& w, const Raster& v) {
  w.i32(v.width());
  w.i32(v.height());
  w.i32(v.channels());
  for (float f : v.data()) w.f32(f);
}

void read(ByteReader& r, Raster& v) {
  const int width = r.i32();
  const int height = r.i32();
  const int channels = r.i32();
  if (width < 0 || height < 0 || channels < 0 || channels > 4) {
    throw Error(ErrorCode::ParseError, "bad raster header");
  }
  v = Raster(width, height, channels);
  for (float& f : v.data()) f = r.f32();
}

void write(ByteWriter& w, const FaceMedia& v) {
  w.str(v.media_id);
  write(w, v.image);
  for (const Point2& p : v.landmarks) {
    w.f64(p.x);
    w.f64(p.y);
  }
  w.u8(static_cast<std::uint8_t>(v.media_kind));
  w.str(v.source_path);
}

void read(ByteReader& r, FaceMedia& v) {
  v.media_id = r.str();
  read(r, v.image);
  for (Point2& p : v.landmarks) {
    p.x = r.f64();
    p.y = r.f64();
  }
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw Error(ErrorCode::ParseError, "bad media kind");
  v.media_kind = static_cast<MediaKind>(kind);
  v.source_path = r.str();
}

void write(ByteWriter& w, const Template& v) {
  w.str(v.template_id);
  w.str(v.subject_id);
  w.u32(static_cast<std::uint32_t>(v.media.size()));
  for (const auto& m : v.media) write(w, m);
}

void read(ByteReader& r, Template& v) {
  v.template_id = r.str();
  v.subject_id = r.str();
  v.media.resize(r.u32());
  for (auto& m : v.media) read(r, m);
}

void write(ByteWriter& w, const BinKey& v) {
  w.u8(static_cast<std::uint8_t>(v.pose_bin));
  w.u8(static_cast<std::uint8_t>(v.quality_bin));
}

void read(ByteReader& r, BinKey& v) {
  v.pose_bin = r.u8();
  v.quality_bin = r.u8();
  if (!v.valid()) throw Error(ErrorCode::ParseError, "bad bin key");
}

void write(ByteWriter& w, const FeatureVector& v) {
  w.str(v.extractor_id);
  w.u32(static_cast<std::uint32_t>(v.values.size()));
  for (double d : v.values) w.f64(d);
}

void read(ByteReader& r, FeatureVector& v) {
  v.extractor_id = r.str();
  v.values.resize(r.u32());
  for (double& d : v.values) d = r.f64();
}

void write(ByteWriter& w, const PooledEntry& v) {
  write(w, v.key);
  w.str(v.entry_id);
  write(w, v.image);
  w.u32(static_cast<std::uint32_t>(v.member_images.size()));
  for (const auto& m : v.member_images) write(w, m);
  w.u32(static_cast<std::uint32_t>(v.member_ids.size()));
  for (const auto& id : v.member_ids) w.str(id);
  w.i32(v.member_count);
  write(w, v.feature);
}

void read(ByteReader& r, PooledEntry& v) {
  read(r, v.key);
  v.entry_id = r.str();
  read(r, v.image);
  v.member_images.resize(r.u32());
  for (auto& m : v.member_images) read(r, m);
  v.member_ids.resize(r.u32());
  for (auto& id : v.member_ids) id = r.str();
  v.member_count = r.i32();
  read(r, v.feature);
}

void write(ByteWriter& w, const PooledTemplate& v) {
  w.str(v.template_id);
  w.str(v.subject_id);
  w.u8(static_cast<std::uint8_t>(v.mode));
  w.i32(v.source_count);
  w.u32(static_cast<std::uint32_t>(v.entries.size()));
  for (const auto& e : v.entries) write(w, e);
}

void read(ByteReader& r, PooledTemplate& v) {
  v.template_id = r.str();
  v.subject_id = r.str();
  const std::uint8_t mode = r.u8();
  if (mode > static_cast<std::uint8_t>(PoolMode::image_per_bin)) {
    throw Error(ErrorCode::ParseError, "bad pool mode");
  }
  v.mode = static_cast<PoolMode>(mode);
  v.source_count = r.i32();
  v.entries.resize(r.u32());
  for (auto& e : v.entries) read(r, e);
}

}  // namespace poolface
