#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poolface/core.hpp"

namespace poolface {

/// Little-endian binary encoding of the core types. Decoding an encoded
/// value reproduces it bit-exactly, including NaN payloads of missing
/// landmarks.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v);
  void f64(double v);
  void str(const std::string& s);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() && { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32();
  double f64();
  std::string str();

  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write(ByteWriter& w, const Raster& v);
void write(ByteWriter& w, const FaceMedia& v);
void write(ByteWriter& w, const Template& v);
void write(ByteWriter& w, const BinKey& v);
void write(ByteWriter& w, const FeatureVector& v);
void write(ByteWriter& w, const PooledEntry& v);
void write(ByteWriter& w, const PooledTemplate& v);

void read(ByteReader& r, Raster& v);
void read(ByteReader& r, FaceMedia& v);
void read(ByteReader& r, Template& v);
void read(ByteReader& r, BinKey& v);
void read(ByteReader& r, FeatureVector& v);
void read(ByteReader& r, PooledEntry& v);
void read(ByteReader& r, PooledTemplate& v);

template <class T>
std::vector<std::uint8_t> to_bytes(const T& value) {
  ByteWriter w;
  write(w, value);
  return std::move(w).take();
}

template <class T>
T from_bytes(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  T value{};
  read(r, value);
  if (!r.at_end()) throw Error(ErrorCode::ParseError, "trailing bytes after value");
  return value;
}

}  // namespace poolface
