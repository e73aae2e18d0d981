#include "poolface/feature_store.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "poolface/serialize.hpp"

namespace poolface::embedding {

namespace {
constexpr char kMagic[4] = {'F', 'P', 'F', '1'};
}

void write_fpf1(const std::string& path, const Fpf1Matrix& m) {
  if (m.values.size() != static_cast<std::size_t>(m.rows) * m.cols) {
    throw Error(ErrorCode::ShapeMismatch, "FPF1 matrix size does not match its header");
  }
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(m.rows);
  w.u32(m.cols);
  for (float f : m.values) w.f32(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Fpf1Matrix read_fpf1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (bytes.size() < 4 || r.u8() != static_cast<std::uint8_t>(c)) {
      throw Error(ErrorCode::ParseError, path + ": not an FPF1 file");
    }
  }
  Fpf1Matrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  const std::size_t count = static_cast<std::size_t>(m.rows) * m.cols;
  if (bytes.size() != 12 + 4 * count) {
    throw Error(ErrorCode::ParseError, path + ": payload size does not match header");
  }
  m.values.resize(count);
  for (float& f : m.values) f = r.f32();
  return m;
}

std::string sidecar_path(const std::string& path) { return path + ".json"; }

FeatureStore::FeatureStore(std::string extractor_id, std::uint32_t dim)
    : extractor_id_(std::move(extractor_id)), dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::ValidationError, "feature dimension must be positive");
}

FeatureStore FeatureStore::load(const std::string& path) {
  const Fpf1Matrix m = read_fpf1(path);
  std::ifstream in(sidecar_path(path));
  if (!in) throw Error(ErrorCode::IoError, "missing feature sidecar " + sidecar_path(path));
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, sidecar_path(path) + ": " + e.what());
  }
  if (!side.contains("ids") || !side["ids"].is_array() || side["ids"].size() != m.rows) {
    throw Error(ErrorCode::ValidationError, sidecar_path(path) + ": ids must list every row");
  }
  FeatureStore store(side.value("extractor_id", "external"), m.cols);
  for (std::uint32_t i = 0; i < m.rows; ++i) {
    const std::string id = side["ids"][i].get<std::string>();
    if (!store.rows_.emplace(id, i).second) {
      throw Error(ErrorCode::ValidationError, "feature store: repeated id " + id);
    }
    store.ids_.push_back(id);
  }
  store.values_ = m.values;
  for (float f : store.values_) {
    if (!std::isfinite(f)) throw Error(ErrorCode::ValidationError, "feature store has non-finite values");
  }
  return store;
}

void FeatureStore::save(const std::string& path) const {
  write_fpf1(path, {static_cast<std::uint32_t>(ids_.size()), dim_, values_});
  nlohmann::json side;
  side["extractor_id"] = extractor_id_;
  side["ids"] = ids_;
  std::ofstream out(sidecar_path(path));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + sidecar_path(path));
  out << side.dump(2) << '\n';
}

void FeatureStore::add(const std::string& id, const std::vector<double>& values) {
  if (values.size() != dim_) {
    throw Error(ErrorCode::MixedExtractors, "feature " + id + " has the wrong dimension");
  }
  if (!rows_.emplace(id, ids_.size()).second) {
    throw Error(ErrorCode::ValidationError, "feature store: repeated id " + id);
  }
  ids_.push_back(id);
  for (double v : values) values_.push_back(static_cast<float>(v));
}

bool FeatureStore::contains(std::string_view id) const { return rows_.find(id) != rows_.end(); }

FeatureVector FeatureStore::lookup(std::string_view id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) {
    throw Error(ErrorCode::MissingExternalFeature, "no stored feature for '" + std::string(id) + "'");
  }
  FeatureVector v;
  v.extractor_id = extractor_id_;
  v.values.assign(values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_),
                  values_.begin() + static_cast<std::ptrdiff_t>((it->second + 1) * dim_));
  return v;
}

}  // namespace poolface::embedding
