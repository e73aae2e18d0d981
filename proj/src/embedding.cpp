#include "poolface/embedding.hpp"

#include <algorithm>
#include <cmath>

namespace poolface::embedding {

namespace {

double centered_norm(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Spread below this fraction of the vector's magnitude counts as constant.
bool negligible_spread(const std::vector<double>& v, double mean, double norm) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::fabs(x));
  return norm <= 1e-12 * std::max(scale, 1e-300) * std::sqrt(static_cast<double>(v.size())) ||
         norm == 0.0 || !std::isfinite(mean);
}

}  // namespace

Extractor::Extractor(ExtractorKind kind, std::string id, std::size_t dim,
                     std::shared_ptr<const FeatureStore> store)
    : kind_(kind), id_(std::move(id)), dim_(dim), store_(std::move(store)) {}

Extractor Extractor::baseline_pixels() {
  return Extractor(ExtractorKind::baseline_pixels, "baseline_pixels_32x32",
                   kBaselineSide * kBaselineSide, nullptr);
}

Extractor Extractor::external(std::shared_ptr<const FeatureStore> store) {
  if (!store) throw Error(ErrorCode::ValidationError, "external extractor needs a feature store");
  const std::string id = store->extractor_id();
  const std::size_t dim = store->dim();
  return Extractor(ExtractorKind::external_lookup, id, dim, std::move(store));
}

Raster area_resize(const Raster& gray, int width, int height) {
  Raster out(width, height, 1);
  const double sx = static_cast<double>(gray.width()) / width;
  const double sy = static_cast<double>(gray.height()) / height;
  for (int oy = 0; oy < height; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    for (int ox = 0; ox < width; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      double acc = 0.0;
      for (int y = static_cast<int>(std::floor(y0)); y < static_cast<int>(std::ceil(y1)); ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        for (int x = static_cast<int>(std::floor(x0)); x < static_cast<int>(std::ceil(x1)); ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          acc += wx * wy * gray.at(0, y, x);
        }
      }
      out.at(0, oy, ox) = static_cast<float>(acc / (sx * sy));
    }
  }
  return out;
}

FeatureVector Extractor::extract(const Raster& raster, std::string_view provenance_id) const {
  if (kind_ == ExtractorKind::external_lookup) return store_->lookup(provenance_id);

  const Raster small = area_resize(to_grayscale(raster), kBaselineSide, kBaselineSide);
  FeatureVector fv;
  fv.extractor_id = id_;
  fv.values.assign(small.data().begin(), small.data().end());
  const double mean = mean_of(fv.values);
  const double norm = centered_norm(fv.values, mean);
  if (negligible_spread(fv.values, mean, norm)) {
    throw Error(ErrorCode::ZeroVarianceImage,
                "constant raster for '" + std::string(provenance_id) + "'");
  }
  for (double& v : fv.values) v = (v - mean) / norm;
  return fv;
}

FeatureVector pool_features(std::span<const FeatureVector> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptySequence, "no features to pool");
  const FeatureVector& first = xs.front();
  if (first.empty()) throw Error(ErrorCode::EmptySequence, "empty feature vector");
  FeatureVector out;
  out.extractor_id = first.extractor_id;
  out.values.assign(first.dim(), 0.0);
  for (const auto& x : xs) {
    if (x.extractor_id != first.extractor_id || x.dim() != first.dim()) {
      throw Error(ErrorCode::MixedExtractors, "cannot pool features from different extractors");
    }
    for (std::size_t i = 0; i < x.dim(); ++i) out.values[i] += x.values[i];
  }
  const double n = static_cast<double>(xs.size());
  double ss = 0.0;
  for (double& v : out.values) {
    v /= n;
    ss += v * v;
  }
  const double norm = std::sqrt(ss);
  if (!(norm > 0.0)) throw Error(ErrorCode::ZeroVariance, "pooled feature has zero norm");
  for (double& v : out.values) v /= norm;
  return out;
}

double ncc(const FeatureVector& x, const FeatureVector& y) {
  if (x.extractor_id != y.extractor_id || x.dim() != y.dim()) {
    throw Error(ErrorCode::MixedExtractors, "ncc on features from different extractors");
  }
  if (x.empty()) throw Error(ErrorCode::ZeroVariance, "ncc on empty features");
  const double mx = mean_of(x.values);
  const double my = mean_of(y.values);
  const double nx = centered_norm(x.values, mx);
  const double ny = centered_norm(y.values, my);
  if (negligible_spread(x.values, mx, nx) || negligible_spread(y.values, my, ny)) {
    throw Error(ErrorCode::ZeroVariance, "ncc on a constant feature vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) dot += (x.values[i] - mx) * (y.values[i] - my);
  return std::clamp(dot / (nx * ny), -1.0, 1.0);
}

void embed_template(PooledTemplate& t, const Extractor& extractor) {
  for (auto& e : t.entries) {
    try {
      if (!e.member_images.empty()) {
        std::vector<FeatureVector> members;
        members.reserve(e.member_images.size());
        for (std::size_t i = 0; i < e.member_images.size(); ++i) {
          members.push_back(extractor.extract(e.member_images[i], e.member_ids.at(i)));
        }
        e.feature = pool_features(members);
      } else {
        e.feature = extractor.extract(e.image, e.entry_id);
      }
    } catch (const Error& err) {
      rethrow_with_context(err, "template " + t.template_id + " entry " + e.entry_id);
    }
  }
}

}  // namespace poolface::embedding
