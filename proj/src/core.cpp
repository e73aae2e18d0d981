#include <algorithm>
#include <cmath>
#include <set>

#include "poolface/core.hpp"

namespace poolface {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::MissingEyeLandmarks: return "MissingEyeLandmarks";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyTemplate: return "EmptyTemplate";
    case ErrorCode::MissingExternalFeature: return "MissingExternalFeature";
    case ErrorCode::ZeroVarianceImage: return "ZeroVarianceImage";
    case ErrorCode::MixedExtractors: return "MixedExtractors";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidTemplatePair: return "InvalidTemplatePair";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::EmptyScoreList: return "EmptyScoreList";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::ProbeSubjectNotEnrolled: return "ProbeSubjectNotEnrolled";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

bool is_validation_error(ErrorCode code) {
  return code == ErrorCode::ParseError || code == ErrorCode::ValidationError;
}

void rethrow_with_context(const Error& e, std::string_view context) {
  throw Error(e.code(), std::string(context) + ": " + e.message());
}

// ---------------------------------------------------------------------------
// Raster

Raster::Raster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw Error(ErrorCode::ShapeMismatch, "negative raster dimension");
  }
  data_.assign(plane_size() * static_cast<std::size_t>(channels), fill);
}

Raster to_grayscale(const Raster& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "grayscale conversion needs 1 or 3 channels");
  }
  Raster gray(image.width(), image.height(), 1);
  auto r = image.plane(0);
  auto g = image.plane(1);
  auto b = image.plane(2);
  auto out = gray.plane(0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  }
  return gray;
}

float sample_bilinear(const Raster& image, int channel, double x, double y) noexcept {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  // Far outside: avoid int overflow on the casts below.
  if (fx < -2.0 || fy < -2.0 || fx > image.width() + 1.0 || fy > image.height() + 1.0) return 0.0f;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  auto px = [&](int xx, int yy) -> double {
    if (xx < 0 || yy < 0 || xx >= image.width() || yy >= image.height()) return 0.0;
    return image.at(channel, yy, xx);
  };
  const double top = (1.0 - ax) * px(x0, y0) + ax * px(x0 + 1, y0);
  const double bottom = (1.0 - ax) * px(x0, y0 + 1) + ax * px(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

Raster gaussian_blur(const Raster& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;

  const int w = image.width();
  const int h = image.height();
  Raster tmp(w, h, image.channels());
  Raster out(w, h, image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * image.at(c, y, std::clamp(x + k, 0, w - 1));
        }
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * tmp.at(c, std::clamp(y + k, 0, h - 1), x);
        }
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

float max_abs_diff(const Raster& a, const Raster& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "max_abs_diff on different shapes");
  float worst = 0.0f;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::fabs(da[i] - db[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// Domain types

bool Point2::valid() const noexcept { return std::isfinite(x) && std::isfinite(y); }

std::string_view to_string(MediaKind kind) {
  return kind == MediaKind::frame ? "frame" : "still";
}

MediaKind media_kind_from_string(std::string_view name) {
  if (name == "still") return MediaKind::still;
  if (name == "frame") return MediaKind::frame;
  throw Error(ErrorCode::ValidationError, "unknown media_kind '" + std::string(name) + "'");
}

void validate(const FaceMedia& media) {
  const int w = media.image.width();
  const int h = media.image.height();
  if (w < 8 || h < 8) {
    throw Error(ErrorCode::ValidationError,
                "media " + media.media_id + ": image must be at least 8x8");
  }
  for (int i = 0; i < kLandmarkCount; ++i) {
    const Point2& p = media.landmarks[i];
    if (!p.valid()) continue;
    if (p.x < -0.5 * w || p.x > 1.5 * w || p.y < -0.5 * h || p.y > 1.5 * h) {
      throw Error(ErrorCode::ValidationError, "media " + media.media_id + ": landmark " +
                                                  std::to_string(i) + " lies far outside the image");
    }
  }
}

void validate(const Template& t) {
  if (t.media.empty()) {
    throw Error(ErrorCode::EmptyTemplate, "template " + t.template_id + " has no media");
  }
  std::set<std::string_view> seen;
  for (const auto& m : t.media) {
    if (!seen.insert(m.media_id).second) {
      throw Error(ErrorCode::ValidationError,
                  "template " + t.template_id + ": duplicate media_id " + m.media_id);
    }
  }
}

std::string BinKey::code() const {
  return std::to_string(pose_bin) + std::to_string(quality_bin);
}

bool BinKey::valid() const noexcept {
  return pose_bin >= 0 && pose_bin < kPoseBins && quality_bin >= 0 && quality_bin < kQualityBins;
}

BinKey BinKey::from_index(int index) {
  if (index < 0 || index >= kBinCount) {
    throw Error(ErrorCode::ValidationError, "bin index out of range");
  }
  return {index / kQualityBins, index % kQualityBins};
}

std::string_view to_string(PoolMode mode) {
  switch (mode) {
    case PoolMode::all_images: return "all_images";
    case PoolMode::single_image: return "single_image";
    case PoolMode::single_feature: return "single_feature";
    case PoolMode::random_per_bin: return "random_per_bin";
    case PoolMode::feature_per_bin: return "feature_per_bin";
    case PoolMode::image_per_bin: return "image_per_bin";
  }
  return "image_per_bin";
}

PoolMode pool_mode_from_string(std::string_view name) {
  for (PoolMode m : {PoolMode::all_images, PoolMode::single_image, PoolMode::single_feature,
                     PoolMode::random_per_bin, PoolMode::feature_per_bin, PoolMode::image_per_bin}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::ValidationError, "unknown pooling mode '" + std::string(name) + "'");
}

bool defers_to_feature_pooling(PoolMode mode) {
  return mode == PoolMode::single_feature || mode == PoolMode::feature_per_bin;
}

void validate(const PooledTemplate& t) {
  if (t.entries.empty()) {
    throw Error(ErrorCode::EmptyTemplate, "pooled template " + t.template_id + " has no entries");
  }
  long total = 0;
  for (const auto& e : t.entries) {
    if (e.member_count < 1 || !e.key.valid()) {
      throw Error(ErrorCode::ValidationError, "pooled template " + t.template_id + ": bad entry");
    }
    total += e.member_count;
  }
  if (t.mode != PoolMode::all_images) {
    const auto cap = std::min<std::size_t>(kBinCount, static_cast<std::size_t>(t.source_count));
    if (t.entries.size() > cap) {
      throw Error(ErrorCode::ValidationError,
                  "pooled template " + t.template_id + " has more entries than bins or media");
    }
  }
  if (total != t.source_count) {
    throw Error(ErrorCode::ValidationError,
                "pooled template " + t.template_id + ": member counts do not sum to N");
  }
}

}  // namespace poolface
