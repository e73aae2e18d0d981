#include "poolface/pooling.hpp"

#include <algorithm>

#include "poolface/rng.hpp"

namespace poolface::pooling {

namespace {

void check_shapes(std::span<const Raster* const> faces) {
  if (faces.empty()) throw Error(ErrorCode::EmptyBin, "cannot pool an empty bin");
  for (const Raster* r : faces) {
    if (!r->same_shape(*faces.front()) || r->empty()) {
      throw Error(ErrorCode::ShapeMismatch, "pooled rasters differ in shape");
    }
  }
}

std::vector<const Raster*> canonical_order(std::span<const Raster* const> faces) {
  std::vector<const Raster*> order(faces.begin(), faces.end());
  std::stable_sort(order.begin(), order.end(), [](const Raster* a, const Raster* b) {
    auto da = a->data();
    auto db = b->data();
    return std::lexicographical_compare(da.begin(), da.end(), db.begin(), db.end());
  });
  return order;
}

std::string bin_entry_id(const std::string& template_id, const BinKey& key) {
  return template_id + "/" + key.code();
}

}  // namespace

BinKey assign_bin(const pose::AlignedFace& face, const quality::QualityScore& q,
                  const pose::YawBinEdges& yaw_bins) {
  return {pose::quantize_yaw(face.pose.yaw_deg, yaw_bins), q.quality_bin};
}

BinnedTemplate bin_template(const PreparedTemplate& t) {
  BinnedTemplate out;
  out.template_id = t.template_id;
  for (const auto& f : t.faces) out.bins[f.bin].push_back(&f);
  for (auto& [key, members] : out.bins) {
    std::sort(members.begin(), members.end(), [](const PreparedFace* a, const PreparedFace* b) {
      return a->face.media_id < b->face.media_id;
    });
  }
  return out;
}

Raster pool_bin(std::span<const Raster* const> faces) {
  check_shapes(faces);
  const auto order = canonical_order(faces);
  const Raster& first = *order.front();
  const std::size_t n = first.data().size();
  std::vector<double> acc(n, 0.0);
  for (const Raster* r : order) {
    auto d = r->data();
    for (std::size_t i = 0; i < n; ++i) acc[i] += d[i];
  }
  Raster out(first.width(), first.height(), first.channels());
  auto od = out.data();
  const double count = static_cast<double>(order.size());
  for (std::size_t i = 0; i < n; ++i) {
    od[i] = std::clamp(static_cast<float>(acc[i] / count), 0.0f, 1.0f);
  }
  return out;
}

Raster pool_bin(std::span<const Raster> faces) {
  std::vector<const Raster*> refs;
  refs.reserve(faces.size());
  for (const Raster& r : faces) refs.push_back(&r);
  return pool_bin(std::span<const Raster* const>(refs));
}

Raster median_pool_bin(std::span<const Raster* const> faces) {
  check_shapes(faces);
  const Raster& first = *faces.front();
  Raster out(first.width(), first.height(), first.channels());
  auto od = out.data();
  std::vector<float> column(faces.size());
  const std::size_t mid = faces.size() / 2;
  for (std::size_t i = 0; i < od.size(); ++i) {
    for (std::size_t k = 0; k < faces.size(); ++k) column[k] = faces[k]->data()[i];
    std::sort(column.begin(), column.end());
    od[i] = faces.size() % 2 == 1
                ? column[mid]
                : static_cast<float>(0.5 * (static_cast<double>(column[mid - 1]) + column[mid]));
  }
  return out;
}

PooledTemplate pool_template(const PreparedTemplate& t, PoolMode mode, const PoolOptions& options) {
  if (t.faces.empty()) {
    throw Error(ErrorCode::EmptyTemplate, "template " + t.template_id + " has no usable media");
  }
  PooledTemplate out;
  out.template_id = t.template_id;
  out.subject_id = t.subject_id;
  out.mode = mode;
  out.source_count = static_cast<int>(t.faces.size());

  const BinnedTemplate binned = bin_template(t);
  auto pool = [&](const std::vector<const PreparedFace*>& members) {
    std::vector<const Raster*> rasters;
    rasters.reserve(members.size());
    for (const PreparedFace* f : members) rasters.push_back(&f->face.raster);
    return options.statistic == PixelStatistic::median ? median_pool_bin(rasters) : pool_bin(rasters);
  };
  auto ids_of = [](const std::vector<const PreparedFace*>& members) {
    std::vector<std::string> ids;
    for (const PreparedFace* f : members) ids.push_back(f->face.media_id);
    return ids;
  };
  auto images_of = [](const std::vector<const PreparedFace*>& members) {
    std::vector<Raster> images;
    for (const PreparedFace* f : members) images.push_back(f->face.raster);
    return images;
  };

  std::vector<const PreparedFace*> everyone;
  for (const auto& [key, members] : binned.bins) everyone.insert(everyone.end(), members.begin(), members.end());
  std::sort(everyone.begin(), everyone.end(), [](const PreparedFace* a, const PreparedFace* b) {
    return a->face.media_id < b->face.media_id;
  });

  switch (mode) {
    case PoolMode::all_images:
      for (const auto& [key, members] : binned.bins) {
        for (const PreparedFace* f : members) {
          PooledEntry e;
          e.key = key;
          e.entry_id = f->face.media_id;
          e.image = f->face.raster;
          e.member_ids = {f->face.media_id};
          e.member_count = 1;
          out.entries.push_back(std::move(e));
        }
      }
      break;

    case PoolMode::single_image:
    case PoolMode::single_feature: {
      PooledEntry e;
      e.entry_id = t.template_id + "/all";
      e.member_ids = ids_of(everyone);
      e.member_count = static_cast<int>(everyone.size());
      if (mode == PoolMode::single_image) {
        e.image = pool(everyone);
      } else {
        e.member_images = images_of(everyone);
      }
      out.entries.push_back(std::move(e));
      break;
    }

    case PoolMode::random_per_bin:
      for (const auto& [key, members] : binned.bins) {
        SplitMix64 rng(options.seed ^ fnv1a(t.template_id) ^
                       (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(key.index() + 1)));
        const PreparedFace* chosen = members[rng.below(members.size())];
        PooledEntry e;
        e.key = key;
        e.entry_id = chosen->face.media_id;
        e.image = chosen->face.raster;
        e.member_ids = ids_of(members);
        e.member_count = static_cast<int>(members.size());
        out.entries.push_back(std::move(e));
      }
      break;

    case PoolMode::feature_per_bin:
    case PoolMode::image_per_bin:
      for (const auto& [key, members] : binned.bins) {
        PooledEntry e;
        e.key = key;
        e.entry_id = bin_entry_id(t.template_id, key);
        e.member_ids = ids_of(members);
        e.member_count = static_cast<int>(members.size());
        if (mode == PoolMode::image_per_bin) {
          e.image = pool(members);
        } else {
          e.member_images = images_of(members);
        }
        out.entries.push_back(std::move(e));
      }
      break;
  }
  return out;
}

}  // namespace poolface::pooling
