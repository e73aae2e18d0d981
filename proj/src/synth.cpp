#include "poolface/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "poolface/image_io.hpp"
#include "poolface/parallel.hpp"
#include "poolface/pose.hpp"
#include "poolface/rng.hpp"

namespace poolface::ingest {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Canonical texture frame: 256 x 256, eye midpoint at (128, 100), 80 px per
// inter-ocular unit.
constexpr int kTexSize = 256;
constexpr double kTexCx = 128.0;
constexpr double kTexCy = 100.0;
constexpr double kTexScale = 80.0;

// Yaw warp: u' = u cos(t) + P sin(t) psi(u'), psi a Gaussian bump.
constexpr double kBumpWidth = 0.8;
constexpr double kBumpGain = 0.35;

constexpr double kBlurLevels[] = {0.0, 0.7, 1.5, 2.5, 4.0};
constexpr double kMaxYaw = 70.0;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

double bump(double u) { return std::exp(-u * u / (2.0 * kBumpWidth * kBumpWidth)); }

/// Face-plane u for a rendered u'.
double unwarp(double u_img, double yaw_deg) {
  const double t = deg2rad(yaw_deg);
  return (u_img - std::sin(t) * kBumpGain * bump(u_img)) / std::cos(t);
}

/// Rendered u' for a face-plane u (unwarp is monotone, so bisect).
double warp(double u, double yaw_deg) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (unwarp(mid, yaw_deg) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Subject {
  std::string id;
  std::array<std::array<double, 2>, kLandmarkCount> landmarks{};  // face units
  Raster value{kTexSize, kTexSize, 1, 0.0f};
  Raster alpha{kTexSize, kTexSize, 1, 0.0f};
  std::array<float, 3> tint{1.0f, 1.0f, 1.0f};
};

/// Generic-model landmarks in face units: eye midpoint at the origin,
/// inter-ocular distance 1, y down.
std::array<std::array<double, 2>, kLandmarkCount> base_landmarks() {
  const auto& model = pose::generic_head_model();
  auto eye = [&](int a, int b) {
    return Eigen::Vector2d(0.5 * (model.points[a].x() + model.points[b].x()),
                           0.5 * (model.points[a].y() + model.points[b].y()));
  };
  const Eigen::Vector2d left = eye(landmark::kLeftEyeOuter, landmark::kLeftEyeInner);
  const Eigen::Vector2d right = eye(landmark::kRightEyeInner, landmark::kRightEyeOuter);
  const Eigen::Vector2d mid = 0.5 * (left + right);
  const double d = (right - left).norm();
  std::array<std::array<double, 2>, kLandmarkCount> out{};
  for (int i = 0; i < kLandmarkCount; ++i) {
    out[i] = {(model.points[i].x() - mid.x()) / d, (model.points[i].y() - mid.y()) / d};
  }
  return out;
}

void add_spot(Raster& r, double u, double v, double radius, double amplitude) {
  const double cx = kTexCx + kTexScale * u;
  const double cy = kTexCy + kTexScale * v;
  const double rp = radius * kTexScale;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - 3 * rp)));
  const int x1 = std::min(kTexSize - 1, static_cast<int>(std::ceil(cx + 3 * rp)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - 3 * rp)));
  const int y1 = std::min(kTexSize - 1, static_cast<int>(std::ceil(cy + 3 * rp)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      r.at(0, y, x) += static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) / (2 * rp * rp)));
    }
  }
}

Subject make_subject(const std::string& id, std::uint64_t seed) {
  SplitMix64 rng(seed ^ fnv1a(id));
  Subject s;
  s.id = id;
  s.landmarks = base_landmarks();
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (i >= 36 && i <= 47) continue;  // keep the eye frame exact
    s.landmarks[i][0] += 0.03 * rng.normal();
    s.landmarks[i][1] += 0.03 * rng.normal();
  }

  const double skin = rng.uniform(0.45, 0.75);
  const double hair = rng.uniform(0.05, 0.5);
  const double hairline = rng.uniform(-0.75, -0.45);
  const double hair_wave = rng.uniform(-0.1, 0.1);
  const double rx = rng.uniform(0.95, 1.2);
  const double ry = rng.uniform(1.3, 1.5);
  const double vc = 0.4;
  s.tint = {1.0f, static_cast<float>(rng.uniform(0.75, 0.9)), static_cast<float>(rng.uniform(0.6, 0.8))};

  Raster detail(kTexSize, kTexSize, 1, 0.0f);
  for (int k = 0; k < 14; ++k) {
    add_spot(detail, rng.uniform(-0.9, 0.9), rng.uniform(-0.5, 1.4), rng.uniform(0.08, 0.3),
             rng.uniform(-0.18, 0.18));
  }
  const double eye_dark = rng.uniform(0.25, 0.45);
  const double brow_dark = rng.uniform(0.1, 0.4);
  const double brow_r = rng.uniform(0.035, 0.07);
  const double nose_dark = rng.uniform(0.05, 0.2);
  const double mouth_dark = rng.uniform(0.1, 0.35);
  for (int i = 17; i <= 26; ++i) add_spot(detail, s.landmarks[i][0], s.landmarks[i][1], brow_r, -brow_dark);
  for (int i = 27; i <= 35; ++i) add_spot(detail, s.landmarks[i][0], s.landmarks[i][1], 0.045, -nose_dark);
  for (int i = 36; i <= 47; ++i) add_spot(detail, s.landmarks[i][0], s.landmarks[i][1], 0.055, -eye_dark);
  for (int i = 48; i <= 59; ++i) add_spot(detail, s.landmarks[i][0], s.landmarks[i][1], 0.05, -mouth_dark);

  // Fine skin and hair texture: blurred white noise at unit variance.
  auto fine_noise = [&](double sigma) {
    Raster n(kTexSize, kTexSize, 1, 0.0f);
    for (float& v : n.data()) v = static_cast<float>(rng.normal());
    n = gaussian_blur(n, sigma);
    double ss = 0.0;
    for (float v : n.data()) ss += static_cast<double>(v) * v;
    const float scale = static_cast<float>(1.0 / std::sqrt(ss / static_cast<double>(n.data().size())));
    for (float& v : n.data()) v *= scale;
    return n;
  };
  const Raster skin_grain = fine_noise(0.6);
  const Raster hair_grain = fine_noise(0.6);
  const double skin_amp = rng.uniform(0.10, 0.18);
  const double hair_amp = rng.uniform(0.15, 0.25);

  for (int y = 0; y < kTexSize; ++y) {
    for (int x = 0; x < kTexSize; ++x) {
      const double u = (x - kTexCx) / kTexScale;
      const double v = (y - kTexCy) / kTexScale;
      const double e = (u / rx) * (u / rx) + ((v - vc) / ry) * ((v - vc) / ry);
      s.alpha.at(0, y, x) = static_cast<float>(std::clamp((1.0 - e) / 0.08, 0.0, 1.0));
      double val = skin * (1.0 - 0.15 * u * u) + detail.at(0, y, x) + skin_amp * skin_grain.at(0, y, x);
      const double line = hairline + hair_wave * std::sin(3.0 * u) + 0.25 * u * u;
      const double h = std::clamp((line - v) / 0.06 + 0.5, 0.0, 1.0);
      val = (1.0 - h) * val + h * (hair + hair_amp * hair_grain.at(0, y, x));
      s.value.at(0, y, x) = static_cast<float>(std::clamp(val, 0.0, 1.0));
    }
  }
  return s;
}

struct MediaPlan {
  std::size_t subject = 0;
  std::string media_id;
  std::string template_id;
  MediaKind kind = MediaKind::still;
  double yaw = 0.0;
  double roll = 0.0;
  double iod = 40.0;
  int width = 0;
  int height = 0;
  double mx = 0.0;
  double my = 0.0;
  double blur = 0.0;
  double noise = 0.0;
  double bg0 = 0.5, bgx = 0.0, bgy = 0.0;
  double clutter_amp = 0.0, clutter_cell = 4.0;
  std::uint64_t clutter_seed = 0;
  double grain = 0.0;  // pre-blur background texture
  std::array<float, 3> bg_tint{1.0f, 1.0f, 1.0f};
  std::uint64_t noise_seed = 0;
};

/// Draws the background and viewing conditions shared by a video's frames
/// or a single still.
void draw_conditions(MediaPlan& p, SplitMix64& rng) {
  p.iod = rng.uniform(20.0, 70.0);
  p.width = static_cast<int>(std::lround(p.iod * rng.uniform(4.0, 4.6)));
  p.height = static_cast<int>(std::lround(p.iod * rng.uniform(4.8, 5.4)));
  p.mx = 0.5 * p.width + 0.15 * p.iod * rng.normal();
  p.my = 0.4 * p.height + 0.15 * p.iod * rng.normal();
  p.blur = kBlurLevels[rng.below(5)];
  p.noise = rng.uniform(0.0, 0.012);
  p.bg0 = rng.uniform(0.15, 0.85);
  p.bgx = rng.uniform(-0.3, 0.3);
  p.bgy = rng.uniform(-0.3, 0.3);
  p.clutter_amp = rng.uniform(0.05, 0.25);
  p.clutter_cell = rng.uniform(2.0, 8.0) * p.iod / 40.0;
  p.clutter_seed = rng.next();
  p.grain = rng.uniform(0.03, 0.08);
  p.bg_tint = {static_cast<float>(rng.uniform(0.7, 1.0)), static_cast<float>(rng.uniform(0.7, 1.0)),
               static_cast<float>(rng.uniform(0.7, 1.0))};
}

double draw_yaw(SplitMix64& rng) {
  const double magnitude = rng.uniform(0.0, kMaxYaw);
  return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

double draw_roll(SplitMix64& rng) { return std::clamp(10.0 * rng.normal(), -30.0, 30.0); }

std::string padded(std::size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::vector<MediaPlan> plan_template(std::size_t subject, const std::string& template_id, int count,
                                     SplitMix64& rng) {
  std::vector<MediaPlan> plans;
  int stills = count;
  if (count >= 4) stills = std::max(1, static_cast<int>(std::lround(rng.uniform(0.3, 1.0) * count)));
  for (int k = 0; k < count; ++k) {
    MediaPlan p;
    p.subject = subject;
    p.template_id = template_id;
    p.media_id = template_id + "_" + padded(static_cast<std::size_t>(k), 3);
    if (k < stills) {
      draw_conditions(p, rng);
      p.yaw = draw_yaw(rng);
      p.roll = draw_roll(rng);
    } else if (k == stills) {
      p.kind = MediaKind::frame;
      draw_conditions(p, rng);
      p.yaw = draw_yaw(rng);
      p.roll = draw_roll(rng);
    } else {
      // Next frame of the same clip: same capture, drifting pose.
      const MediaPlan& prev = plans.back();
      std::string id = p.media_id;
      p = prev;
      p.media_id = std::move(id);
      p.yaw = std::clamp(prev.yaw + rng.uniform(-4.0, 4.0), -kMaxYaw, kMaxYaw);
      p.roll = std::clamp(prev.roll + rng.uniform(-2.0, 2.0), -30.0, 30.0);
      p.noise = std::clamp(prev.noise + rng.uniform(-0.002, 0.002), 0.0, 0.012);
    }
    p.noise_seed = rng.next();
    plans.push_back(std::move(p));
  }
  return plans;
}

int draw_size(SplitMix64& rng, double mean) {
  // Lognormal with sd ~ 0.85 mean.
  const double sigma2 = std::log(1.0 + 0.85 * 0.85);
  const double mu = std::log(mean) - 0.5 * sigma2;
  const double x = std::exp(mu + std::sqrt(sigma2) * rng.normal());
  return std::clamp(static_cast<int>(std::lround(x)), 1, static_cast<int>(std::ceil(8.0 * mean)));
}

/// Bilinear lookup in a single-plane texture, 0 outside.
double tex(std::span<const float> t, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  if (x0 < -1 || y0 < -1 || x0 >= kTexSize || y0 >= kTexSize) return 0.0;
  const double ax = x - fx, ay = y - fy;
  auto at = [&](int xx, int yy) -> double {
    if (xx < 0 || yy < 0 || xx >= kTexSize || yy >= kTexSize) return 0.0;
    return t[static_cast<std::size_t>(yy) * kTexSize + static_cast<std::size_t>(xx)];
  };
  return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
         ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
}

/// Rendered image and its landmarks.
std::pair<Raster, Landmarks> render(const Subject& s, const MediaPlan& p) {
  const double c = std::cos(deg2rad(p.roll));
  const double sn = std::sin(deg2rad(p.roll));
  const double yaw_sin = std::sin(deg2rad(p.yaw)) * kBumpGain;
  const double yaw_cos = std::cos(deg2rad(p.yaw));
  const int ss = std::clamp(static_cast<int>(std::ceil(kTexScale / p.iod / 1.5)), 1, 4);

  // Background: gradient plus value-noise clutter on a coarse grid.
  const int gw = static_cast<int>(p.width / p.clutter_cell) + 2;
  const int gh = static_cast<int>(p.height / p.clutter_cell) + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw * gh));
  SplitMix64 clutter(p.clutter_seed);
  for (double& g : grid) g = clutter.uniform(-1.0, 1.0);
  auto background = [&](double x, double y) {
    const double gx = std::clamp(x / p.clutter_cell, 0.0, gw - 1.001);
    const double gy = std::clamp(y / p.clutter_cell, 0.0, gh - 1.001);
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double ax = gx - ix, ay = gy - iy;
    auto g = [&](int xx, int yy) { return grid[static_cast<std::size_t>(yy * gw + xx)]; };
    const double n = (1 - ay) * ((1 - ax) * g(ix, iy) + ax * g(ix + 1, iy)) +
                     ay * ((1 - ax) * g(ix, iy + 1) + ax * g(ix + 1, iy + 1));
    return p.bg0 + p.bgx * (x / p.width - 0.5) + p.bgy * (y / p.height - 0.5) + p.clutter_amp * n +
           p.grain * clutter.normal();
  };

  const auto value = s.value.plane(0);
  const auto alpha = s.alpha.plane(0);
  const double bump_k = 1.0 / (2.0 * kBumpWidth * kBumpWidth);
  Raster img(p.width, p.height, 3, 0.0f);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      double face = 0.0, cover = 0.0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double px = x + (sx + 0.5) / ss - 0.5;
          const double py = y + (sy + 0.5) / ss - 0.5;
          const double dx = (px - p.mx) / p.iod;
          const double dy = (py - p.my) / p.iod;
          const double u_img = c * dx + sn * dy;
          const double v = -sn * dx + c * dy;
          const double u = (u_img - yaw_sin * std::exp(-u_img * u_img * bump_k)) / yaw_cos;
          const double tx = kTexCx + kTexScale * u;
          const double ty = kTexCy + kTexScale * v;
          const double a = tex(alpha, tx, ty);
          if (a > 0.0) {
            face += a * tex(value, tx, ty);
            cover += a;
          }
        }
      }
      const double n = ss * ss;
      const double bg = background(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        img.at(ch, y, x) = static_cast<float>((face * s.tint[ch] + (n - cover) * bg * p.bg_tint[ch]) / n);
      }
    }
  }
  // Blur levels are in canonical-crop pixels (inter-ocular 0.32 * 128).
  const double sigma = p.blur * p.iod / (0.32 * 128.0);
  if (sigma > 0.0) img = gaussian_blur(img, sigma);
  SplitMix64 noise(p.noise_seed);
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double v = img.at(ch, y, x) + p.noise * noise.normal();
        img.at(ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }

  Landmarks lm{};
  for (int i = 0; i < kLandmarkCount; ++i) {
    const double u_img = warp(s.landmarks[i][0], p.yaw);
    const double v = s.landmarks[i][1];
    const double x = p.mx + p.iod * (c * u_img - sn * v) + 0.3 * noise.normal();
    const double y = p.my + p.iod * (sn * u_img + c * v) + 0.3 * noise.normal();
    // Round-trip through the JSON text exactly.
    lm[i] = {std::round(x * 1e4) / 1e4, std::round(y * 1e4) / 1e4};
  }
  return {std::move(img), lm};
}

}  // namespace

std::string ground_truth_to_json(const std::vector<SynthTruth>& truth) {
  ordered_json list = ordered_json::array();
  for (const auto& t : truth) {
    list.push_back({{"media_id", t.media_id},
                    {"template_id", t.template_id},
                    {"subject_id", t.subject_id},
                    {"media_kind", std::string(to_string(t.media_kind))},
                    {"yaw_deg", t.yaw_deg},
                    {"roll_deg", t.roll_deg},
                    {"inter_ocular_px", t.inter_ocular_px},
                    {"blur_level", t.blur_level},
                    {"noise_sd", t.noise_sd}});
  }
  ordered_json root;
  root["media"] = std::move(list);
  return root.dump(1) + "\n";
}

SynthBenchmark synth_benchmark(const SynthOptions& options, const std::string& out_dir) {
  if (options.n_subjects < 2) throw Error(ErrorCode::ValidationError, "synth needs at least 2 subjects");
  if (!(options.media_per_template >= 1.0)) {
    throw Error(ErrorCode::ValidationError, "synth needs media_per_template >= 1");
  }
  const int width = std::max(3, static_cast<int>(std::to_string(options.n_subjects - 1).size()));

  std::vector<Subject> subjects(static_cast<std::size_t>(options.n_subjects));
  parallel_for(subjects.size(), options.jobs, [&](std::size_t i) {
    subjects[i] = make_subject("s" + padded(i, width), options.seed);
  });

  SynthBenchmark bench;
  std::vector<MediaPlan> plans;
  SplitMix64 rng(options.seed ^ 0x5eed5eed5eed5eedULL);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (const char* side : {"_g", "_p"}) {
      const bool gallery = side[1] == 'g';
      const std::string tid = subjects[i].id + side;
      const double mean = gallery ? options.media_per_template : options.media_per_template / 3.0;
      auto t_plans = plan_template(i, tid, draw_size(rng, std::max(1.0, mean)), rng);
      plans.insert(plans.end(), t_plans.begin(), t_plans.end());
      bench.manifest.templates.push_back({tid, subjects[i].id, {}});
    }
  }

  const fs::path root(out_dir);
  fs::create_directories(root / "images");
  std::vector<Landmarks> landmarks(plans.size());
  parallel_for(plans.size(), options.jobs, [&](std::size_t k) {
    auto [img, lm] = render(subjects[plans[k].subject], plans[k]);
    write_png((root / "images" / (plans[k].media_id + ".png")).string(), img);
    landmarks[k] = lm;
  });

  std::size_t t = 0;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const MediaPlan& p = plans[k];
    while (bench.manifest.templates[t].template_id != p.template_id) ++t;
    MediaEntry e;
    e.media_id = p.media_id;
    e.path = "images/" + p.media_id + ".png";
    e.media_kind = p.kind;
    e.landmarks = landmarks[k];
    e.yaw_override_deg = std::round(p.yaw * 1e6) / 1e6;
    bench.manifest.templates[t].media.push_back(std::move(e));
    bench.truth.push_back({p.media_id, p.template_id, subjects[p.subject].id, p.kind, *bench.manifest.templates[t].media.back().yaw_override_deg,
                           p.roll, p.iod, p.blur, p.noise});
  }
  bench.manifest.base_dir = root.string();

  for (std::size_t i = 0; i < subjects.size(); ++i) {
    bench.protocol.gallery.push_back(subjects[i].id + "_g");
    bench.protocol.probe.push_back(subjects[i].id + "_p");
  }
  for (const auto& p : bench.protocol.probe) {
    for (const auto& g : bench.protocol.gallery) {
      bench.protocol.verification.push_back({p, g, p.substr(0, p.size() - 2) == g.substr(0, g.size() - 2)});
    }
  }

  write_text_file((root / "manifest.json").string(), manifest_to_json(bench.manifest));
  write_text_file((root / "protocol.json").string(), protocol_to_json(bench.protocol));
  write_text_file((root / "ground_truth.json").string(), ground_truth_to_json(bench.truth));
  return bench;
}

}  // namespace poolface::ingest
