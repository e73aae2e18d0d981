#include "poolface/manifest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "poolface/matching.hpp"

namespace poolface::ingest {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string context(text.substr(end - (col - 1), std::min<std::size_t>(80, text.size() - (end - (col - 1)))));
    context = context.substr(0, context.find('\n'));
    throw Error(ErrorCode::ParseError, what + ": line " + std::to_string(line) + ", column " +
                                           std::to_string(col) + ": " + e.what() + " near '" +
                                           context + "'");
  }
}

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::ValidationError, message);
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    invalid(where + ": missing string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) invalid(where + ": '" + key + "' must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) invalid(where + ": '" + key + "' must be finite");
  return v;
}

Point2 parse_point(const json& p, const std::string& where, std::size_t index) {
  if (p.is_null()) return {kMissing, kMissing};
  if (!p.is_array() || p.size() != 2) {
    invalid(where + ": landmark " + std::to_string(index) + " must be [x, y]");
  }
  if (p[0].is_null() && p[1].is_null()) return {kMissing, kMissing};
  if (!p[0].is_number() || !p[1].is_number()) {
    invalid(where + ": landmark " + std::to_string(index) + " must hold two numbers");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

Landmarks parse_landmark_file(const std::string& path, const std::string& where) {
  std::istringstream in(read_text_file(path));
  std::vector<Point2> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string xs, ys, extra;
    if (!(fields >> xs >> ys) || (fields >> extra)) {
      invalid(where + ": landmark file " + path + " needs 'x y' per line");
    }
    try {
      points.push_back({std::stod(xs), std::stod(ys)});
    } catch (const std::exception&) {
      invalid(where + ": landmark file " + path + " has a non-numeric value");
    }
  }
  if (points.size() != kLandmarkCount) {
    invalid(where + ": expected 68 landmarks, got " + std::to_string(points.size()));
  }
  Landmarks lm;
  std::copy(points.begin(), points.end(), lm.begin());
  return lm;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

const TemplateEntry* Manifest::find(std::string_view template_id) const {
  for (const auto& t : templates) {
    if (t.template_id == template_id) return &t;
  }
  return nullptr;
}

std::string Manifest::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

std::size_t Manifest::media_count() const {
  std::size_t n = 0;
  for (const auto& t : templates) n += t.media.size();
  return n;
}

Manifest load_manifest(const std::string& path, const ManifestOptions& options) {
  const std::string text = read_text_file(path);
  return parse_manifest(text, fs::path(path).parent_path().string(), options);
}

Manifest parse_manifest(std::string_view text, const std::string& base_dir,
                        const ManifestOptions& options) {
  const json root = parse_json(text, "manifest");
  if (!root.is_object() || !root.contains("templates") || !root["templates"].is_array()) {
    invalid("manifest: top level must be an object with a 'templates' array");
  }
  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> template_ids;
  for (const auto& jt : root["templates"]) {
    TemplateEntry t;
    t.template_id = require_string(jt, "template_id", "manifest template");
    const std::string where_t = "template " + t.template_id;
    t.subject_id = require_string(jt, "subject_id", where_t);
    if (!template_ids.insert(t.template_id).second) invalid(where_t + ": duplicate template_id");
    if (!jt.contains("media") || !jt["media"].is_array() || jt["media"].empty()) {
      invalid(where_t + ": needs a non-empty 'media' array");
    }
    std::set<std::string> media_ids;
    for (const auto& jm : jt["media"]) {
      MediaEntry e;
      e.path = require_string(jm, "path", where_t + " media");
      e.media_id = jm.contains("media_id") ? require_string(jm, "media_id", where_t) : e.path;
      const std::string where = "media " + e.media_id + " (" + where_t + ")";
      if (!media_ids.insert(e.media_id).second) invalid(where + ": duplicate media_id");
      if (jm.contains("media_kind")) {
        e.media_kind = media_kind_from_string(require_string(jm, "media_kind", where));
      }
      if (!jm.contains("landmarks")) invalid(where + ": missing landmarks");
      const json& jl = jm["landmarks"];
      if (jl.is_string()) {
        e.landmarks = parse_landmark_file(m.resolve(jl.get<std::string>()), where);
      } else if (jl.is_array()) {
        if (jl.size() != kLandmarkCount) {
          invalid(where + ": expected 68 landmarks, got " + std::to_string(jl.size()));
        }
        for (std::size_t i = 0; i < jl.size(); ++i) e.landmarks[i] = parse_point(jl[i], where, i);
      } else {
        invalid(where + ": landmarks must be an array or a file path");
      }
      e.yaw_override_deg = optional_number(jm, "yaw_override_deg", where);
      e.quality_override = optional_number(jm, "quality_override", where);
      if (options.check_files && !fs::exists(m.resolve(e.path))) {
        invalid(where + ": file not found: " + m.resolve(e.path));
      }
      t.media.push_back(std::move(e));
    }
    m.templates.push_back(std::move(t));
  }
  return m;
}

std::string manifest_to_json(const Manifest& manifest) {
  ordered_json templates = ordered_json::array();
  for (const auto& t : manifest.templates) {
    ordered_json jm = ordered_json::array();
    for (const auto& e : t.media) {
      ordered_json je;
      je["media_id"] = e.media_id;
      je["path"] = e.path;
      je["media_kind"] = std::string(to_string(e.media_kind));
      ordered_json lm = ordered_json::array();
      for (const auto& p : e.landmarks) {
        lm.push_back(p.valid() ? ordered_json::array({p.x, p.y}) : ordered_json(nullptr));
      }
      je["landmarks"] = std::move(lm);
      if (e.yaw_override_deg) je["yaw_override_deg"] = *e.yaw_override_deg;
      if (e.quality_override) je["quality_override"] = *e.quality_override;
      jm.push_back(std::move(je));
    }
    ordered_json jt;
    jt["template_id"] = t.template_id;
    jt["subject_id"] = t.subject_id;
    jt["media"] = std::move(jm);
    templates.push_back(std::move(jt));
  }
  ordered_json root;
  root["templates"] = std::move(templates);
  return root.dump(1) + "\n";
}

// ---------------------------------------------------------------------------

Protocol load_protocol(const std::string& path) { return parse_protocol(read_text_file(path)); }

Protocol parse_protocol(std::string_view text) {
  const json root = parse_json(text, "protocol");
  if (!root.is_object()) invalid("protocol: top level must be an object");
  Protocol p;
  if (root.contains("verification")) {
    if (!root["verification"].is_array()) invalid("protocol: 'verification' must be an array");
    for (const auto& jp : root["verification"]) {
      VerificationPair pair;
      pair.a = require_string(jp, "a", "verification pair");
      pair.b = require_string(jp, "b", "verification pair");
      if (!jp.contains("genuine") || !jp["genuine"].is_boolean()) {
        invalid("verification pair " + pair.a + "/" + pair.b + ": missing boolean 'genuine'");
      }
      pair.genuine = jp["genuine"].get<bool>();
      p.verification.push_back(std::move(pair));
    }
  }
  if (root.contains("identification")) {
    const json& ji = root["identification"];
    auto ids = [&](const char* key) {
      std::vector<std::string> out;
      if (!ji.contains(key) || !ji[key].is_array()) {
        invalid(std::string("protocol identification: missing '") + key + "' array");
      }
      for (const auto& v : ji[key]) {
        if (!v.is_string()) invalid("protocol identification: ids must be strings");
        out.push_back(v.get<std::string>());
      }
      return out;
    };
    p.gallery = ids("gallery");
    p.probe = ids("probe");
  }
  return p;
}

std::string protocol_to_json(const Protocol& protocol) {
  ordered_json pairs = ordered_json::array();
  for (const auto& v : protocol.verification) {
    pairs.push_back({{"a", v.a}, {"b", v.b}, {"genuine", v.genuine}});
  }
  ordered_json root;
  root["verification"] = std::move(pairs);
  root["identification"] = {{"gallery", protocol.gallery}, {"probe", protocol.probe}};
  return root.dump(1) + "\n";
}

void validate_protocol(const Protocol& protocol, const Manifest& manifest) {
  auto subject_of = [&](const std::string& id) -> const std::string& {
    const TemplateEntry* t = manifest.find(id);
    if (!t) invalid("protocol references unknown template " + id);
    return t->subject_id;
  };
  for (const auto& v : protocol.verification) {
    const bool same = subject_of(v.a) == subject_of(v.b);
    if (same != v.genuine) {
      invalid("verification pair " + v.a + "/" + v.b + ": genuine flag disagrees with subject ids");
    }
  }
  if (protocol.gallery.empty() != protocol.probe.empty()) {
    invalid("protocol identification needs both gallery and probe lists");
  }
  std::set<std::string> enrolled;
  for (const auto& g : protocol.gallery) {
    if (!enrolled.insert(subject_of(g)).second) {
      invalid("identification gallery enrolls subject " + subject_of(g) + " more than once");
    }
  }
  for (const auto& p : protocol.probe) {
    if (!enrolled.count(subject_of(p))) {
      throw Error(ErrorCode::ProbeSubjectNotEnrolled,
                  "probe " + p + ": subject " + subject_of(p) + " is not in the gallery");
    }
  }
}

// ---------------------------------------------------------------------------

PipelineConfig default_config() {
  PipelineConfig c;
  c.betas = matching::default_beta_grid();
  return c;
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

PipelineConfig parse_config(std::string_view text) {
  const json root = parse_json(text, "config");
  if (!root.is_object()) invalid("config: top level must be an object");
  PipelineConfig c = default_config();
  for (const auto& [key, value] : root.items()) {
    try {
      if (key == "mode") {
        c.mode = pool_mode_from_string(value.get<std::string>());
      } else if (key == "pixel_statistic") {
        const auto s = value.get<std::string>();
        if (s == "mean") {
          c.pixel_statistic = pooling::PixelStatistic::mean;
        } else if (s == "median") {
          c.pixel_statistic = pooling::PixelStatistic::median;
        } else {
          invalid("config: pixel_statistic must be 'mean' or 'median'");
        }
      } else if (key == "extractor") {
        c.extractor = value.get<std::string>();
      } else if (key == "betas") {
        if (value.is_array()) {
          c.betas = value.get<std::vector<double>>();
          if (c.betas.empty()) invalid("config: betas must not be empty");
          for (double b : c.betas) {
            if (!(b >= 0.0)) invalid("config: betas must be non-negative");
          }
        } else {
          c.betas = matching::beta_grid(value.at("start").get<double>(), value.at("stop").get<double>(),
                                        value.at("step").get<double>());
        }
      } else if (key == "crop_size") {
        c.crop_size = value.get<int>();
        if (c.crop_size < 32) invalid("config: crop_size must be at least 32");
      } else if (key == "pose_bin_edges") {
        const auto e = value.get<std::vector<double>>();
        if (e.size() != 3 || !(e[0] < e[1] && e[1] < e[2])) {
          invalid("config: pose_bin_edges needs 3 increasing values");
        }
        std::copy(e.begin(), e.end(), c.yaw_bins.edges.begin());
      } else if (key == "quality_thresholds") {
        const auto e = value.get<std::vector<double>>();
        if (e.size() != 4 || !(e[0] < e[1] && e[1] < e[2] && e[2] < e[3])) {
          invalid("config: quality_thresholds needs 4 increasing values");
        }
        std::copy(e.begin(), e.end(), c.quality_thresholds.edges.begin());
      } else if (key == "focal_px") {
        if (!value.is_null()) {
          c.focal_px = value.get<double>();
          if (!(*c.focal_px > 0.0)) invalid("config: focal_px must be positive");
        }
      } else if (key == "model3d") {
        if (!value.is_null()) c.model3d_path = value.get<std::string>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "jobs") {
        c.jobs = std::max(1, value.get<int>());
      } else {
        invalid("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      invalid("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

std::string config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["mode"] = std::string(to_string(c.mode));
  j["pixel_statistic"] = c.pixel_statistic == pooling::PixelStatistic::median ? "median" : "mean";
  j["extractor"] = c.extractor;
  j["betas"] = c.betas;
  j["crop_size"] = c.crop_size;
  j["pose_bin_edges"] = c.yaw_bins.edges;
  j["quality_thresholds"] = c.quality_thresholds.edges;
  j["focal_px"] = c.focal_px ? ordered_json(*c.focal_px) : ordered_json(nullptr);
  j["model3d"] = c.model3d_path.empty() ? ordered_json(nullptr) : ordered_json(c.model3d_path);
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  return j.dump(2) + "\n";
}

}  // namespace poolface::ingest
