#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>

#include "nidfusion/dataset_io.hpp"
#include "nidfusion/error.hpp"
#include "nidfusion/pipeline.hpp"

namespace nidfusion {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorKind::InvalidInput, "invalid value '" + value + "' for " + key);
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad_value(key, value);
  }
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  bad_value(key, value);
}

std::set<std::int64_t> to_index_list(const std::string& key, const std::string& value) {
  std::set<std::int64_t> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t end = value.find(',', pos);
    if (end == std::string::npos) end = value.size();
    const std::string item = trim(std::string_view(value).substr(pos, end - pos));
    if (!item.empty()) out.insert(to_int(key, item));
    if (end == value.size()) break;
    pos = end + 1;
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::unordered_map<std::string, Setter>& setters() {
  static const std::unordered_map<std::string, Setter> table = {
      {"dataset", [](auto& c, auto&, auto& v) { c.dataset = v; }},
      {"trajectory", [](auto& c, auto&, auto& v) { c.trajectory = v; }},
      {"out", [](auto& c, auto&, auto& v) { c.out = v; }},
      {"association", [](auto& c, auto&, auto& v) { c.association = v; }},
      {"fx", [](auto& c, auto& k, auto& v) { c.intrinsics.fx = to_real(k, v); }},
      {"fy", [](auto& c, auto& k, auto& v) { c.intrinsics.fy = to_real(k, v); }},
      {"cx", [](auto& c, auto& k, auto& v) { c.intrinsics.cx = to_real(k, v); }},
      {"cy", [](auto& c, auto& k, auto& v) { c.intrinsics.cy = to_real(k, v); }},
      {"width", [](auto& c, auto& k, auto& v) { c.intrinsics.width = static_cast<int>(to_int(k, v)); }},
      {"height", [](auto& c, auto& k, auto& v) { c.intrinsics.height = static_cast<int>(to_int(k, v)); }},
      {"depth-scale", [](auto& c, auto& k, auto& v) { c.depth_scale = to_real(k, v); }},
      {"max-dt", [](auto& c, auto& k, auto& v) { c.max_dt = to_real(k, v); }},
      {"tau", [](auto& c, auto& k, auto& v) { c.tau = to_real(k, v); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.nid.alpha = to_real(k, v); }},
      {"bins", [](auto& c, auto& k, auto& v) { c.nid.bins = static_cast<int>(to_int(k, v)); }},
      {"histogram-mask", [](auto& c, auto& k, auto& v) {
         if (v == "live") {
           c.nid.mask = HistogramMask::LiveValid;
         } else if (v == "covisible") {
           c.nid.mask = HistogramMask::CoVisible;
         } else {
           bad_value(k, v);
         }
       }},
      {"depth-min", [](auto& c, auto& k, auto& v) { c.nid.depth_min = to_real(k, v); }},
      {"depth-max", [](auto& c, auto& k, auto& v) { c.nid.depth_max = to_real(k, v); }},
      {"min-support", [](auto& c, auto& k, auto& v) {
         c.nid.min_support = to_real(k, v);
         c.loop.min_support = c.nid.min_support;
       }},
      {"window", [](auto& c, auto& k, auto& v) { c.window = to_int(k, v); }},
      {"stride", [](auto& c, auto& k, auto& v) { c.fusion.stride = static_cast<int>(to_int(k, v)); }},
      {"depth-tolerance", [](auto& c, auto& k, auto& v) {
         const double tol = to_real(k, v);
         c.fusion.depth_tolerance = tol;
         c.render.depth_tolerance = tol;
         c.loop.depth_tolerance = tol;
       }},
      {"normal-tolerance", [](auto& c, auto& k, auto& v) { c.fusion.normal_tolerance_deg = to_real(k, v); }},
      {"normal-step", [](auto& c, auto& k, auto& v) { c.fusion.normal_step = static_cast<int>(to_int(k, v)); }},
      {"max-splat-radius", [](auto& c, auto& k, auto& v) { c.render.max_splat_radius_px = to_real(k, v); }},
      {"loop-agreement", [](auto& c, auto& k, auto& v) { c.loop.min_agreement = to_real(k, v); }},
      {"loop-detection", [](auto& c, auto& k, auto& v) { c.loop_detection = to_bool(k, v); }},
      {"disable-gating", [](auto& c, auto& k, auto& v) { c.disable_gating = to_bool(k, v); }},
      {"force-loop-frames", [](auto& c, auto& k, auto& v) { c.force_loop_frames = to_index_list(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = static_cast<unsigned>(to_int(k, v)); }},
      {"timings", [](auto& c, auto& k, auto& v) { c.csv_timings = to_bool(k, v); }},
      {"max-frames", [](auto& c, auto& k, auto& v) { c.max_frames = static_cast<std::size_t>(to_int(k, v)); }},
  };
  return table;
}

}  // namespace

Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (!content.empty()) {
      const auto eq = content.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected key = value");
      }
      std::string key = trim(std::string_view(content).substr(0, eq));
      if (key.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty key");
      out[std::move(key)] = trim(std::string_view(content).substr(eq + 1));
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorKind::InvalidInput, "unknown setting '" + key + "'");
  it->second(config, key, value);
}

PipelineConfig resolve_config(const Settings& settings) {
  PipelineConfig config;
  if (const auto it = settings.find("dataset"); it != settings.end()) {
    const auto camera = std::filesystem::path(it->second) / "camera.txt";
    if (std::filesystem::exists(camera)) {
      for (const auto& [k, v] : parse_settings(read_text_file(camera))) apply_setting(config, k, v);
    }
  }
  for (const auto& [k, v] : settings) apply_setting(config, k, v);
  return config;
}

}  // namespace nidfusion
