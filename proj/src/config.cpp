// Copyright 2026 The Kerbwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kerbwatch/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <vector>

namespace kerbwatch::ingest
{
namespace
{
using json = nlohmann::json;
using Kind = ConfigError::Kind;

const json & require(const json & obj, const std::string & key, const std::string & path)
{
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(Kind::missing_field, path, "required field is missing");
  }
  return *it;
}

double number_at(const json & obj, const std::string & key, const std::string & path)
{
  const json & v = require(obj, key, path);
  if (!v.is_number()) {
    throw ConfigError(Kind::invalid_value, path, "must be a number");
  }
  return v.get<double>();
}

double number_or(const json & obj, const std::string & key, const std::string & path, double dflt)
{
  return obj.contains(key) ? number_at(obj, key, path) : dflt;
}

const json & section(const json & root, const std::string & key)
{
  static const json empty = json::object();
  const auto it = root.find(key);
  if (it == root.end()) {
    return empty;
  }
  if (!it->is_object()) {
    throw ConfigError(Kind::invalid_value, key, "must be an object");
  }
  return *it;
}

std::string string_or(const json & obj, const std::string & key, const std::string & path)
{
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    return {};
  }
  if (!it->is_string()) {
    throw ConfigError(Kind::invalid_value, path, "must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::string field, const std::string & detail)
: Error("config field '" + field + "': " + detail), kind_(kind), field_(std::move(field))
{
}

void PipelineConfig::validate() const
{
  if (camera_id.empty()) {
    throw ConfigError(Kind::invalid_value, "camera_id", "must be non-empty");
  }
  auto guard = [](const char * field, auto && fn) {
    try {
      fn();
    } catch (const InvariantViolation & ex) {
      throw ConfigError(Kind::invariant, field, ex.what());
    }
  };
  if (distortion) {
    guard("distortion", [&] { distortion->validate(); });
  }
  guard("tracking", [&] { tracker.validate(); });
  guard("risk", [&] {
    friction.validate();
    risk.validate();
  });
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw ConfigError(Kind::invariant, "thresholds.confidence", "must lie in [0, 1]");
  }
  if (!(road_state_window_s > 0.0)) {
    throw ConfigError(Kind::invariant, "windows.road_state_s", "must be positive");
  }
  if (!(reorder_window_s >= 0.0)) {
    throw ConfigError(Kind::invariant, "windows.reorder_s", "must be non-negative");
  }
  if (frame_width > 0 && frame_height > 0) {
    for (const auto & c : geoframe.correspondences()) {
      if (c.pixel.u < 0.0 || c.pixel.v < 0.0 || c.pixel.u > frame_width ||
          c.pixel.v > frame_height)
      {
        throw ConfigError(
          Kind::invariant, "correspondences", "calibration pixel lies outside the frame");
      }
    }
  }
}

PipelineConfig parse_config(std::string_view json_text)
{
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error & ex) {
    throw ConfigError(Kind::invalid_value, "<root>", std::string("not valid JSON: ") + ex.what());
  }
  if (!root.is_object()) {
    throw ConfigError(Kind::invalid_value, "<root>", "must be a JSON object");
  }

  const json & corr = require(root, "correspondences", "correspondences");
  if (!corr.is_array()) {
    throw ConfigError(Kind::invalid_value, "correspondences", "must be an array");
  }
  if (corr.size() != 4) {
    throw ConfigError(
      Kind::invalid_value, "correspondences",
      "exactly 4 entries required, found " + std::to_string(corr.size()));
  }
  std::vector<geo::Correspondence> pairs;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const std::string path = "correspondences[" + std::to_string(i) + "]";
    const json & c = corr[i];
    if (!c.is_object()) {
      throw ConfigError(Kind::invalid_value, path, "must be an object");
    }
    pairs.push_back(
      {{number_at(c, "u", path + ".u"), number_at(c, "v", path + ".v")},
       {number_at(c, "lat", path + ".lat"), number_at(c, "lon", path + ".lon")}});
  }
  std::optional<geo::GeoFrame> gf;
  try {
    gf = geo::solve_geoframe(pairs);
  } catch (const geo::DegenerateConfiguration & ex) {
    throw ConfigError(Kind::invariant, "correspondences", ex.what());
  } catch (const geo::SingularSystem & ex) {
    throw ConfigError(Kind::invariant, "correspondences", ex.what());
  } catch (const InvariantViolation & ex) {
    throw ConfigError(Kind::invariant, "correspondences", ex.what());
  }

  PipelineConfig cfg(std::move(*gf));
  const json & cam = require(root, "camera_id", "camera_id");
  if (!cam.is_string()) {
    throw ConfigError(Kind::invalid_value, "camera_id", "must be a string");
  }
  cfg.camera_id = cam.get<std::string>();

  const json & frame = section(root, "frame");
  cfg.frame_width = static_cast<int>(number_or(frame, "width", "frame.width", 0));
  cfg.frame_height = static_cast<int>(number_or(frame, "height", "frame.height", 0));

  if (root.contains("distortion") && !root["distortion"].is_null()) {
    const json & d = section(root, "distortion");
    geo::DistortionModel m;
    m.fx = number_at(d, "fx", "distortion.fx");
    m.fy = number_at(d, "fy", "distortion.fy");
    m.cx = number_at(d, "cx", "distortion.cx");
    m.cy = number_at(d, "cy", "distortion.cy");
    m.k1 = number_or(d, "k1", "distortion.k1", 0.0);
    m.k2 = number_or(d, "k2", "distortion.k2", 0.0);
    m.k3 = number_or(d, "k3", "distortion.k3", 0.0);
    m.p1 = number_or(d, "p1", "distortion.p1", 0.0);
    m.p2 = number_or(d, "p2", "distortion.p2", 0.0);
    cfg.distortion = m;
  }

  const json & thr = section(root, "thresholds");
  cfg.confidence_threshold =
    number_or(thr, "confidence", "thresholds.confidence", cfg.confidence_threshold);
  cfg.tracker.iou_threshold =
    number_or(thr, "association_iou", "thresholds.association_iou", cfg.tracker.iou_threshold);
  cfg.risk.alert_threshold = number_or(thr, "alert", "thresholds.alert", cfg.risk.alert_threshold);

  const json & rk = section(root, "risk");
  cfg.friction.mu = number_or(rk, "mu", "risk.mu", cfg.friction.mu);
  cfg.friction.g = number_or(rk, "g", "risk.g", cfg.friction.g);
  cfg.risk.margin_m = number_or(rk, "margin_m", "risk.margin_m", cfg.risk.margin_m);
  cfg.risk.horizon_s = number_or(rk, "horizon_s", "risk.horizon_s", cfg.risk.horizon_s);

  const json & tr = section(root, "tracking");
  cfg.tracker.max_misses =
    static_cast<int>(number_or(tr, "max_misses", "tracking.max_misses", cfg.tracker.max_misses));

  const json & win = section(root, "windows");
  cfg.road_state_window_s =
    number_or(win, "road_state_s", "windows.road_state_s", cfg.road_state_window_s);
  cfg.reorder_window_s = number_or(win, "reorder_s", "windows.reorder_s", cfg.reorder_window_s);

  const json & sinks = section(root, "sinks");
  cfg.mqtt_url = string_or(sinks, "mqtt_url", "sinks.mqtt_url");
  cfg.csv_dir = string_or(sinks, "csv_dir", "sinks.csv_dir");

  const json & zones = section(root, "zone_map");
  cfg.zone_map_csv = string_or(zones, "history_csv", "zone_map.history_csv");

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(Kind::missing_field, "<file>", "cannot open " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const PipelineConfig & c)
{
  nlohmann::ordered_json j;
  j["camera_id"] = c.camera_id;
  if (c.frame_width > 0 || c.frame_height > 0) {
    j["frame"] = {{"width", c.frame_width}, {"height", c.frame_height}};
  }
  j["correspondences"] = nlohmann::ordered_json::array();
  for (const auto & k : c.geoframe.correspondences()) {
    j["correspondences"].push_back(
      {{"u", k.pixel.u}, {"v", k.pixel.v}, {"lat", k.geo.lat}, {"lon", k.geo.lon}});
  }
  if (c.distortion) {
    const auto & d = *c.distortion;
    j["distortion"] = {{"fx", d.fx}, {"fy", d.fy}, {"cx", d.cx}, {"cy", d.cy}, {"k1", d.k1},
                       {"k2", d.k2}, {"k3", d.k3}, {"p1", d.p1}, {"p2", d.p2}};
  }
  j["thresholds"] = {
    {"confidence", c.confidence_threshold},
    {"association_iou", c.tracker.iou_threshold},
    {"alert", c.risk.alert_threshold}};
  j["risk"] = {
    {"mu", c.friction.mu}, {"g", c.friction.g}, {"margin_m", c.risk.margin_m},
    {"horizon_s", c.risk.horizon_s}};
  j["tracking"] = {{"max_misses", c.tracker.max_misses}};
  j["windows"] = {{"road_state_s", c.road_state_window_s}, {"reorder_s", c.reorder_window_s}};
  j["sinks"] = {{"mqtt_url", c.mqtt_url}, {"csv_dir", c.csv_dir}};
  j["zone_map"] = {{"history_csv", c.zone_map_csv}};
  return j.dump(2);
}

}  // namespace kerbwatch::ingest
