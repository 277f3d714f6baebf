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

#include "kerbwatch/detection_stream.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <tuple>

namespace kerbwatch::ingest
{
namespace
{
using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 7> kClassNames = {
  "person", "bicycle", "motorbike", "car", "truck", "bus", "other"};

double require_number(const nlohmann::json & j, const char * field)
{
  const auto it = j.find(field);
  if (it == j.end()) {
    throw ParseError(std::string("missing field '") + field + "'");
  }
  if (!it->is_number()) {
    throw ParseError(std::string("field '") + field + "' must be a number");
  }
  return it->get<double>();
}

std::int64_t require_integer(const nlohmann::json & j, const char * field)
{
  const auto it = j.find(field);
  if (it == j.end()) {
    throw ParseError(std::string("missing field '") + field + "'");
  }
  if (!it->is_number_integer()) {
    throw ParseError(std::string("field '") + field + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

bool batch_before(const FrameBatch & a, const FrameBatch & b)
{
  return std::tie(a.t, a.camera_id, a.frame_id) < std::tie(b.t, b.camera_id, b.frame_id);
}

}  // namespace

std::string_view to_string(ClassLabel c)
{
  return kClassNames.at(static_cast<std::size_t>(c));
}

ClassLabel parse_class_label(std::string_view s)
{
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == s) {
      return static_cast<ClassLabel>(i);
    }
  }
  throw InvariantViolation("unknown class label '" + std::string(s) + "'");
}

void DetectionEvent::validate() const
{
  if (!std::isfinite(t)) {
    throw InvariantViolation("detection timestamp must be finite");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw InvariantViolation("confidence must lie in [0, 1]");
  }
  if (frame_id < 0) {
    throw InvariantViolation("frame_id must be non-negative");
  }
  bbox.validate();
}

std::string detection_stream_header()
{
  ordered_json h;
  h["schema"] = kDetectionSchema;
  h["version"] = kDetectionSchemaVersion;
  return h.dump();
}

std::string serialize_detection(const DetectionEvent & e)
{
  ordered_json j;
  j["camera_id"] = e.camera_id;
  j["frame_id"] = e.frame_id;
  j["t"] = e.t;
  j["bbox"] = {
    {"x_min", e.bbox.x_min}, {"y_min", e.bbox.y_min}, {"x_max", e.bbox.x_max},
    {"y_max", e.bbox.y_max}};
  j["class"] = to_string(e.class_label);
  j["confidence"] = e.confidence;
  if (e.detector_track_id) {
    j["track_id"] = *e.detector_track_id;
  }
  return j.dump();
}

void write_detection_stream(std::ostream & out, std::span<const DetectionEvent> detections)
{
  out << detection_stream_header() << '\n';
  for (const auto & e : detections) {
    out << serialize_detection(e) << '\n';
  }
}

DetectionEvent parse_detection(std::string_view line)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error & ex) {
    throw ParseError(std::string("malformed JSON: ") + ex.what());
  }
  if (!j.is_object()) {
    throw ParseError("record must be a JSON object");
  }
  DetectionEvent e;
  const auto cam = j.find("camera_id");
  if (cam == j.end() || !cam->is_string()) {
    throw ParseError("field 'camera_id' must be a string");
  }
  e.camera_id = cam->get<std::string>();
  e.frame_id = require_integer(j, "frame_id");
  e.t = require_number(j, "t");
  const auto bbox = j.find("bbox");
  if (bbox == j.end() || !bbox->is_object()) {
    throw ParseError("field 'bbox' must be an object");
  }
  e.bbox.x_min = require_number(*bbox, "x_min");
  e.bbox.y_min = require_number(*bbox, "y_min");
  e.bbox.x_max = require_number(*bbox, "x_max");
  e.bbox.y_max = require_number(*bbox, "y_max");
  const auto cls = j.find("class");
  if (cls == j.end() || !cls->is_string()) {
    throw ParseError("field 'class' must be a string");
  }
  try {
    e.class_label = parse_class_label(cls->get<std::string>());
  } catch (const InvariantViolation & ex) {
    throw ParseError(ex.what());
  }
  e.confidence = require_number(j, "confidence");
  if (const auto tid = j.find("track_id"); tid != j.end() && !tid->is_null()) {
    if (!tid->is_number_integer()) {
      throw ParseError("field 'track_id' must be an integer");
    }
    e.detector_track_id = tid->get<std::int64_t>();
  }
  try {
    e.validate();
  } catch (const InvariantViolation & ex) {
    throw ParseError(ex.what());
  }
  return e;
}

DetectionStreamReader::DetectionStreamReader(std::istream & in, double reorder_window_s)
: in_(in), window_(reorder_window_s)
{
  if (!(window_ >= 0.0)) {
    throw InvariantViolation("reorder window must be non-negative");
  }
}

void DetectionStreamReader::reject(const std::string & why)
{
  ++rejected_;
  diagnostics_.push_back("line " + std::to_string(line_no_) + ": " + why);
}

void DetectionStreamReader::consume(const std::string & line)
{
  if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
    return;
  }
  if (!seen_record_) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("schema")) {
      seen_record_ = true;
      if (j["schema"] != kDetectionSchema || j.value("version", 0) != kDetectionSchemaVersion) {
        throw ParseError("unsupported detection stream header: " + line);
      }
      return;
    }
  }
  seen_record_ = true;

  DetectionEvent e;
  try {
    e = parse_detection(line);
  } catch (const ParseError & ex) {
    reject(ex.what());
    return;
  }
  if (high_water_ && e.t < *high_water_ - window_) {
    throw StreamOrderError(
      "line " + std::to_string(line_no_) + ": timestamp " + std::to_string(e.t) +
      " regresses more than " + std::to_string(window_) + " s");
  }
  Key key{e.camera_id, e.frame_id};
  auto it = pending_.find(key);
  if (it == pending_.end()) {
    FrameBatch b{e.camera_id, e.frame_id, e.t, {}};
    it = pending_.emplace(std::move(key), std::move(b)).first;
  } else if (it->second.t != e.t) {
    reject("timestamp differs from earlier records of frame " + std::to_string(e.frame_id));
    return;
  }
  high_water_ = high_water_ ? std::max(*high_water_, e.t) : e.t;
  it->second.detections.push_back(std::move(e));
}

void DetectionStreamReader::release(bool all)
{
  std::vector<FrameBatch> out;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (all || it->second.t < *high_water_ - window_) {
      out.push_back(std::move(it->second));
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  std::stable_sort(out.begin(), out.end(), batch_before);
  for (auto & b : out) {
    ready_.push_back(std::move(b));
  }
}

std::optional<FrameBatch> DetectionStreamReader::next()
{
  std::string line;
  while (ready_.empty()) {
    if (!std::getline(in_, line)) {
      if (pending_.empty()) {
        return std::nullopt;
      }
      release(true);
      break;
    }
    ++line_no_;
    consume(line);
    if (high_water_) {
      release(false);
    }
  }
  FrameBatch b = std::move(ready_.front());
  ready_.pop_front();
  return b;
}

StreamReadResult read_detection_stream(std::istream & in, double reorder_window_s)
{
  DetectionStreamReader reader(in, reorder_window_s);
  StreamReadResult result;
  while (auto b = reader.next()) {
    result.batches.push_back(std::move(*b));
  }
  result.rejected = reader.rejected();
  result.diagnostics = reader.diagnostics();
  return result;
}

FrameBatch filter_by_confidence(const FrameBatch & batch, double threshold)
{
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvariantViolation("confidence threshold must lie in [0, 1]");
  }
  FrameBatch out{batch.camera_id, batch.frame_id, batch.t, {}};
  std::copy_if(
    batch.detections.begin(), batch.detections.end(), std::back_inserter(out.detections),
    [threshold](const DetectionEvent & e) { return e.confidence >= threshold; });
  return out;
}

}  // namespace kerbwatch::ingest
