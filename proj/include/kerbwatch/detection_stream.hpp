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

#ifndef KERBWATCH__DETECTION_STREAM_HPP_
#define KERBWATCH__DETECTION_STREAM_HPP_

#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kerbwatch/error.hpp"
#include "kerbwatch/geo.hpp"

namespace kerbwatch::ingest
{

enum class ClassLabel { person, bicycle, motorbike, car, truck, bus, other };

std::string_view to_string(ClassLabel c);
/// Throws InvariantViolation for an unknown label.
ClassLabel parse_class_label(std::string_view s);

struct DetectionEvent
{
  std::string camera_id;
  std::int64_t frame_id{0};
  double t{0.0};
  geo::BoundingBox bbox;
  ClassLabel class_label{ClassLabel::other};
  double confidence{0.0};
  std::optional<std::int64_t> detector_track_id;

  void validate() const;
  bool operator==(const DetectionEvent &) const = default;
};

struct FrameBatch
{
  std::string camera_id;
  std::int64_t frame_id{0};
  double t{0.0};
  std::vector<DetectionEvent> detections;
};

/// Schema name and version announced by the optional header line of a detection stream.
inline constexpr std::string_view kDetectionSchema = "kerbwatch.detections";
inline constexpr int kDetectionSchemaVersion = 1;

/// The header line (without trailing newline).
std::string detection_stream_header();

/// One detection as a single NDJSON line (without trailing newline). Field order is fixed.
std::string serialize_detection(const DetectionEvent & e);

class ParseError : public Error
{
public:
  using Error::Error;
};

/// Raised when a record's timestamp falls further behind the stream's high-water mark than the
/// reorder window allows.
class StreamOrderError : public Error
{
public:
  using Error::Error;
};

/// Header line followed by one line per detection, each newline-terminated.
void write_detection_stream(std::ostream & out, std::span<const DetectionEvent> detections);

/// Strict parse of one record. Throws ParseError naming the offending field.
DetectionEvent parse_detection(std::string_view line);

/// Incremental reader: groups records into per-frame batches and releases them in
/// non-decreasing (t, camera_id, frame_id) order once they fall out of the reorder window.
/// Malformed records are counted and skipped.
class DetectionStreamReader
{
public:
  explicit DetectionStreamReader(std::istream & in, double reorder_window_s = 1.0);

  /// Next complete batch, or std::nullopt when the source is exhausted.
  std::optional<FrameBatch> next();

  std::size_t rejected() const { return rejected_; }
  const std::vector<std::string> & diagnostics() const { return diagnostics_; }

private:
  using Key = std::pair<std::string, std::int64_t>;

  void consume(const std::string & line);
  void reject(const std::string & why);
  void release(bool all);

  std::istream & in_;
  double window_;
  std::size_t line_no_{0};
  bool seen_record_{false};
  std::optional<double> high_water_;
  std::map<Key, FrameBatch> pending_;
  std::deque<FrameBatch> ready_;
  std::size_t rejected_{0};
  std::vector<std::string> diagnostics_;
};

struct StreamReadResult
{
  std::vector<FrameBatch> batches;
  std::size_t rejected{0};
  std::vector<std::string> diagnostics;
};

/// Reads a whole stream. Throws StreamOrderError on a timestamp regression beyond the window.
StreamReadResult read_detection_stream(std::istream & in, double reorder_window_s = 1.0);

/// Keeps detections with confidence >= threshold.
FrameBatch filter_by_confidence(const FrameBatch & batch, double threshold);

}  // namespace kerbwatch::ingest

#endif  // KERBWATCH__DETECTION_STREAM_HPP_
