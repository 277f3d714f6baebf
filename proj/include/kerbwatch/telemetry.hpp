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

#ifndef KERBWATCH__TELEMETRY_HPP_
#define KERBWATCH__TELEMETRY_HPP_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/geo.hpp"
#include "kerbwatch/metrics.hpp"
#include "kerbwatch/risk.hpp"

namespace kerbwatch::telemetry
{

using ingest::ClassLabel;
using track::TrackId;

/// Per-object state published every frame.
struct ObjectMetadata
{
  std::string camera_id;
  TrackId track_id{0};
  ClassLabel class_label{ClassLabel::other};
  geo::GeoPoint geo;
  double speed{0.0};
  // degrees clockwise from north, [0, 360)
  double heading{0.0};
  double t{0.0};
};

enum class TopicClass { objects, pairs, alerts };

std::string_view to_string(TopicClass c);

/// its/{camera_id}/{objects|pairs|alerts}
std::string topic_for(std::string_view camera_id, TopicClass c);

/// QoS 0 for objects and pairs, QoS 1 for alerts.
int qos_for(TopicClass c);

struct Message
{
  std::string topic;
  std::string payload;
  int qos{0};

  bool operator==(const Message &) const = default;
};

/// ISO-8601 UTC with millisecond precision, e.g. 2023-11-14T22:13:20.100Z.
std::string iso8601_utc(double epoch_s);

struct FrameHeader
{
  std::string camera_id;
  std::int64_t frame_id{0};
  double t{0.0};
  // live mode stamps "time" from the wall clock; replay mode uses t
  std::optional<double> wall_time;
};

/// Payload builders. Items carrying non-finite numbers cannot be serialized and are skipped;
/// the number skipped is added to *skipped when given.
std::string objects_payload(
  const FrameHeader & h, std::span<const ObjectMetadata> objects, std::size_t * skipped = nullptr);
std::string pairs_payload(
  const FrameHeader & h, std::span<const risk::PairAssessment> pairs,
  std::size_t * skipped = nullptr);
std::string alerts_payload(
  const FrameHeader & h, std::span<const risk::PairAssessment> alerts,
  std::size_t * skipped = nullptr);

/// Checks a payload against the documented schema of its topic class. Returns the list of
/// violations; empty means valid.
std::vector<std::string> validate_payload(TopicClass c, std::string_view payload);

/// Delivery channel behind a Publisher. send() returns false when the message was not
/// accepted (for example, broker unreachable).
class Transport
{
public:
  virtual ~Transport() = default;
  virtual bool send(const Message & m) = 0;
};

/// Loopback broker for tests and replay: delivers to subscribers synchronously and can be
/// switched offline to simulate a disconnect.
class InMemoryBroker : public Transport
{
public:
  using Callback = std::function<void(const Message &)>;

  bool send(const Message & m) override;

  void set_connected(bool connected);
  bool connected() const;

  /// Exact topic match, or "#" for everything.
  void subscribe(std::string topic_filter, Callback cb);

  std::vector<Message> delivered() const;

private:
  mutable std::mutex mutex_;
  bool connected_{true};
  std::vector<std::pair<std::string, Callback>> subscribers_;
  std::vector<Message> delivered_;
};

/// Appends every message as an NDJSON line {"topic", "qos", "payload"} to a file.
class FileTransport : public Transport
{
public:
  explicit FileTransport(const std::filesystem::path & path);
  bool send(const Message & m) override;

private:
  std::ofstream out_;
};

struct DeliveryReport
{
  std::size_t published{0};
  // messages of this call that could not be delivered now
  std::size_t failed{0};
  // backlog size after the call
  std::size_t buffered{0};
  // messages discarded from the backlog during this call
  std::size_t dropped{0};
  // items left out of payloads because they could not be serialized
  std::size_t skipped{0};

  DeliveryReport & operator+=(const DeliveryReport & o);
};

/// FIFO publisher with a bounded retry buffer. Undelivered messages wait in the backlog and
/// go out, in order, ahead of newer messages once the transport accepts again. When the
/// backlog is full the oldest message is dropped. Safe for one producer and one flushing
/// consumer.
class Publisher
{
public:
  static constexpr std::size_t kDefaultCapacity = 10000;

  explicit Publisher(Transport & transport, std::size_t capacity = kDefaultCapacity);

  DeliveryReport publish(std::vector<Message> messages);
  DeliveryReport flush();

  std::size_t backlog() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t total_dropped() const;

private:
  std::size_t drain_locked();

  Transport & transport_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<Message> backlog_;
  std::size_t total_dropped_{0};
};

/// Builds the three per-frame messages and hands them to the publisher.
DeliveryReport publish_metadata(
  Publisher & publisher, const FrameHeader & h, std::span<const ObjectMetadata> objects,
  std::span<const risk::PairAssessment> assessments, std::span<const risk::PairAssessment> alerts);

/// Offline mirror of the objects and pairs topics plus the road-state series.
class CsvExporter
{
public:
  /// Creates objects.csv, pairs.csv and road_state.csv in dir (created if missing).
  explicit CsvExporter(const std::filesystem::path & dir);

  void write_objects(const FrameHeader & h, std::span<const ObjectMetadata> objects);
  void write_pairs(const FrameHeader & h, std::span<const risk::PairAssessment> pairs);
  void write_road_state(const metrics::RoadState & state);
  void flush();

private:
  std::ofstream objects_;
  std::ofstream pairs_;
  std::ofstream road_state_;
};

}  // namespace kerbwatch::telemetry

#endif  // KERBWATCH__TELEMETRY_HPP_
