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

#include "kerbwatch/telemetry.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <regex>

namespace kerbwatch::telemetry
{
namespace
{
using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr int kPayloadVersion = 1;

std::string schema_name(TopicClass c)
{
  return "kerbwatch." + std::string(to_string(c));
}

ordered_json header_json(TopicClass c, const FrameHeader & h)
{
  ordered_json j;
  j["schema"] = schema_name(c);
  j["version"] = kPayloadVersion;
  j["camera_id"] = h.camera_id;
  j["frame_id"] = h.frame_id;
  j["t"] = h.t;
  j["time"] = iso8601_utc(h.wall_time.value_or(h.t));
  return j;
}

bool all_finite(std::initializer_list<double> xs)
{
  for (double x : xs) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

std::string fixed(double x, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

// Schema checking helpers: each appends to errs and returns whether the field is usable.
class Checker
{
public:
  explicit Checker(std::vector<std::string> & errs) : errs_(errs) {}

  const json * field(const json & obj, const std::string & name, const std::string & where)
  {
    const auto it = obj.find(name);
    if (it == obj.end()) {
      errs_.push_back(where + ": missing '" + name + "'");
      return nullptr;
    }
    return &*it;
  }

  void number(
    const json & obj, const std::string & name, const std::string & where, double lo = -INFINITY,
    double hi = INFINITY, bool hi_open = false)
  {
    const json * v = field(obj, name, where);
    if (!v) {
      return;
    }
    if (!v->is_number()) {
      errs_.push_back(where + ": '" + name + "' must be a number");
      return;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x) || x < lo || (hi_open ? x >= hi : x > hi)) {
      errs_.push_back(where + ": '" + name + "' out of range");
    }
  }

  void integer(const json & obj, const std::string & name, const std::string & where)
  {
    const json * v = field(obj, name, where);
    if (v && !v->is_number_integer()) {
      errs_.push_back(where + ": '" + name + "' must be an integer");
    }
  }

  void boolean(const json & obj, const std::string & name, const std::string & where)
  {
    const json * v = field(obj, name, where);
    if (v && !v->is_boolean()) {
      errs_.push_back(where + ": '" + name + "' must be a boolean");
    }
  }

  void class_label(const json & obj, const std::string & name, const std::string & where)
  {
    const json * v = field(obj, name, where);
    if (!v) {
      return;
    }
    if (!v->is_string()) {
      errs_.push_back(where + ": '" + name + "' must be a string");
      return;
    }
    try {
      ingest::parse_class_label(v->get<std::string>());
    } catch (const InvariantViolation &) {
      errs_.push_back(where + ": '" + name + "' is not a known class");
    }
  }

  void one_of(
    const json & obj, const std::string & name, const std::string & where,
    std::initializer_list<const char *> allowed)
  {
    const json * v = field(obj, name, where);
    if (!v) {
      return;
    }
    if (v->is_string()) {
      for (const char * a : allowed) {
        if (v->get<std::string>() == a) {
          return;
        }
      }
    }
    errs_.push_back(where + ": '" + name + "' has an unexpected value");
  }

private:
  std::vector<std::string> & errs_;
};

}  // namespace

std::string_view to_string(TopicClass c)
{
  switch (c) {
    case TopicClass::objects:
      return "objects";
    case TopicClass::pairs:
      return "pairs";
    case TopicClass::alerts:
      break;
  }
  return "alerts";
}

std::string topic_for(std::string_view camera_id, TopicClass c)
{
  return "its/" + std::string(camera_id) + "/" + std::string(to_string(c));
}

int qos_for(TopicClass c)
{
  return c == TopicClass::alerts ? 1 : 0;
}

std::string iso8601_utc(double epoch_s)
{
  if (!std::isfinite(epoch_s)) {
    throw InvariantViolation("timestamp must be finite");
  }
  auto whole = static_cast<std::int64_t>(std::floor(epoch_s));
  auto millis = static_cast<int>(std::llround((epoch_s - static_cast<double>(whole)) * 1000.0));
  if (millis >= 1000) {
    ++whole;
    millis -= 1000;
  }
  const std::time_t secs = static_cast<std::time_t>(whole);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(
    buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
    tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

std::string objects_payload(
  const FrameHeader & h, std::span<const ObjectMetadata> objects, std::size_t * skipped)
{
  ordered_json j = header_json(TopicClass::objects, h);
  j["objects"] = ordered_json::array();
  for (const auto & o : objects) {
    if (!all_finite({o.geo.lat, o.geo.lon, o.speed, o.heading})) {
      if (skipped) {
        ++*skipped;
      }
      continue;
    }
    ordered_json item;
    item["track_id"] = o.track_id;
    item["class"] = ingest::to_string(o.class_label);
    item["lat"] = o.geo.lat;
    item["lon"] = o.geo.lon;
    item["speed"] = o.speed;
    item["heading"] = o.heading;
    item["label"] = risk::speed_label(o.speed);
    j["objects"].push_back(std::move(item));
  }
  return j.dump();
}

std::string pairs_payload(
  const FrameHeader & h, std::span<const risk::PairAssessment> pairs, std::size_t * skipped)
{
  ordered_json j = header_json(TopicClass::pairs, h);
  j["pairs"] = ordered_json::array();
  for (const auto & p : pairs) {
    if (!all_finite({p.distance_now, p.t_star, p.d_min, p.braking_distance, p.probability})) {
      if (skipped) {
        ++*skipped;
      }
      continue;
    }
    ordered_json item;
    item["track_a"] = p.track_a;
    item["track_b"] = p.track_b;
    item["class_a"] = ingest::to_string(p.class_a);
    item["class_b"] = ingest::to_string(p.class_b);
    item["cross_class"] = p.cross_class;
    item["distance_now"] = p.distance_now;
    item["t_star"] = p.t_star;
    item["d_min"] = p.d_min;
    item["braking_distance"] = p.braking_distance;
    item["probability"] = p.probability;
    item["alert"] = p.alert;
    item["channel"] = p.cross_class ? "red" : "blue";
    item["intensity"] = p.cross_class ? p.probability : 0.0;
    j["pairs"].push_back(std::move(item));
  }
  return j.dump();
}

std::string alerts_payload(
  const FrameHeader & h, std::span<const risk::PairAssessment> alerts, std::size_t * skipped)
{
  ordered_json j = header_json(TopicClass::alerts, h);
  j["alerts"] = ordered_json::array();
  for (const auto & a : alerts) {
    if (!all_finite({a.probability, a.distance_now, a.braking_distance, a.t_star})) {
      if (skipped) {
        ++*skipped;
      }
      continue;
    }
    ordered_json item;
    item["track_a"] = a.track_a;
    item["track_b"] = a.track_b;
    item["class_a"] = ingest::to_string(a.class_a);
    item["class_b"] = ingest::to_string(a.class_b);
    item["probability"] = a.probability;
    item["distance_now"] = a.distance_now;
    item["braking_distance"] = a.braking_distance;
    item["t_star"] = a.t_star;
    j["alerts"].push_back(std::move(item));
  }
  return j.dump();
}

std::vector<std::string> validate_payload(TopicClass c, std::string_view payload)
{
  std::vector<std::string> errs;
  const json j = json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    errs.emplace_back("payload is not a JSON object");
    return errs;
  }
  Checker check(errs);
  const std::string top = "payload";
  if (const json * s = check.field(j, "schema", top); s && *s != schema_name(c)) {
    errs.push_back(top + ": schema must be '" + schema_name(c) + "'");
  }
  if (const json * v = check.field(j, "version", top); v && *v != kPayloadVersion) {
    errs.push_back(top + ": unsupported version");
  }
  if (const json * cam = check.field(j, "camera_id", top);
      cam && (!cam->is_string() || cam->get<std::string>().empty()))
  {
    errs.push_back(top + ": camera_id must be a non-empty string");
  }
  check.integer(j, "frame_id", top);
  check.number(j, "t", top);
  static const std::regex iso(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$)");
  if (const json * tm = check.field(j, "time", top);
      tm && (!tm->is_string() || !std::regex_match(tm->get<std::string>(), iso)))
  {
    errs.push_back(top + ": time must be ISO-8601 UTC with milliseconds");
  }

  const std::string list = std::string(to_string(c));
  const json * items = check.field(j, list, top);
  if (!items) {
    return errs;
  }
  if (!items->is_array()) {
    errs.push_back(top + ": '" + list + "' must be an array");
    return errs;
  }
  for (std::size_t i = 0; i < items->size(); ++i) {
    const json & it = (*items)[i];
    const std::string where = list + "[" + std::to_string(i) + "]";
    if (!it.is_object()) {
      errs.push_back(where + ": must be an object");
      continue;
    }
    switch (c) {
      case TopicClass::objects:
        check.integer(it, "track_id", where);
        check.class_label(it, "class", where);
        check.number(it, "lat", where, -90.0, 90.0);
        check.number(it, "lon", where, -180.0, 180.0);
        check.number(it, "speed", where, 0.0);
        check.number(it, "heading", where, 0.0, 360.0, true);
        if (const json * l = check.field(it, "label", where); l && !l->is_string()) {
          errs.push_back(where + ": 'label' must be a string");
        }
        break;
      case TopicClass::pairs:
        check.integer(it, "track_a", where);
        check.integer(it, "track_b", where);
        check.class_label(it, "class_a", where);
        check.class_label(it, "class_b", where);
        check.boolean(it, "cross_class", where);
        check.number(it, "distance_now", where, 0.0);
        check.number(it, "t_star", where, 0.0);
        check.number(it, "d_min", where, 0.0);
        check.number(it, "braking_distance", where, 0.0);
        check.number(it, "probability", where, 0.0, 1.0);
        check.boolean(it, "alert", where);
        check.one_of(it, "channel", where, {"red", "blue"});
        check.number(it, "intensity", where, 0.0, 1.0);
        break;
      case TopicClass::alerts:
        check.integer(it, "track_a", where);
        check.integer(it, "track_b", where);
        check.class_label(it, "class_a", where);
        check.class_label(it, "class_b", where);
        check.number(it, "probability", where, 0.0, 1.0);
        check.number(it, "distance_now", where, 0.0);
        check.number(it, "braking_distance", where, 0.0);
        check.number(it, "t_star", where, 0.0);
        break;
    }
  }
  return errs;
}

bool InMemoryBroker::send(const Message & m)
{
  std::vector<Callback> targets;
  {
    std::lock_guard lock(mutex_);
    if (!connected_) {
      return false;
    }
    delivered_.push_back(m);
    for (const auto & [filter, cb] : subscribers_) {
      if (filter == "#" || filter == m.topic) {
        targets.push_back(cb);
      }
    }
  }
  for (const auto & cb : targets) {
    cb(m);
  }
  return true;
}

void InMemoryBroker::set_connected(bool connected)
{
  std::lock_guard lock(mutex_);
  connected_ = connected;
}

bool InMemoryBroker::connected() const
{
  std::lock_guard lock(mutex_);
  return connected_;
}

void InMemoryBroker::subscribe(std::string topic_filter, Callback cb)
{
  std::lock_guard lock(mutex_);
  subscribers_.emplace_back(std::move(topic_filter), std::move(cb));
}

std::vector<Message> InMemoryBroker::delivered() const
{
  std::lock_guard lock(mutex_);
  return delivered_;
}

FileTransport::FileTransport(const std::filesystem::path & path) : out_(path)
{
  if (!out_) {
    throw Error("cannot open message log " + path.string());
  }
}

bool FileTransport::send(const Message & m)
{
  ordered_json j;
  j["topic"] = m.topic;
  j["qos"] = m.qos;
  j["payload"] = m.payload;
  out_ << j.dump() << '\n';
  return static_cast<bool>(out_);
}

DeliveryReport & DeliveryReport::operator+=(const DeliveryReport & o)
{
  published += o.published;
  failed += o.failed;
  buffered = o.buffered;
  dropped += o.dropped;
  skipped += o.skipped;
  return *this;
}

Publisher::Publisher(Transport & transport, std::size_t capacity)
: transport_(transport), capacity_(capacity)
{
  if (capacity_ == 0) {
    throw InvariantViolation("publisher buffer capacity must be positive");
  }
}

std::size_t Publisher::drain_locked()
{
  std::size_t sent = 0;
  while (!backlog_.empty() && transport_.send(backlog_.front())) {
    backlog_.pop_front();
    ++sent;
  }
  return sent;
}

DeliveryReport Publisher::publish(std::vector<Message> messages)
{
  std::lock_guard lock(mutex_);
  DeliveryReport report;
  report.published += drain_locked();
  const std::size_t fresh = messages.size();
  for (auto & m : messages) {
    if (backlog_.size() == capacity_) {
      backlog_.pop_front();
      ++report.dropped;
    }
    backlog_.push_back(std::move(m));
  }
  report.published += drain_locked();
  report.failed = std::min(backlog_.size(), fresh);
  report.buffered = backlog_.size();
  total_dropped_ += report.dropped;
  return report;
}

DeliveryReport Publisher::flush()
{
  std::lock_guard lock(mutex_);
  DeliveryReport report;
  report.published = drain_locked();
  report.buffered = backlog_.size();
  return report;
}

std::size_t Publisher::backlog() const
{
  std::lock_guard lock(mutex_);
  return backlog_.size();
}

std::size_t Publisher::total_dropped() const
{
  std::lock_guard lock(mutex_);
  return total_dropped_;
}

DeliveryReport publish_metadata(
  Publisher & publisher, const FrameHeader & h, std::span<const ObjectMetadata> objects,
  std::span<const risk::PairAssessment> assessments, std::span<const risk::PairAssessment> alerts)
{
  std::size_t skipped = 0;
  std::vector<Message> msgs;
  msgs.push_back(
    {topic_for(h.camera_id, TopicClass::objects), objects_payload(h, objects, &skipped),
     qos_for(TopicClass::objects)});
  msgs.push_back(
    {topic_for(h.camera_id, TopicClass::pairs), pairs_payload(h, assessments, &skipped),
     qos_for(TopicClass::pairs)});
  msgs.push_back(
    {topic_for(h.camera_id, TopicClass::alerts), alerts_payload(h, alerts, &skipped),
     qos_for(TopicClass::alerts)});
  DeliveryReport report = publisher.publish(std::move(msgs));
  report.skipped = skipped;
  return report;
}

CsvExporter::CsvExporter(const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  objects_.open(dir / "objects.csv");
  pairs_.open(dir / "pairs.csv");
  road_state_.open(dir / "road_state.csv");
  if (!objects_ || !pairs_ || !road_state_) {
    throw Error("cannot create CSV exports in " + dir.string());
  }
  objects_ << "frame_id,t,track_id,class,lat,lon,speed,heading\n";
  pairs_ << "frame_id,t,track_a,track_b,class_a,class_b,cross_class,distance_now,t_star,d_min,"
            "braking_distance,probability,alert\n";
  road_state_ << "t,ras,rad,zone\n";
}

void CsvExporter::write_objects(const FrameHeader & h, std::span<const ObjectMetadata> objects)
{
  for (const auto & o : objects) {
    objects_ << h.frame_id << ',' << fixed(h.t, 6) << ',' << o.track_id << ','
             << ingest::to_string(o.class_label) << ',' << fixed(o.geo.lat, 10) << ','
             << fixed(o.geo.lon, 10) << ',' << fixed(o.speed, 6) << ',' << fixed(o.heading, 4)
             << '\n';
  }
}

void CsvExporter::write_pairs(const FrameHeader & h, std::span<const risk::PairAssessment> pairs)
{
  for (const auto & p : pairs) {
    pairs_ << h.frame_id << ',' << fixed(h.t, 6) << ',' << p.track_a << ',' << p.track_b << ','
           << ingest::to_string(p.class_a) << ',' << ingest::to_string(p.class_b) << ','
           << (p.cross_class ? 1 : 0) << ',' << fixed(p.distance_now, 6) << ','
           << fixed(p.t_star, 6) << ',' << fixed(p.d_min, 6) << ','
           << fixed(p.braking_distance, 6) << ',' << fixed(p.probability, 6) << ','
           << (p.alert ? 1 : 0) << '\n';
  }
}

void CsvExporter::write_road_state(const metrics::RoadState & s)
{
  road_state_ << fixed(s.t, 6) << ',' << (s.ras ? fixed(*s.ras, 6) : "") << ','
              << (s.rad ? fixed(*s.rad, 6) : "") << ',' << metrics::to_string(s.zone) << '\n';
}

void CsvExporter::flush()
{
  objects_.flush();
  pairs_.flush();
  road_state_.flush();
}

}  // namespace kerbwatch::telemetry
