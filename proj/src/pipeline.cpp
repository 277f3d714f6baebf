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


#include "kerbwatch/pipeline.hpp"

#include <chrono>
#include <numeric>
#include <optional>
#include <sstream>
#include <utility>
#include <variant>

namespace kerbwatch::app
{
namespace
{
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<metrics::ZoneMap> load_zone_map(const ingest::PipelineConfig & c)
{
  if (c.zone_map_csv.empty()) {
    return std::nullopt;
  }
  const auto samples = metrics::read_ras_rad_csv(c.zone_map_csv);
  return metrics::ZoneMap::build_uniform(samples);
}

double wall_clock_now()
{
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
    .count();
}

}  // namespace

std::string_view to_string(Stage s)
{
  switch (s) {
    case Stage::ingest:
      return "ingest";
    case Stage::undistort:
      return "undistort";
    case Stage::geo:
      return "geo";
    case Stage::track:
      return "track";
    case Stage::risk:
      return "risk";
    case Stage::metrics:
      return "metrics";
    case Stage::publish:
      return "publish";
  }
  return "unknown";
}

double FrameResult::end_to_end() const
{
  return std::accumulate(
    timings.begin(), timings.end(), 0.0,
    [](double acc, const StageTiming & s) { return acc + s.duration; });
}

Pipeline::Pipeline(ingest::PipelineConfig config, Sinks sinks, ClockMode mode)
: config_(std::move(config)),
  sinks_(sinks),
  mode_(mode),
  tracker_(geo::LocalTangentPlane(config_.geoframe.centroid()), config_.tracker),
  road_state_(config_.road_state_window_s, load_zone_map(config_))
{
  config_.validate();
}

FrameResult Pipeline::process(const ingest::FrameBatch & batch, double ingest_seconds)
{
  if (batch.camera_id != config_.camera_id) {
    throw InvariantViolation(
      "batch for camera '" + batch.camera_id + "' given to pipeline of '" + config_.camera_id +
      "'");
  }
  FrameResult r;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    r.timings[i].stage = kStages[i];
  }
  r.header.camera_id = batch.camera_id;
  r.header.frame_id = batch.frame_id;
  r.header.t = batch.t;
  if (mode_ == ClockMode::live) {
    r.header.wall_time = wall_clock_now();
  }
  r.detections = batch.detections.size();

  auto start = Clock::now();
  const ingest::FrameBatch kept = ingest::filter_by_confidence(batch, config_.confidence_threshold);
  r.filtered = batch.detections.size() - kept.detections.size();
  r.timings[0].duration = ingest_seconds + seconds_since(start);

  start = Clock::now();
  std::vector<track::Anchor> anchors(kept.detections.size());
  std::vector<bool> usable(kept.detections.size(), true);
  for (std::size_t i = 0; i < kept.detections.size(); ++i) {
    geo::PixelPoint p = geo::ground_anchor(kept.detections[i].bbox);
    if (config_.distortion) {
      try {
        p = geo::undistort_point(p, *config_.distortion);
      } catch (const geo::CorrectionFailed &) {
        usable[i] = false;
        ++r.undistort_failures;
      }
    }
    anchors[i].pixel = p;
  }
  r.timings[1].duration = seconds_since(start);

  start = Clock::now();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (usable[i]) {
      anchors[i].geo = geo::pixel_to_geo(config_.geoframe, anchors[i].pixel);
      if (!anchors[i].geo) {
        ++r.outside_region;
      }
    }
  }
  r.timings[2].duration = seconds_since(start);

  start = Clock::now();
  tracker_.step(kept, anchors);
  r.timings[3].duration = seconds_since(start);

  start = Clock::now();
  const auto results = risk::assess_all(
    tracker_.tracks(), tracker_.plane(), config_.friction, config_.vru, config_.risk);
  for (const auto & res : results) {
    if (const auto * a = std::get_if<risk::PairAssessment>(&res)) {
      r.assessments.push_back(*a);
      if (a->alert) {
        r.alerts.push_back(*a);
      }
    } else {
      ++r.skipped_pairs;
    }
  }
  r.timings[4].duration = seconds_since(start);

  start = Clock::now();
  std::vector<double> speeds;
  for (const auto & tr : tracker_.tracks()) {
    if (tr.misses != 0 || !tr.in_region || tr.history.empty()) {
      continue;
    }
    telemetry::ObjectMetadata m;
    m.camera_id = config_.camera_id;
    m.track_id = tr.track_id;
    m.class_label = tr.class_label;
    m.geo = tr.latest().geo;
    m.speed = tr.speed;
    m.heading = tr.heading;
    m.t = tr.latest().t;
    r.objects.push_back(m);
    if (tr.velocity_samples > 0) {
      speeds.push_back(tr.speed);
    }
  }
  std::vector<double> distances;
  distances.reserve(r.assessments.size());
  for (const auto & a : r.assessments) {
    distances.push_back(a.distance_now);
  }
  r.road_state = road_state_.update(speeds, distances, batch.t);
  r.timings[5].duration = seconds_since(start);

  start = Clock::now();
  if (sinks_.publisher != nullptr) {
    r.delivery =
      telemetry::publish_metadata(*sinks_.publisher, r.header, r.objects, r.assessments, r.alerts);
  }
  if (sinks_.csv != nullptr) {
    sinks_.csv->write_objects(r.header, r.objects);
    sinks_.csv->write_pairs(r.header, r.assessments);
    sinks_.csv->write_road_state(r.road_state);
  }
  r.timings[6].duration = seconds_since(start);
  return r;
}

RunSummary run_pipeline(
  const ingest::PipelineConfig & config, std::istream & source, Sinks sinks, ClockMode mode,
  const FrameCallback & on_frame)
{
  Pipeline pipeline(config, sinks, mode);
  ingest::DetectionStreamReader reader(source, config.reorder_window_s);
  RunSummary s;
  while (true) {
    const auto start = Clock::now();
    std::optional<ingest::FrameBatch> batch = reader.next();
    const double ingest_s = seconds_since(start);
    if (!batch) {
      break;
    }
    if (batch->camera_id != config.camera_id) {
      s.other_camera += batch->detections.size();
      continue;
    }
    const FrameResult r = pipeline.process(*batch, ingest_s);
    ++s.frames;
    s.detections += r.detections;
    s.filtered += r.filtered;
    s.outside_region += r.outside_region;
    s.undistort_failures += r.undistort_failures;
    s.alerts += r.alerts.size();
    s.published += r.delivery.published;
    s.failed += r.delivery.failed;
    s.dropped += r.delivery.dropped;
    s.skipped += r.delivery.skipped;
    if (on_frame) {
      on_frame(r);
    }
  }
  if (sinks.publisher != nullptr) {
    const telemetry::DeliveryReport last = sinks.publisher->flush();
    s.published += last.published;
    s.buffered = last.buffered;
  }
  if (sinks.csv != nullptr) {
    sinks.csv->flush();
  }
  s.tracks_created = static_cast<std::size_t>(pipeline.tracker().next_id() - 1);
  s.rejects = reader.rejected();
  s.diagnostics = reader.diagnostics();
  return s;
}

std::string format_summary(const RunSummary & s)
{
  std::ostringstream out;
  out << "frames:           " << s.frames << '\n'
      << "detections:       " << s.detections << '\n'
      << "below confidence: " << s.filtered << '\n'
      << "outside region:   " << s.outside_region << '\n'
      << "undistort failed: " << s.undistort_failures << '\n'
      << "other cameras:    " << s.other_camera << '\n'
      << "tracks created:   " << s.tracks_created << '\n'
      << "alerts:           " << s.alerts << '\n'
      << "rejected records: " << s.rejects << '\n'
      << "published:        " << s.published << '\n'
      << "still buffered:   " << s.buffered << '\n'
      << "dropped:          " << s.dropped << '\n'
      << "skipped items:    " << s.skipped << '\n';
  for (const auto & d : s.diagnostics) {
    out << "  " << d << '\n';
  }
  return out.str();
}

}  // namespace kerbwatch::app
