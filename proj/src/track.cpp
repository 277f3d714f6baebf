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

#include "kerbwatch/track.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace kerbwatch::track
{

double iou(const geo::BoundingBox & a, const geo::BoundingBox & b)
{
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) {
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

AssociationResult associate(
  std::span<const Track> tracks, const ingest::FrameBatch & batch, double iou_threshold)
{
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InvariantViolation("association IoU threshold must lie in (0, 1)");
  }
  std::vector<Match> candidates;
  for (const auto & tr : tracks) {
    for (std::size_t d = 0; d < batch.detections.size(); ++d) {
      const auto & det = batch.detections[d];
      if (det.class_label != tr.class_label) {
        continue;
      }
      const double overlap = iou(tr.bbox, det.bbox);
      if (overlap >= iou_threshold) {
        candidates.push_back({tr.track_id, d, overlap});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Match & a, const Match & b) {
    if (a.iou != b.iou) {
      return a.iou > b.iou;
    }
    return std::tie(a.track_id, a.detection_index) < std::tie(b.track_id, b.detection_index);
  });

  AssociationResult result;
  std::vector<TrackId> used_tracks;
  std::vector<bool> used_detections(batch.detections.size(), false);
  for (const auto & c : candidates) {
    if (used_detections[c.detection_index] ||
        std::find(used_tracks.begin(), used_tracks.end(), c.track_id) != used_tracks.end())
    {
      continue;
    }
    used_detections[c.detection_index] = true;
    used_tracks.push_back(c.track_id);
    result.matched.push_back(c);
  }
  for (const auto & tr : tracks) {
    if (std::find(used_tracks.begin(), used_tracks.end(), tr.track_id) == used_tracks.end()) {
      result.unmatched_tracks.push_back(tr.track_id);
    }
  }
  for (std::size_t d = 0; d < used_detections.size(); ++d) {
    if (!used_detections[d]) {
      result.unmatched_detections.push_back(d);
    }
  }
  return result;
}

Track update_kinematics(
  Track track, double t, geo::GeoPoint g, const geo::LocalTangentPlane & plane,
  geo::PixelPoint pixel)
{
  if (!std::isfinite(t)) {
    throw InvariantViolation("sample timestamp must be finite");
  }
  geo::validate(g);
  if (track.history.empty()) {
    track.history.push_back({t, g, pixel});
    return track;
  }
  TrackSample & last = track.history.back();
  const double dt = t - last.t;
  if (dt < 0.0) {
    throw InvariantViolation("track samples must arrive in increasing time");
  }
  if (dt < kMinSampleInterval) {
    last.geo = {(last.geo.lat + g.lat) / 2.0, (last.geo.lon + g.lon) / 2.0};
    last.pixel = {(last.pixel.u + pixel.u) / 2.0, (last.pixel.v + pixel.v) / 2.0};
    return track;
  }

  const Eigen::Vector2d raw = (plane.to_local(g) - plane.to_local(last.geo)) / dt;
  const double previous_speed = track.speed;
  if (track.velocity_samples == 0) {
    track.velocity = raw;
  } else {
    track.velocity = kVelocityEmaAlpha * raw + (1.0 - kVelocityEmaAlpha) * track.velocity;
  }
  track.speed = track.velocity.norm();
  track.acceleration = track.velocity_samples == 0 ? 0.0 : (track.speed - previous_speed) / dt;
  ++track.velocity_samples;
  if (track.speed > 1e-9) {
    double heading = std::atan2(track.velocity.x(), track.velocity.y()) * 180.0 / std::numbers::pi;
    if (heading < 0.0) {
      heading += 360.0;
    }
    track.heading = heading >= 360.0 ? 0.0 : heading;
  }

  track.history.push_back({t, g, pixel});
  while (track.history.size() > Track::kHistoryCapacity) {
    track.history.pop_front();
  }
  return track;
}

std::vector<Track> prune(std::vector<Track> tracks, int max_misses)
{
  if (max_misses < 1) {
    throw InvariantViolation("max_misses must be >= 1");
  }
  std::erase_if(tracks, [max_misses](const Track & tr) { return tr.misses > max_misses; });
  return tracks;
}

void TrackerParams::validate() const
{
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InvariantViolation("association IoU threshold must lie in (0, 1)");
  }
  if (max_misses < 1) {
    throw InvariantViolation("max_misses must be >= 1");
  }
}

Tracker::Tracker(geo::LocalTangentPlane plane, TrackerParams params)
: plane_(plane), params_(params)
{
  params_.validate();
}

void Tracker::step(const ingest::FrameBatch & batch, std::span<const Anchor> anchors)
{
  if (anchors.size() != batch.detections.size()) {
    throw InvariantViolation("one anchor per detection is required");
  }
  const AssociationResult assoc = associate(tracks_, batch, params_.iou_threshold);

  auto apply_detection = [&](Track & tr, std::size_t d) {
    tr.bbox = batch.detections[d].bbox;
    const Anchor & a = anchors[d];
    tr.in_region = a.geo.has_value();
    if (a.geo) {
      tr = update_kinematics(std::move(tr), batch.t, *a.geo, plane_, a.pixel);
    }
  };

  for (const auto & m : assoc.matched) {
    auto it = std::find_if(tracks_.begin(), tracks_.end(), [&](const Track & tr) {
      return tr.track_id == m.track_id;
    });
    it->misses = 0;
    ++it->age_frames;
    apply_detection(*it, m.detection_index);
  }
  for (TrackId id : assoc.unmatched_tracks) {
    auto it = std::find_if(
      tracks_.begin(), tracks_.end(), [id](const Track & tr) { return tr.track_id == id; });
    ++it->misses;
  }
  for (std::size_t d : assoc.unmatched_detections) {
    Track tr;
    tr.track_id = next_id_++;
    tr.class_label = batch.detections[d].class_label;
    tr.age_frames = 1;
    apply_detection(tr, d);
    tracks_.push_back(std::move(tr));
  }
  tracks_ = prune(std::move(tracks_), params_.max_misses);
}

}  // namespace kerbwatch::track
