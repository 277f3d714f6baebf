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

#ifndef KERBWATCH__TRACK_HPP_
#define KERBWATCH__TRACK_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/geo.hpp"

namespace kerbwatch::track
{

using TrackId = std::int64_t;
using ingest::ClassLabel;

struct TrackSample
{
  double t{0.0};
  geo::GeoPoint geo;
  geo::PixelPoint pixel;
};

/// Persistent identity with georeferenced kinematics.
///
/// velocity is (east, north) in m/s on the tracker's tangent plane, heading is degrees
/// clockwise from north in [0, 360).
struct Track
{
  static constexpr std::size_t kHistoryCapacity = 64;

  TrackId track_id{0};
  ClassLabel class_label{ClassLabel::other};
  std::deque<TrackSample> history;
  geo::BoundingBox bbox;
  Eigen::Vector2d velocity{Eigen::Vector2d::Zero()};
  double speed{0.0};
  double acceleration{0.0};
  double heading{0.0};
  int age_frames{0};
  int misses{0};
  // false while the latest detection fell outside the geoframe validity region
  bool in_region{true};
  // number of velocity estimates folded into the EMA so far
  int velocity_samples{0};

  const TrackSample & latest() const { return history.back(); }
};

/// Intersection over union of two valid boxes, in [0, 1].
double iou(const geo::BoundingBox & a, const geo::BoundingBox & b);

struct Match
{
  TrackId track_id{0};
  std::size_t detection_index{0};
  double iou{0.0};
};

struct AssociationResult
{
  std::vector<Match> matched;
  std::vector<TrackId> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Greedy matching in descending IoU over same-class pairs with IoU >= threshold.
/// Ties break by (track_id, detection index).
AssociationResult associate(
  std::span<const Track> tracks, const ingest::FrameBatch & batch, double iou_threshold);

inline constexpr double kVelocityEmaAlpha = 0.5;
inline constexpr double kMinSampleInterval = 1e-3;

/// Appends a georeferenced sample and refreshes velocity (EMA of finite differences on the
/// tangent plane), speed, acceleration and heading. Samples closer than 1 ms to the previous
/// one are merged into it and leave the kinematics untouched.
Track update_kinematics(
  Track track, double t, geo::GeoPoint g, const geo::LocalTangentPlane & plane,
  geo::PixelPoint pixel = {});

/// Drops tracks with misses > max_misses.
std::vector<Track> prune(std::vector<Track> tracks, int max_misses);

struct TrackerParams
{
  double iou_threshold{0.3};
  int max_misses{5};

  void validate() const;
};

/// Ground anchor of one detection after distortion correction; geo is empty outside the
/// validity region.
struct Anchor
{
  geo::PixelPoint pixel;
  std::optional<geo::GeoPoint> geo;
};

/// Owns the track set of one camera. Ids increase monotonically and are never reused.
class Tracker
{
public:
  Tracker(geo::LocalTangentPlane plane, TrackerParams params);

  /// anchors[i] belongs to batch.detections[i].
  void step(const ingest::FrameBatch & batch, std::span<const Anchor> anchors);

  const std::vector<Track> & tracks() const { return tracks_; }
  const geo::LocalTangentPlane & plane() const { return plane_; }
  TrackId next_id() const { return next_id_; }

private:
  geo::LocalTangentPlane plane_;
  TrackerParams params_;
  std::vector<Track> tracks_;
  TrackId next_id_{1};
};

}  // namespace kerbwatch::track

#endif  // KERBWATCH__TRACK_HPP_
