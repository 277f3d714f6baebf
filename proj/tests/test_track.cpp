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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "kerbwatch/error.hpp"
#include "kerbwatch/geo.hpp"
#include "kerbwatch/track.hpp"

namespace
{
using namespace kerbwatch;
using namespace kerbwatch::track;
using geo::BoundingBox;
using geo::GeoPoint;
using ingest::ClassLabel;

const GeoPoint kOrigin{40.6405, -8.6538};

Track make_track(TrackId id, ClassLabel c, BoundingBox box)
{
  Track t;
  t.track_id = id;
  t.class_label = c;
  t.bbox = box;
  return t;
}

ingest::DetectionEvent make_det(ClassLabel c, BoundingBox box)
{
  ingest::DetectionEvent e;
  e.camera_id = "cam";
  e.class_label = c;
  e.bbox = box;
  e.confidence = 0.9;
  return e;
}

struct Assignment
{
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> ious;  // sorted descending
};

// Enumerates every partial injection of eligible pairs and keeps the one whose IoU list, sorted
// descending, is lexicographically largest (what greedy-by-IoU should return without ties).
Assignment exhaustive_oracle(const std::vector<std::vector<double>> & m, double threshold)
{
  const std::size_t nt = m.size();
  const std::size_t nd = nt == 0 ? 0 : m[0].size();
  Assignment best;
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  std::vector<bool> used(nd, false);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == nt) {
      std::vector<double> v;
      for (const auto & [a, b] : cur) {
        v.push_back(m[a][b]);
      }
      std::sort(v.rbegin(), v.rend());
      if (std::lexicographical_compare(best.ious.begin(), best.ious.end(), v.begin(), v.end())) {
        best.ious = v;
        best.pairs = cur;
      }
      return;
    }
    rec(t + 1);
    for (std::size_t d = 0; d < nd; ++d) {
      if (!used[d] && m[t][d] >= threshold) {
        used[d] = true;
        cur.emplace_back(t, d);
        rec(t + 1);
        cur.pop_back();
        used[d] = false;
      }
    }
  };
  rec(0);
  return best;
}

TEST(Iou, Arithmetic)
{
  const BoundingBox a{0, 0, 2, 2};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {1, 0, 3, 2}), 1.0 / 3.0);
  EXPECT_EQ(iou(a, {2, 0, 4, 2}), 0.0);
}

TEST(Associate, PerfectOverlapMatches)
{
  const std::vector<Track> tracks{make_track(1, ClassLabel::car, {0, 0, 10, 10})};
  ingest::FrameBatch b;
  b.detections = {make_det(ClassLabel::car, {0, 0, 10, 10})};
  const auto r = associate(tracks, b, 0.3);
  ASSERT_EQ(r.matched.size(), 1u);
  EXPECT_EQ(r.matched[0].track_id, 1);
  EXPECT_EQ(r.matched[0].iou, 1.0);
}

TEST(Associate, ClassGate)
{
  const std::vector<Track> tracks{make_track(1, ClassLabel::car, {0, 0, 10, 10})};
  ingest::FrameBatch b;
  b.detections = {make_det(ClassLabel::person, {0, 0, 10, 10})};
  const auto r = associate(tracks, b, 0.3);
  EXPECT_TRUE(r.matched.empty());
  EXPECT_EQ(r.unmatched_tracks.size(), 1u);
  EXPECT_EQ(r.unmatched_detections.size(), 1u);
}

TEST(Associate, CrossedOverlapsPreferStrongestPair)
{
  // t1 overlaps d1 strongly and d2 moderately; t2 overlaps d2 best of all
  const std::vector<Track> tracks{
    make_track(1, ClassLabel::car, {0, 0, 10, 10}), make_track(2, ClassLabel::car, {3, 0, 13, 10})};
  ingest::FrameBatch b;
  b.detections = {
    make_det(ClassLabel::car, {0.5, 0, 10.5, 10}), make_det(ClassLabel::car, {2.8, 0, 12.8, 10})};
  std::vector<std::vector<double>> m(2, std::vector<double>(2));
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t d = 0; d < 2; ++d) {
      m[t][d] = iou(tracks[t].bbox, b.detections[d].bbox);
    }
  }
  const auto r = associate(tracks, b, 0.3);
  const auto o = exhaustive_oracle(m, 0.3);
  ASSERT_EQ(r.matched.size(), o.pairs.size());
  for (const auto & [t, d] : o.pairs) {
    const auto it = std::find_if(r.matched.begin(), r.matched.end(), [&](const Match & x) {
      return x.track_id == tracks[t].track_id;
    });
    ASSERT_NE(it, r.matched.end());
    EXPECT_EQ(it->detection_index, d);
  }
}

TEST(Associate, MatchesExhaustiveOracleOnRandomCases)
{
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> pos(0.0, 30.0);
  std::uniform_real_distribution<double> size(8.0, 14.0);
  auto box = [&] {
    const double x = pos(rng);
    const double y = pos(rng);
    return BoundingBox{x, y, x + size(rng), y + size(rng)};
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Track> tracks{
      make_track(1, ClassLabel::person, box()), make_track(2, ClassLabel::person, box())};
    ingest::FrameBatch b;
    b.detections = {make_det(ClassLabel::person, box()), make_det(ClassLabel::person, box())};
    std::vector<std::vector<double>> m(2, std::vector<double>(2));
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        m[t][d] = iou(tracks[t].bbox, b.detections[d].bbox);
      }
    }
    const auto r = associate(tracks, b, 0.1);
    const auto o = exhaustive_oracle(m, 0.1);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (const auto & x : r.matched) {
      got.emplace_back(static_cast<std::size_t>(x.track_id - 1), x.detection_index);
    }
    std::sort(got.begin(), got.end());
    auto want = o.pairs;
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want) << "trial " << trial;
    // partial injection
    std::set<TrackId> ts;
    std::set<std::size_t> ds;
    for (const auto & x : r.matched) {
      EXPECT_TRUE(ts.insert(x.track_id).second);
      EXPECT_TRUE(ds.insert(x.detection_index).second);
    }
  }
}

TEST(Kinematics, StationaryHasZeroSpeed)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track t;
  for (int i = 0; i < 10; ++i) {
    t = update_kinematics(t, 0.1 * i, kOrigin, plane);
  }
  EXPECT_EQ(t.speed, 0.0);
  EXPECT_EQ(t.acceleration, 0.0);
}

TEST(Kinematics, NorthwardConvergesToTwoMetersPerSecond)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track t;
  for (int i = 0; i <= 12; ++i) {
    t = update_kinematics(t, 0.5 * i, plane.to_geo({0.0, 1.0 * i}), plane);
  }
  EXPECT_NEAR(t.speed, 2.0, 0.01);
  EXPECT_NEAR(t.heading, 0.0, 0.1);
}

TEST(Kinematics, EastwardHeading)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track t;
  for (int i = 0; i <= 12; ++i) {
    t = update_kinematics(t, 0.5 * i, plane.to_geo({1.5 * i, 0.0}), plane);
  }
  EXPECT_NEAR(t.speed, 3.0, 0.01);
  EXPECT_NEAR(t.heading, 90.0, 0.1);
}

TEST(Kinematics, EmaFollowsClosedFormAfterStep)
{
  // speed jumps from 1 to 3 m/s: the estimate approaches 3 as 3 - 2 * 0.5^k
  const geo::LocalTangentPlane plane(kOrigin);
  Track t;
  double y = 0.0;
  t = update_kinematics(t, 0.0, plane.to_geo({0.0, y}), plane);
  for (int i = 1; i <= 5; ++i) {
    y += 1.0;
    t = update_kinematics(t, i, plane.to_geo({0.0, y}), plane);
  }
  for (int k = 1; k <= 8; ++k) {
    y += 3.0;
    t = update_kinematics(t, 5 + k, plane.to_geo({0.0, y}), plane);
    EXPECT_NEAR(t.speed, 3.0 - 2.0 * std::pow(0.5, k), 1e-6);
  }
}

TEST(Kinematics, TimeRegressionRejected)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track t = update_kinematics(Track{}, 1.0, kOrigin, plane);
  EXPECT_THROW(update_kinematics(t, 0.5, kOrigin, plane), InvariantViolation);
}

TEST(Kinematics, HistoryBounded)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track t;
  for (int i = 0; i < 200; ++i) {
    t = update_kinematics(t, 0.1 * i, plane.to_geo({0.1 * i, 0.0}), plane);
  }
  EXPECT_EQ(t.history.size(), Track::kHistoryCapacity);
}

TEST(Kinematics, SpeedInvariantUnderSmallTranslation)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Track a;
  Track b;
  for (int i = 0; i <= 20; ++i) {
    const GeoPoint g = plane.to_geo({0.7 * i, 1.1 * i});
    a = update_kinematics(a, 0.1 * i, g, plane);
    b = update_kinematics(b, 0.1 * i, {g.lat + 0.001, g.lon - 0.001}, plane);
  }
  EXPECT_NEAR(b.speed / a.speed, 1.0, 1e-3);
}

TEST(Prune, Boundary)
{
  std::vector<Track> v(2);
  v[0].track_id = 1;
  v[0].misses = 5;
  v[1].track_id = 2;
  v[1].misses = 6;
  const auto kept = prune(v, 5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].track_id, 1);
}

TEST(Tracker, IdsNeverReused)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Tracker tracker(plane, {});
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(0.0, 2000.0);
  std::set<TrackId> retired;
  std::set<TrackId> live;
  for (int f = 0; f < 10000; ++f) {
    ingest::FrameBatch b;
    b.camera_id = "cam";
    b.frame_id = f;
    b.t = 0.1 * f;
    std::vector<Anchor> anchors;
    const int n = static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      const double x = pos(rng);
      b.detections.push_back(make_det(ClassLabel::person, {x, x, x + 10, x + 20}));
      anchors.push_back({{x + 5, x + 20}, plane.to_geo({x / 100.0, 0.0})});
    }
    tracker.step(b, anchors);
    std::set<TrackId> now;
    for (const auto & t : tracker.tracks()) {
      now.insert(t.track_id);
      ASSERT_EQ(retired.count(t.track_id), 0u) << "id " << t.track_id << " came back";
    }
    for (TrackId id : live) {
      if (!now.count(id)) {
        retired.insert(id);
      }
    }
    live = now;
  }
  EXPECT_GT(retired.size(), 1000u);
}

TEST(Tracker, OutsideRegionTrackKeepsNoHistory)
{
  const geo::LocalTangentPlane plane(kOrigin);
  Tracker tracker(plane, {});
  ingest::FrameBatch b;
  b.camera_id = "cam";
  b.t = 1.0;
  b.detections = {make_det(ClassLabel::car, {0, 0, 10, 10})};
  const std::vector<Anchor> anchors{{{5, 10}, std::nullopt}};
  tracker.step(b, anchors);
  ASSERT_EQ(tracker.tracks().size(), 1u);
  EXPECT_FALSE(tracker.tracks()[0].in_region);
  EXPECT_TRUE(tracker.tracks()[0].history.empty());
}

TEST(Tracker, DeterministicReplay)
{
  auto run = [] {
    const geo::LocalTangentPlane plane(kOrigin);
    Tracker tracker(plane, {});
    std::vector<std::pair<TrackId, double>> out;
    for (int f = 0; f < 50; ++f) {
      ingest::FrameBatch b;
      b.t = 0.1 * f;
      b.detections = {
        make_det(ClassLabel::car, {100.0 + f, 0, 160.0 + f, 40}),
        make_det(ClassLabel::person, {300.0 - f, 0, 320.0 - f, 50})};
      const std::vector<Anchor> anchors{
        {{130.0 + f, 40}, plane.to_geo({0.3 * f, 0.0})},
        {{310.0 - f, 50}, plane.to_geo({10.0, 0.1 * f})}};
      tracker.step(b, anchors);
      for (const auto & t : tracker.tracks()) {
        out.emplace_back(t.track_id, t.speed);
      }
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
