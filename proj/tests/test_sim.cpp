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

#include <sstream>
#include <stdexcept>
#include <string>

#include "kerbwatch/config.hpp"
#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/sim.hpp"

namespace
{
using namespace kerbwatch;
using namespace kerbwatch::sim;

std::string stream_text(const ScenarioOutput & out)
{
  std::ostringstream s;
  ingest::write_detection_stream(s, out.detections);
  return s.str();
}

const ScenarioScript & fixture(const std::string & name)
{
  static const auto all = collision_fixtures();
  for (const auto & s : all) {
    if (s.name == name) {
      return s;
    }
  }
  throw std::runtime_error("no fixture " + name);
}

TEST(Simulator, StaticActorHasConstantBox)
{
  const ScenarioOutput out = run_scenario(crosswalk_fixture());
  ASSERT_FALSE(out.detections.empty());
  // two markers per frame, emitted in actor order
  for (std::size_t i = 0; i < out.detections.size(); ++i) {
    EXPECT_EQ(out.detections[i].bbox, out.detections[i % 2].bbox);
  }
}

TEST(Simulator, SeededRunsAreByteIdentical)
{
  const auto a = stream_text(run_scenario(crosswalk_fixture(2.0, 7)));
  const auto b = stream_text(run_scenario(crosswalk_fixture(2.0, 7)));
  const auto c = stream_text(run_scenario(crosswalk_fixture(2.0, 8)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Simulator, AnchorsRecoverTruthWithoutNoise)
{
  for (const auto & script : collision_fixtures()) {
    const ScenarioOutput out = run_scenario(script);
    const geo::GeoFrame gf = script.geoframe();
    std::size_t k = 0;
    for (const auto & frame : out.truth) {
      for (const auto & actor : frame.actors) {
        if (!actor.visible) {
          continue;
        }
        const auto & d = out.detections.at(k++);
        ASSERT_EQ(d.frame_id, frame.frame_id);
        const auto g = geo::pixel_to_geo(gf, geo::ground_anchor(d.bbox));
        ASSERT_TRUE(g.has_value());
        EXPECT_NEAR(g->lat, actor.geo.lat, 1e-6);
        EXPECT_NEAR(g->lon, actor.geo.lon, 1e-6);
      }
    }
    EXPECT_EQ(k, out.detections.size());
  }
}

TEST(Simulator, StreamRoundTripsThroughParser)
{
  const ScenarioOutput out = run_scenario(busy_scene_fixture(12, 3, 2.0));
  std::istringstream in(stream_text(out));
  const auto read = ingest::read_detection_stream(in);
  EXPECT_EQ(read.rejected, 0u);
  std::vector<ingest::DetectionEvent> flat;
  for (const auto & b : read.batches) {
    flat.insert(flat.end(), b.detections.begin(), b.detections.end());
  }
  EXPECT_EQ(flat, out.detections);
}

TEST(Simulator, CrosswalkMarkersEightMetersApart)
{
  const ScenarioOutput out = run_scenario(crosswalk_fixture());
  ASSERT_EQ(out.truth.front().pairs.size(), 1u);
  EXPECT_NEAR(out.truth.front().pairs[0].distance, 8.0, 1e-9);
}

TEST(Simulator, MarkerOutsideRegionIsNotDetected)
{
  ScenarioScript s = crosswalk_fixture();
  const geo::GeoPoint far = reference_point(0.0, 80.0);
  s.actors[1].path = {{kReferenceEpoch, far}, {kReferenceEpoch + 3.0, far}};
  const ScenarioOutput out = run_scenario(s);
  EXPECT_EQ(out.detections.size(), out.truth.size());
  EXPECT_FALSE(out.truth.front().actors[1].visible);
  const geo::GeoFrame gf = s.geoframe();
  EXPECT_FALSE(geo::pixel_to_geo(gf, gf.unproject(far)).has_value());
}

TEST(CollisionFixtures, StraightApproachAlertsNearTheEnd)
{
  const ScenarioOutput out = run_scenario(fixture("collision-a"));
  bool late_alert = false;
  for (const auto & f : out.truth) {
    const double dt = f.t - kReferenceEpoch;
    if (dt > 3.5 && dt < 4.5) {
      late_alert = late_alert || f.any_alert();
    }
  }
  EXPECT_TRUE(late_alert);
}

TEST(CollisionFixtures, ParallelTrafficNeverAlerts)
{
  const ScenarioOutput out = run_scenario(fixture("collision-d"));
  for (const auto & f : out.truth) {
    EXPECT_FALSE(f.any_alert()) << "frame " << f.frame_id;
  }
}

TEST(CollisionFixtures, SlowCarIsLowRisk)
{
  const ScenarioOutput out = run_scenario(fixture("collision-b"));
  int slow_frames = 0;
  for (const auto & f : out.truth) {
    double car_speed = -1.0;
    for (const auto & a : f.actors) {
      if (a.class_label == ingest::ClassLabel::car) {
        car_speed = a.speed;
      }
    }
    if (car_speed >= 0.0 && car_speed < 0.5) {
      ++slow_frames;
      for (const auto & p : f.pairs) {
        EXPECT_LT(p.probability, 0.5);
      }
    }
  }
  EXPECT_GT(slow_frames, 30);
}

TEST(CollisionFixtures, LabelsReproducible)
{
  for (const auto & s : collision_fixtures()) {
    const auto a = run_scenario(s);
    const auto b = run_scenario(s);
    ASSERT_EQ(a.truth.size(), b.truth.size());
    for (std::size_t i = 0; i < a.truth.size(); ++i) {
      EXPECT_EQ(a.truth[i].any_alert(), b.truth[i].any_alert());
    }
  }
}

TEST(Script, JsonRoundTrip)
{
  for (const auto & s : collision_fixtures()) {
    const std::string text = script_to_json(s);
    const ScenarioScript back = script_from_json(text);
    EXPECT_EQ(script_to_json(back), text);
    EXPECT_EQ(stream_text(run_scenario(back)), stream_text(run_scenario(s)));
  }
}

TEST(Script, InvalidScriptsNamed)
{
  EXPECT_THROW(script_from_json("[]"), ingest::ConfigError);
  EXPECT_THROW(script_from_json(R"({"actors": []})"), ingest::ConfigError);
  auto j = script_to_json(crosswalk_fixture());
  const auto pos = j.find("\"frame_rate\": 30.0");
  ASSERT_NE(pos, std::string::npos);
  j.replace(pos, 18, "\"frame_rate\": -1.0");
  EXPECT_THROW(script_from_json(j), ingest::ConfigError);
}

TEST(Script, FixtureLookup)
{
  EXPECT_EQ(fixture_by_name("crosswalk", 7).name, "crosswalk");
  EXPECT_EQ(fixture_by_name("collision-c", 1).name, "collision-c");
  EXPECT_EQ(fixture_by_name("busy", 11).actors.size(), 30u);
  EXPECT_THROW(fixture_by_name("nope", 1), InvariantViolation);
}

TEST(Oracle, BruteForceMatchesHeadOn)
{
  const OracleResult r = brute_force_oracle(
    {0.0, 0.0}, {0.0, 0.0}, ingest::ClassLabel::person, {-5.0, 0.0}, {10.0, 0.0},
    ingest::ClassLabel::car, 5.0, {}, {}, {});
  EXPECT_NEAR(r.t_star, 0.5, 1e-3);
  EXPECT_NEAR(r.d_min, 0.0, 1e-9);
  EXPECT_NEAR(r.probability, 1.0, 1e-9);
  EXPECT_TRUE(r.alert);
}

}  // namespace
