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

#ifndef KERBWATCH__SIM_HPP_
#define KERBWATCH__SIM_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kerbwatch/config.hpp"
#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/geo.hpp"
#include "kerbwatch/risk.hpp"

namespace kerbwatch::sim
{

using ingest::ClassLabel;

struct Waypoint
{
  double t{0.0};
  geo::GeoPoint geo;
};

/// One scripted road user. Position is linearly interpolated between waypoints; the actor
/// exists only between its first and last waypoint time.
struct ActorSpec
{
  ClassLabel class_label{ClassLabel::person};
  std::vector<Waypoint> path;
  double bbox_width{30.0};
  double bbox_height{70.0};
};

struct ConfidenceModel
{
  double default_confidence{0.9};
  std::map<ClassLabel, double> per_class;

  double for_class(ClassLabel c) const;
};

struct ScenarioScript
{
  std::string name;
  std::string camera_id{"cam-sim"};
  std::vector<geo::Correspondence> correspondences;
  std::optional<geo::DistortionModel> distortion;
  std::vector<ActorSpec> actors;
  double frame_rate{30.0};
  double pixel_noise_sigma{0.0};
  ConfidenceModel confidence;
  std::uint64_t seed{0};
  // probability that a visible actor's detection is withheld in a frame
  double drop_probability{0.0};

  // parameters of the ground-truth collision oracle
  risk::FrictionContext friction;
  risk::RiskParams risk;
  risk::VruPolicy vru;

  geo::GeoFrame geoframe() const;
  void validate() const;
};

struct ActorTruth
{
  int actor_id{0};
  ClassLabel class_label{ClassLabel::other};
  geo::GeoPoint geo;
  // (east, north) m/s on the tangent plane at the geoframe centroid
  Eigen::Vector2d velocity{Eigen::Vector2d::Zero()};
  double speed{0.0};
  // false when the actor is outside the validity region and therefore not detected
  bool visible{true};
};

struct PairTruth
{
  int actor_a{0};
  int actor_b{0};
  double distance{0.0};
  double t_star{0.0};
  double d_min{0.0};
  double probability{0.0};
  bool collision_imminent{false};
};

struct GroundTruthFrame
{
  std::int64_t frame_id{0};
  double t{0.0};
  std::vector<ActorTruth> actors;
  std::vector<PairTruth> pairs;

  bool any_alert() const;
};

struct ScenarioOutput
{
  std::vector<ingest::DetectionEvent> detections;
  std::vector<GroundTruthFrame> truth;
};

/// Renders the script frame by frame: true positions, inverse projection to the pixel ground
/// anchor, seeded Gaussian anchor noise, and oracle labels for every visible pair.
ScenarioOutput run_scenario(const ScenarioScript & script);

struct OracleResult
{
  double t_star{0.0};
  double d_min{0.0};
  double probability{0.0};
  bool alert{false};
};

/// Time-stepped (1 ms) constant-velocity rollout over the horizon; scores the minimum
/// separation with the braking-distance model.
OracleResult brute_force_oracle(
  const Eigen::Vector2d & p_a, const Eigen::Vector2d & v_a, ClassLabel class_a,
  const Eigen::Vector2d & p_b, const Eigen::Vector2d & v_b, ClassLabel class_b,
  double distance_now, const risk::FrictionContext & friction, const risk::RiskParams & params,
  const risk::VruPolicy & vru, double step_s = 1e-3);

void write_ground_truth(std::ostream & out, std::span<const GroundTruthFrame> truth);

std::string script_to_json(const ScenarioScript & script);
/// Throws ingest::ConfigError naming the offending field.
ScenarioScript script_from_json(std::string_view text);

/// Pipeline configuration matching a script's camera (geoframe, distortion, oracle params).
ingest::PipelineConfig config_for(const ScenarioScript & script);

// Reference scene: a 1280x720 camera looking north over an 80 m x 40 m patch of road.
// Local frame is (east, north) meters around the reference origin.
inline constexpr double kReferenceEpoch = 1700000000.0;
geo::GeoPoint reference_origin();
std::vector<geo::Correspondence> reference_correspondences();
geo::GeoPoint reference_point(double east_m, double north_m);

/// Two static pedestrians exactly 8.000 m apart (great-circle) across a crosswalk.
ScenarioScript crosswalk_fixture(double pixel_noise_sigma = 0.0, std::uint64_t seed = 7);

/// (a) head-on car vs pedestrian, (b) car decelerating to a stop near a pedestrian,
/// (c) fast car on a crossing path, (d) parallel non-crossing paths.
std::vector<ScenarioScript> collision_fixtures();

/// n actors on random straight paths, for load and latency measurements.
ScenarioScript busy_scene_fixture(int actors = 30, std::uint64_t seed = 11, double duration_s = 10.0);

/// Single frame with 66 pedestrians (confidence 0.85) and 10 low-confidence distractors.
ScenarioScript pedestrian_count_fixture();

/// Named fixture lookup for the CLI: crosswalk, collision-a..d, busy, pedestrians.
ScenarioScript fixture_by_name(std::string_view name, std::uint64_t seed);

}  // namespace kerbwatch::sim

#endif  // KERBWATCH__SIM_HPP_
