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

#ifndef KERBWATCH__RISK_HPP_
#define KERBWATCH__RISK_HPP_

#include <Eigen/Core>

#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kerbwatch/geo.hpp"
#include "kerbwatch/track.hpp"

namespace kerbwatch::risk
{

using ingest::ClassLabel;
using track::TrackId;

/// Tyre-road friction and gravity for the uniform-deceleration stopping model.
struct FrictionContext
{
  double mu{0.6};
  double g{9.8};

  void validate() const;
};

/// Classes assumed able to stop instantly.
struct VruPolicy
{
  std::set<ClassLabel> vru_classes{ClassLabel::person, ClassLabel::bicycle};
  bool instant_stop{true};

  bool is_vru(ClassLabel c) const { return vru_classes.contains(c); }
};

struct RiskParams
{
  double margin_m{2.0};
  double horizon_s{5.0};
  double alert_threshold{0.5};

  void validate() const;
};

/// d = v^2 / (2 mu g). Throws DomainError for negative or non-finite v.
double braking_distance(double v, const FrictionContext & ctx);

struct ClosestApproach
{
  double t_star{0.0};
  double d_min{0.0};
};

/// Constant-velocity closest approach of a relative state within [0, horizon].
ClosestApproach closest_approach(
  const Eigen::Vector2d & p_rel, const Eigen::Vector2d & v_rel, double horizon);

/// geometric x urgency, where geometric = max(0, 1 - d_min / margin) and
/// urgency = min(1, braking / max(distance_now, 0.1)).
double collision_probability(double d_min, double distance_now, double braking, double margin);

struct PairAssessment
{
  TrackId track_a{0};
  TrackId track_b{0};
  ClassLabel class_a{ClassLabel::other};
  ClassLabel class_b{ClassLabel::other};
  bool cross_class{false};
  double distance_now{0.0};
  double t_star{0.0};
  double d_min{0.0};
  double braking_distance{0.0};
  double probability{0.0};
  bool alert{false};
};

enum class SkipReason { outside_region, insufficient_history };

struct SkippedPair
{
  TrackId track_a{0};
  TrackId track_b{0};
  SkipReason reason{SkipReason::outside_region};
};

using PairResult = std::variant<PairAssessment, SkippedPair>;

/// Scores one pair. The result is ordered so that track_a < track_b and is independent of
/// argument order.
PairResult assess_pair(
  const track::Track & a, const track::Track & b, const geo::LocalTangentPlane & plane,
  const FrictionContext & ctx, const VruPolicy & policy, const RiskParams & params);

/// All pairs among tracks observed in the current frame (misses == 0), ordered by
/// (track_a, track_b).
std::vector<PairResult> assess_all(
  std::span<const track::Track> tracks, const geo::LocalTangentPlane & plane,
  const FrictionContext & ctx, const VruPolicy & policy, const RiskParams & params);

struct PairAnnotation
{
  TrackId track_a{0};
  TrackId track_b{0};
  std::string channel;
  double intensity{0.0};
};

struct ObjectAnnotation
{
  TrackId track_id{0};
  std::string label;
  std::string channel;
};

struct Annotations
{
  std::vector<PairAnnotation> pairs;
  std::vector<ObjectAnnotation> objects;
};

/// Renderer-agnostic overlay metadata: cross-class links red with intensity = probability,
/// same-class links blue, per-object speed labels green.
Annotations annotate(
  std::span<const PairAssessment> assessments, std::span<const track::Track> tracks = {});

std::string speed_label(double speed);

}  // namespace kerbwatch::risk

#endif  // KERBWATCH__RISK_HPP_
