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

#include "kerbwatch/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace kerbwatch::risk
{

void FrictionContext::validate() const
{
  if (!(mu > 0.0 && mu <= 1.5)) {
    throw InvariantViolation("friction coefficient mu must lie in (0, 1.5]");
  }
  if (!(g >= 9.7 && g <= 9.9)) {
    throw InvariantViolation("gravitational acceleration g must lie in [9.7, 9.9]");
  }
}

void RiskParams::validate() const
{
  if (!(margin_m > 0.0)) {
    throw InvariantViolation("risk margin must be positive");
  }
  if (!(horizon_s > 0.0)) {
    throw InvariantViolation("prediction horizon must be positive");
  }
  if (!(alert_threshold >= 0.0 && alert_threshold <= 1.0)) {
    throw InvariantViolation("alert threshold must lie in [0, 1]");
  }
}

double braking_distance(double v, const FrictionContext & ctx)
{
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("braking distance needs a finite, non-negative speed");
  }
  return v * v / (2.0 * ctx.mu * ctx.g);
}

ClosestApproach closest_approach(
  const Eigen::Vector2d & p_rel, const Eigen::Vector2d & v_rel, double horizon)
{
  if (!(horizon > 0.0)) {
    throw DomainError("closest approach horizon must be positive");
  }
  const double vv = v_rel.squaredNorm();
  double t_star = 0.0;
  if (std::sqrt(vv) >= 1e-9) {
    t_star = std::clamp(-p_rel.dot(v_rel) / vv, 0.0, horizon);
  }
  return {t_star, (p_rel + t_star * v_rel).norm()};
}

double collision_probability(double d_min, double distance_now, double braking, double margin)
{
  const double geometric = std::max(0.0, 1.0 - d_min / margin);
  const double urgency = std::min(1.0, braking / std::max(distance_now, 0.1));
  return std::clamp(geometric * urgency, 0.0, 1.0);
}

PairResult assess_pair(
  const track::Track & a_in, const track::Track & b_in, const geo::LocalTangentPlane & plane,
  const FrictionContext & ctx, const VruPolicy & policy, const RiskParams & params)
{
  const bool swap = b_in.track_id < a_in.track_id;
  const track::Track & a = swap ? b_in : a_in;
  const track::Track & b = swap ? a_in : b_in;

  if (!a.in_region || !b.in_region) {
    return SkippedPair{a.track_id, b.track_id, SkipReason::outside_region};
  }
  if (a.history.size() < 2 || b.history.size() < 2) {
    return SkippedPair{a.track_id, b.track_id, SkipReason::insufficient_history};
  }

  PairAssessment out;
  out.track_a = a.track_id;
  out.track_b = b.track_id;
  out.class_a = a.class_label;
  out.class_b = b.class_label;
  out.cross_class = a.class_label != b.class_label;
  out.distance_now = geo::haversine(a.latest().geo, b.latest().geo);

  const Eigen::Vector2d p_rel = plane.to_local(b.latest().geo) - plane.to_local(a.latest().geo);
  const Eigen::Vector2d v_rel = b.velocity - a.velocity;
  const ClosestApproach cpa = closest_approach(p_rel, v_rel, params.horizon_s);
  out.t_star = cpa.t_star;
  out.d_min = cpa.d_min;

  const bool vru_a = policy.is_vru(a.class_label);
  const bool vru_b = policy.is_vru(b.class_label);
  if (vru_a && vru_b && policy.instant_stop) {
    out.braking_distance = 0.0;
    out.probability = 0.0;
  } else {
    double vehicle_speed = 0.0;
    if (vru_a) {
      vehicle_speed = b.speed;
    } else if (vru_b) {
      vehicle_speed = a.speed;
    } else {
      vehicle_speed = std::max(a.speed, b.speed);
    }
    out.braking_distance = braking_distance(vehicle_speed, ctx);
    out.probability =
      collision_probability(out.d_min, out.distance_now, out.braking_distance, params.margin_m);
  }
  out.alert = out.probability >= params.alert_threshold && out.t_star <= params.horizon_s;
  return out;
}

std::vector<PairResult> assess_all(
  std::span<const track::Track> tracks, const geo::LocalTangentPlane & plane,
  const FrictionContext & ctx, const VruPolicy & policy, const RiskParams & params)
{
  std::vector<const track::Track *> live;
  for (const auto & tr : tracks) {
    if (tr.misses == 0) {
      live.push_back(&tr);
    }
  }
  std::sort(live.begin(), live.end(), [](const track::Track * x, const track::Track * y) {
    return x->track_id < y->track_id;
  });
  std::vector<PairResult> out;
  out.reserve(live.size() * (live.size() - (live.empty() ? 0 : 1)) / 2);
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = i + 1; j < live.size(); ++j) {
      out.push_back(assess_pair(*live[i], *live[j], plane, ctx, policy, params));
    }
  }
  return out;
}

std::string speed_label(double speed)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f m/s", speed);
  return buf;
}

Annotations annotate(
  std::span<const PairAssessment> assessments, std::span<const track::Track> tracks)
{
  Annotations out;
  for (const auto & a : assessments) {
    if (a.cross_class) {
      out.pairs.push_back({a.track_a, a.track_b, "red", a.probability});
    } else {
      out.pairs.push_back({a.track_a, a.track_b, "blue", 0.0});
    }
  }
  for (const auto & tr : tracks) {
    out.objects.push_back({tr.track_id, speed_label(tr.speed), "green"});
  }
  return out;
}

}  // namespace kerbwatch::risk
