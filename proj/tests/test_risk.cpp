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

#include <cmath>
#include <random>
#include <stdexcept>
#include <variant>

#include "kerbwatch/error.hpp"
#include "kerbwatch/risk.hpp"

namespace
{
using namespace kerbwatch;
using namespace kerbwatch::risk;
using ingest::ClassLabel;

const geo::GeoPoint kOrigin{40.6405, -8.6538};

track::Track moving(
  track::TrackId id, ClassLabel c, const geo::LocalTangentPlane & plane, Eigen::Vector2d at,
  Eigen::Vector2d velocity)
{
  track::Track t;
  t.track_id = id;
  t.class_label = c;
  t.history.push_back({0.9, plane.to_geo(at - 0.1 * velocity), {}});
  t.history.push_back({1.0, plane.to_geo(at), {}});
  t.velocity = velocity;
  t.speed = velocity.norm();
  t.velocity_samples = 2;
  return t;
}

PairAssessment assessed(const PairResult & r)
{
  const auto * a = std::get_if<PairAssessment>(&r);
  if (a == nullptr) {
    throw std::runtime_error("pair was skipped");
  }
  return *a;
}

// Time-stepped minimum separation under constant velocity.
std::pair<double, double> stepped_cpa(Eigen::Vector2d p, Eigen::Vector2d v, double horizon)
{
  double best_t = 0.0;
  double best_d = p.norm();
  const int steps = static_cast<int>(std::lround(horizon / 1e-3));
  for (int k = 1; k <= steps; ++k) {
    const double t = k * 1e-3;
    const double d = (p + t * v).norm();
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  return {best_t, best_d};
}

TEST(BrakingDistance, DirectEvaluation)
{
  const FrictionContext ctx;
  EXPECT_EQ(braking_distance(0.0, ctx), 0.0);
  EXPECT_NEAR(braking_distance(10.0, ctx), 8.5034, 1e-4);
  EXPECT_NEAR(braking_distance(13.89, ctx), 16.406, 1e-3);
  for (double v : {0.0, 5.0, 10.0, 13.89, 30.0}) {
    const double want = v * v / (2.0 * 0.6 * 9.8);
    EXPECT_NEAR(braking_distance(v, ctx), want, 1e-9 * std::max(want, 1.0));
  }
}

TEST(BrakingDistance, QuadraticScaling)
{
  const FrictionContext ctx;
  for (double v : {0.5, 5.0, 10.0, 13.89, 30.0}) {
    EXPECT_EQ(braking_distance(2.0 * v, ctx), 4.0 * braking_distance(v, ctx));
    EXPECT_GT(braking_distance(v * 1.01, ctx), braking_distance(v, ctx));
  }
}

TEST(BrakingDistance, DomainChecks)
{
  const FrictionContext ctx;
  EXPECT_THROW(braking_distance(-1.0, ctx), DomainError);
  EXPECT_THROW(braking_distance(std::nan(""), ctx), DomainError);
  FrictionContext bad;
  bad.mu = 0.0;
  EXPECT_THROW(bad.validate(), InvariantViolation);
  bad.mu = 0.6;
  bad.g = 12.0;
  EXPECT_THROW(bad.validate(), InvariantViolation);
}

TEST(ClosestApproach, ClosedFormCases)
{
  auto c = closest_approach({20.0, 0.0}, {-10.0, 0.0}, 5.0);
  EXPECT_NEAR(c.t_star, 2.0, 1e-12);
  EXPECT_NEAR(c.d_min, 0.0, 1e-12);
  c = closest_approach({0.0, 10.0}, {5.0, 0.0}, 5.0);
  EXPECT_EQ(c.t_star, 0.0);
  EXPECT_NEAR(c.d_min, 10.0, 1e-12);
  c = closest_approach({3.0, 4.0}, {0.0, 0.0}, 5.0);
  EXPECT_EQ(c.t_star, 0.0);
  EXPECT_NEAR(c.d_min, 5.0, 1e-12);
  c = closest_approach({100.0, 0.0}, {-10.0, 0.0}, 5.0);
  EXPECT_EQ(c.t_star, 5.0);
  EXPECT_NEAR(c.d_min, 50.0, 1e-12);
}

TEST(ClosestApproach, MatchesSteppedOracle)
{
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> p(-50.0, 50.0);
  std::uniform_real_distribution<double> v(-20.0, 20.0);
  int checked = 0;
  while (checked < 1000) {
    const Eigen::Vector2d pr(p(rng), p(rng));
    const Eigen::Vector2d vr(v(rng), v(rng));
    if (vr.norm() < 0.5) {
      continue;
    }
    const auto c = closest_approach(pr, vr, 5.0);
    const auto [t, d] = stepped_cpa(pr, vr, 5.0);
    EXPECT_NEAR(c.t_star, t, 1e-3);
    EXPECT_NEAR(c.d_min, d, 1e-3);
    ++checked;
  }
}

TEST(ClosestApproach, TimeScalesInverselyWithSpeed)
{
  const Eigen::Vector2d pr(30.0, 4.0);
  const Eigen::Vector2d vr(-10.0, 1.0);
  const auto base = closest_approach(pr, vr, 100.0);
  for (double k : {0.5, 2.0, 3.0}) {
    const auto c = closest_approach(pr, k * vr, 100.0);
    EXPECT_NEAR(c.t_star, base.t_star / k, 1e-12);
    EXPECT_NEAR(c.d_min, base.d_min, 1e-9);
  }
}

TEST(CollisionProbability, BoundedAndZeroBeyondMargin)
{
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  std::uniform_real_distribution<double> far(0.0, 100.0);
  std::uniform_real_distribution<double> br(0.0, 80.0);
  for (int i = 0; i < 10000; ++i) {
    const double dmin = d(rng);
    const double p = collision_probability(dmin, far(rng), br(rng), 2.0);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    if (dmin >= 2.0) {
      EXPECT_EQ(p, 0.0);
    }
  }
}

TEST(CollisionProbability, MonotoneInBraking)
{
  double prev = 0.0;
  for (double v = 0.0; v <= 30.0; v += 0.5) {
    const double p = collision_probability(0.5, 40.0, braking_distance(v, {}), 2.0);
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(AssessPair, CarHeadingAtStaticPedestrian)
{
  const geo::LocalTangentPlane plane(kOrigin);
  const auto ped = moving(1, ClassLabel::person, plane, {0.0, 0.0}, {0.0, 0.0});
  const auto car = moving(2, ClassLabel::car, plane, {-5.0, 0.0}, {10.0, 0.0});
  const auto a = assessed(assess_pair(ped, car, plane, {}, {}, {}));
  EXPECT_NEAR(a.braking_distance, 8.5034, 1e-4);
  EXPECT_NEAR(a.distance_now, 5.0, 1e-3);
  EXPECT_NEAR(a.t_star, 0.5, 1e-3);
  EXPECT_NEAR(a.d_min, 0.0, 1e-3);
  EXPECT_NEAR(a.probability, 1.0, 1e-3);
  EXPECT_TRUE(a.alert);
  EXPECT_TRUE(a.cross_class);
}

TEST(AssessPair, TwoPedestriansNeverAlert)
{
  const geo::LocalTangentPlane plane(kOrigin);
  const auto a = moving(1, ClassLabel::person, plane, {0.0, 0.0}, {1.5, 0.0});
  const auto b = moving(2, ClassLabel::person, plane, {2.0, 0.0}, {-1.5, 0.0});
  const auto r = assessed(assess_pair(a, b, plane, {}, {}, {}));
  EXPECT_EQ(r.probability, 0.0);
  EXPECT_FALSE(r.alert);
}

TEST(AssessPair, ParallelPathsBeyondMargin)
{
  const geo::LocalTangentPlane plane(kOrigin);
  const auto car = moving(1, ClassLabel::car, plane, {0.0, 0.0}, {10.0, 0.0});
  const auto ped = moving(2, ClassLabel::person, plane, {100.0, 6.0}, {1.0, 0.0});
  const auto r = assessed(assess_pair(car, ped, plane, {}, {}, {}));
  EXPECT_GE(r.d_min, 2.0);
  EXPECT_EQ(r.probability, 0.0);
  EXPECT_FALSE(r.alert);
}

TEST(AssessPair, OrderInvariant)
{
  const geo::LocalTangentPlane plane(kOrigin);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> p(-30.0, 30.0);
  std::uniform_real_distribution<double> v(-12.0, 12.0);
  for (int i = 0; i < 200; ++i) {
    const auto a = moving(3, ClassLabel::car, plane, {p(rng), p(rng)}, {v(rng), v(rng)});
    const auto b = moving(9, ClassLabel::bicycle, plane, {p(rng), p(rng)}, {v(rng), v(rng)});
    const auto x = assessed(assess_pair(a, b, plane, {}, {}, {}));
    const auto y = assessed(assess_pair(b, a, plane, {}, {}, {}));
    EXPECT_EQ(x.track_a, y.track_a);
    EXPECT_EQ(x.distance_now, y.distance_now);
    EXPECT_EQ(x.t_star, y.t_star);
    EXPECT_EQ(x.d_min, y.d_min);
    EXPECT_EQ(x.probability, y.probability);
    EXPECT_EQ(x.alert, y.alert);
  }
}

TEST(AssessPair, VehiclePairUsesFasterVehicle)
{
  const geo::LocalTangentPlane plane(kOrigin);
  const auto a = moving(1, ClassLabel::car, plane, {0.0, 0.0}, {4.0, 0.0});
  const auto b = moving(2, ClassLabel::truck, plane, {30.0, 0.0}, {-12.0, 0.0});
  const auto r = assessed(assess_pair(a, b, plane, {}, {}, {}));
  EXPECT_NEAR(r.braking_distance, braking_distance(12.0, {}), 1e-9);
}

TEST(AssessPair, SkipsWithoutHistoryOrRegion)
{
  const geo::LocalTangentPlane plane(kOrigin);
  auto a = moving(1, ClassLabel::car, plane, {0.0, 0.0}, {4.0, 0.0});
  auto b = moving(2, ClassLabel::person, plane, {3.0, 0.0}, {0.0, 0.0});
  b.history.pop_front();
  auto r = assess_pair(a, b, plane, {}, {}, {});
  ASSERT_TRUE(std::holds_alternative<SkippedPair>(r));
  EXPECT_EQ(std::get<SkippedPair>(r).reason, SkipReason::insufficient_history);
  a.in_region = false;
  r = assess_pair(a, b, plane, {}, {}, {});
  EXPECT_EQ(std::get<SkippedPair>(r).reason, SkipReason::outside_region);
}

TEST(AssessAll, OnlyCurrentTracksInIdOrder)
{
  const geo::LocalTangentPlane plane(kOrigin);
  std::vector<track::Track> tracks{
    moving(5, ClassLabel::car, plane, {0.0, 0.0}, {1.0, 0.0}),
    moving(2, ClassLabel::person, plane, {5.0, 0.0}, {0.0, 0.0}),
    moving(7, ClassLabel::person, plane, {9.0, 0.0}, {0.0, 0.0})};
  tracks[2].misses = 1;
  const auto all = assess_all(tracks, plane, {}, {}, {});
  ASSERT_EQ(all.size(), 1u);
  const auto a = assessed(all[0]);
  EXPECT_EQ(a.track_a, 2);
  EXPECT_EQ(a.track_b, 5);
}

TEST(Annotate, ChannelsAndLabels)
{
  PairAssessment cross;
  cross.track_a = 1;
  cross.track_b = 2;
  cross.cross_class = true;
  cross.probability = 0.9;
  PairAssessment same;
  same.track_a = 1;
  same.track_b = 3;
  same.probability = 0.0;
  const geo::LocalTangentPlane plane(kOrigin);
  std::vector<track::Track> tracks{moving(1, ClassLabel::car, plane, {0, 0}, {3.2, 0.0})};
  const std::vector<PairAssessment> pairs{cross, same};
  const Annotations ann = annotate(pairs, tracks);
  ASSERT_EQ(ann.pairs.size(), 2u);
  EXPECT_EQ(ann.pairs[0].channel, "red");
  EXPECT_DOUBLE_EQ(ann.pairs[0].intensity, 0.9);
  EXPECT_EQ(ann.pairs[1].channel, "blue");
  EXPECT_EQ(ann.pairs[1].intensity, 0.0);
  ASSERT_EQ(ann.objects.size(), 1u);
  EXPECT_EQ(ann.objects[0].label, "3.2 m/s");
  EXPECT_EQ(ann.objects[0].channel, "green");
  EXPECT_EQ(speed_label(3.2), "3.2 m/s");
}

}  // namespace
