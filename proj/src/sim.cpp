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

#include "kerbwatch/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace kerbwatch::sim
{
namespace
{
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using ingest::ConfigError;
using Kind = ConfigError::Kind;

constexpr double kTimeSlack = 1e-5;
constexpr double kFrameSlack = 1e-3;

geo::GeoPoint interpolate(const ActorSpec & a, double t)
{
  const auto & p = a.path;
  if (p.size() == 1 || t <= p.front().t) {
    return p.front().geo;
  }
  if (t >= p.back().t) {
    return p.back().geo;
  }
  const auto it = std::upper_bound(
    p.begin(), p.end(), t, [](double x, const Waypoint & w) { return x < w.t; });
  const Waypoint & hi = *it;
  const Waypoint & lo = *(it - 1);
  const double f = (t - lo.t) / (hi.t - lo.t);
  return {lo.geo.lat + f * (hi.geo.lat - lo.geo.lat), lo.geo.lon + f * (hi.geo.lon - lo.geo.lon)};
}

Eigen::Vector2d segment_velocity(
  const ActorSpec & a, double t, const geo::LocalTangentPlane & plane)
{
  const auto & p = a.path;
  if (p.size() < 2) {
    return Eigen::Vector2d::Zero();
  }
  auto it = std::upper_bound(
    p.begin(), p.end(), t, [](double x, const Waypoint & w) { return x < w.t; });
  if (it == p.begin()) {
    ++it;
  }
  if (it == p.end()) {
    --it;
  }
  const Waypoint & hi = *it;
  const Waypoint & lo = *(it - 1);
  return (plane.to_local(hi.geo) - plane.to_local(lo.geo)) / (hi.t - lo.t);
}

double number_at(const json & obj, const std::string & key, const std::string & path)
{
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(Kind::missing_field, path, "required field is missing");
  }
  if (!it->is_number()) {
    throw ConfigError(Kind::invalid_value, path, "must be a number");
  }
  return it->get<double>();
}

double number_or(const json & obj, const std::string & key, const std::string & path, double d)
{
  return obj.contains(key) ? number_at(obj, key, path) : d;
}

ClassLabel class_at(const json & obj, const std::string & key, const std::string & path)
{
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ConfigError(Kind::missing_field, path, "class label string required");
  }
  try {
    return ingest::parse_class_label(it->get<std::string>());
  } catch (const InvariantViolation & ex) {
    throw ConfigError(Kind::invalid_value, path, ex.what());
  }
}

ActorSpec make_actor(
  ClassLabel c, std::initializer_list<std::pair<double, Eigen::Vector2d>> local_path,
  double w, double h)
{
  ActorSpec a;
  a.class_label = c;
  a.bbox_width = w;
  a.bbox_height = h;
  for (const auto & [t, xy] : local_path) {
    a.path.push_back({kReferenceEpoch + t, reference_point(xy.x(), xy.y())});
  }
  return a;
}

ActorSpec person(std::initializer_list<std::pair<double, Eigen::Vector2d>> path)
{
  return make_actor(ClassLabel::person, path, 30.0, 70.0);
}

ActorSpec car(std::initializer_list<std::pair<double, Eigen::Vector2d>> path)
{
  return make_actor(ClassLabel::car, path, 120.0, 70.0);
}

ScenarioScript reference_script(std::string name)
{
  ScenarioScript s;
  s.name = std::move(name);
  s.camera_id = "cam-sim";
  s.correspondences = reference_correspondences();
  s.frame_rate = 30.0;
  return s;
}

}  // namespace

double ConfidenceModel::for_class(ClassLabel c) const
{
  const auto it = per_class.find(c);
  return it != per_class.end() ? it->second : default_confidence;
}

geo::GeoFrame ScenarioScript::geoframe() const
{
  return geo::solve_geoframe(correspondences);
}

void ScenarioScript::validate() const
{
  if (!(frame_rate > 0.0)) {
    throw InvariantViolation("scenario frame_rate must be positive");
  }
  if (!(pixel_noise_sigma >= 0.0)) {
    throw InvariantViolation("scenario pixel noise sigma must be non-negative");
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw InvariantViolation("scenario drop probability must lie in [0, 1]");
  }
  auto check_conf = [](double c) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw InvariantViolation("scenario confidence must lie in [0, 1]");
    }
  };
  check_conf(confidence.default_confidence);
  for (const auto & [cls, c] : confidence.per_class) {
    check_conf(c);
  }
  if (actors.empty()) {
    throw InvariantViolation("scenario has no actors");
  }
  for (const auto & a : actors) {
    if (a.path.empty()) {
      throw InvariantViolation("actor path needs at least one waypoint");
    }
    if (!(a.bbox_width > 0.0 && a.bbox_height > 0.0)) {
      throw InvariantViolation("actor bbox size must be positive");
    }
    for (std::size_t i = 0; i < a.path.size(); ++i) {
      geo::validate(a.path[i].geo);
      if (i > 0 && !(a.path[i].t > a.path[i - 1].t)) {
        throw InvariantViolation("actor waypoint times must be strictly increasing");
      }
    }
  }
  friction.validate();
  risk.validate();
}

bool GroundTruthFrame::any_alert() const
{
  return std::any_of(
    pairs.begin(), pairs.end(), [](const PairTruth & p) { return p.collision_imminent; });
}

OracleResult brute_force_oracle(
  const Eigen::Vector2d & p_a, const Eigen::Vector2d & v_a, ClassLabel class_a,
  const Eigen::Vector2d & p_b, const Eigen::Vector2d & v_b, ClassLabel class_b,
  double distance_now, const risk::FrictionContext & friction, const risk::RiskParams & params,
  const risk::VruPolicy & vru, double step_s)
{
  OracleResult r;
  r.d_min = (p_b - p_a).norm();
  const auto steps = static_cast<long>(std::llround(params.horizon_s / step_s));
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * step_s;
    const double d = ((p_b + t * v_b) - (p_a + t * v_a)).norm();
    if (d < r.d_min) {
      r.d_min = d;
      r.t_star = t;
    }
  }
  const bool vru_a = vru.is_vru(class_a);
  const bool vru_b = vru.is_vru(class_b);
  if (vru_a && vru_b) {
    return r;
  }
  const double speed_a = v_a.norm();
  const double speed_b = v_b.norm();
  const double vehicle_speed = vru_a ? speed_b : (vru_b ? speed_a : std::max(speed_a, speed_b));
  const double braking = risk::braking_distance(vehicle_speed, friction);
  r.probability = risk::collision_probability(r.d_min, distance_now, braking, params.margin_m);
  r.alert = r.probability >= params.alert_threshold;
  return r;
}

ScenarioOutput run_scenario(const ScenarioScript & script)
{
  script.validate();
  const geo::GeoFrame gf = script.geoframe();
  const geo::LocalTangentPlane plane(gf.centroid());

  double t_start = script.actors.front().path.front().t;
  double t_end = script.actors.front().path.back().t;
  for (const auto & a : script.actors) {
    t_start = std::min(t_start, a.path.front().t);
    t_end = std::max(t_end, a.path.back().t);
  }
  const auto n_frames =
    static_cast<std::int64_t>(std::floor((t_end - t_start) * script.frame_rate + kFrameSlack)) + 1;

  std::mt19937_64 rng(script.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ScenarioOutput out;
  out.truth.reserve(static_cast<std::size_t>(n_frames));
  for (std::int64_t k = 0; k < n_frames; ++k) {
    const double t = t_start + static_cast<double>(k) / script.frame_rate;
    GroundTruthFrame frame;
    frame.frame_id = k;
    frame.t = t;

    for (std::size_t i = 0; i < script.actors.size(); ++i) {
      const ActorSpec & a = script.actors[i];
      if (t < a.path.front().t - kTimeSlack || t > a.path.back().t + kTimeSlack) {
        continue;
      }
      ActorTruth truth;
      truth.actor_id = static_cast<int>(i);
      truth.class_label = a.class_label;
      truth.geo = interpolate(a, t);
      truth.velocity = segment_velocity(a, t, plane);
      truth.speed = truth.velocity.norm();

      geo::PixelPoint pixel;
      try {
        pixel = gf.unproject(truth.geo);
        truth.visible = gf.contains(pixel);
      } catch (const geo::HorizonSingularity &) {
        truth.visible = false;
      }
      frame.actors.push_back(truth);
      if (!truth.visible) {
        continue;
      }

      const double du = normal(rng);
      const double dv = normal(rng);
      const double drop = uniform(rng);
      if (drop < script.drop_probability) {
        continue;
      }
      geo::PixelPoint anchor{
        pixel.u + script.pixel_noise_sigma * du, pixel.v + script.pixel_noise_sigma * dv};
      if (script.distortion) {
        anchor = geo::distort_point(anchor, *script.distortion);
      }
      ingest::DetectionEvent det;
      det.camera_id = script.camera_id;
      det.frame_id = k;
      det.t = t;
      det.bbox = {
        anchor.u - a.bbox_width / 2.0, anchor.v - a.bbox_height, anchor.u + a.bbox_width / 2.0,
        anchor.v};
      det.class_label = a.class_label;
      det.confidence = script.confidence.for_class(a.class_label);
      out.detections.push_back(std::move(det));
    }

    for (std::size_t i = 0; i < frame.actors.size(); ++i) {
      for (std::size_t j = i + 1; j < frame.actors.size(); ++j) {
        const ActorTruth & a = frame.actors[i];
        const ActorTruth & b = frame.actors[j];
        if (!a.visible || !b.visible) {
          continue;
        }
        PairTruth pt;
        pt.actor_a = a.actor_id;
        pt.actor_b = b.actor_id;
        pt.distance = geo::haversine(a.geo, b.geo);
        const OracleResult o = brute_force_oracle(
          plane.to_local(a.geo), a.velocity, a.class_label, plane.to_local(b.geo), b.velocity,
          b.class_label, pt.distance, script.friction, script.risk, script.vru);
        pt.t_star = o.t_star;
        pt.d_min = o.d_min;
        pt.probability = o.probability;
        pt.collision_imminent = o.alert;
        frame.pairs.push_back(pt);
      }
    }
    out.truth.push_back(std::move(frame));
  }
  return out;
}

void write_ground_truth(std::ostream & out, std::span<const GroundTruthFrame> truth)
{
  ordered_json header;
  header["schema"] = "kerbwatch.ground_truth";
  header["version"] = 1;
  out << header.dump() << '\n';
  for (const auto & f : truth) {
    ordered_json j;
    j["frame_id"] = f.frame_id;
    j["t"] = f.t;
    j["actors"] = ordered_json::array();
    for (const auto & a : f.actors) {
      j["actors"].push_back(
        {{"actor_id", a.actor_id},
         {"class", ingest::to_string(a.class_label)},
         {"lat", a.geo.lat},
         {"lon", a.geo.lon},
         {"speed", a.speed},
         {"visible", a.visible}});
    }
    j["pairs"] = ordered_json::array();
    for (const auto & p : f.pairs) {
      j["pairs"].push_back(
        {{"actor_a", p.actor_a},
         {"actor_b", p.actor_b},
         {"distance", p.distance},
         {"t_star", p.t_star},
         {"d_min", p.d_min},
         {"probability", p.probability},
         {"collision_imminent", p.collision_imminent}});
    }
    out << j.dump() << '\n';
  }
}

std::string script_to_json(const ScenarioScript & s)
{
  ordered_json j;
  j["name"] = s.name;
  j["camera_id"] = s.camera_id;
  j["frame_rate"] = s.frame_rate;
  j["pixel_noise_sigma"] = s.pixel_noise_sigma;
  j["seed"] = s.seed;
  j["drop_probability"] = s.drop_probability;
  ordered_json conf;
  conf["default"] = s.confidence.default_confidence;
  conf["per_class"] = ordered_json::object();
  for (const auto & [cls, c] : s.confidence.per_class) {
    conf["per_class"][std::string(ingest::to_string(cls))] = c;
  }
  j["confidence"] = conf;
  j["correspondences"] = ordered_json::array();
  for (const auto & k : s.correspondences) {
    j["correspondences"].push_back(
      {{"u", k.pixel.u}, {"v", k.pixel.v}, {"lat", k.geo.lat}, {"lon", k.geo.lon}});
  }
  if (s.distortion) {
    const auto & d = *s.distortion;
    j["distortion"] = {{"fx", d.fx}, {"fy", d.fy}, {"cx", d.cx}, {"cy", d.cy}, {"k1", d.k1},
                       {"k2", d.k2}, {"k3", d.k3}, {"p1", d.p1}, {"p2", d.p2}};
  }
  j["oracle"] = {
    {"mu", s.friction.mu},
    {"g", s.friction.g},
    {"margin_m", s.risk.margin_m},
    {"horizon_s", s.risk.horizon_s},
    {"alert_threshold", s.risk.alert_threshold}};
  j["actors"] = ordered_json::array();
  for (const auto & a : s.actors) {
    ordered_json actor;
    actor["class"] = ingest::to_string(a.class_label);
    actor["bbox"] = {{"width", a.bbox_width}, {"height", a.bbox_height}};
    actor["path"] = ordered_json::array();
    for (const auto & w : a.path) {
      actor["path"].push_back({{"t", w.t}, {"lat", w.geo.lat}, {"lon", w.geo.lon}});
    }
    j["actors"].push_back(std::move(actor));
  }
  return j.dump(2);
}

ScenarioScript script_from_json(std::string_view text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & ex) {
    throw ConfigError(Kind::invalid_value, "<root>", std::string("not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) {
    throw ConfigError(Kind::invalid_value, "<root>", "must be a JSON object");
  }
  ScenarioScript s;
  s.name = j.value("name", "");
  s.camera_id = j.value("camera_id", "cam-sim");
  s.frame_rate = number_or(j, "frame_rate", "frame_rate", s.frame_rate);
  s.pixel_noise_sigma = number_or(j, "pixel_noise_sigma", "pixel_noise_sigma", 0.0);
  s.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : 0;
  s.drop_probability = number_or(j, "drop_probability", "drop_probability", 0.0);
  if (j.contains("confidence")) {
    const json & c = j["confidence"];
    s.confidence.default_confidence =
      number_or(c, "default", "confidence.default", s.confidence.default_confidence);
    if (c.contains("per_class")) {
      for (const auto & [name, value] : c["per_class"].items()) {
        const std::string path = "confidence.per_class." + name;
        if (!value.is_number()) {
          throw ConfigError(Kind::invalid_value, path, "must be a number");
        }
        try {
          s.confidence.per_class[ingest::parse_class_label(name)] = value.get<double>();
        } catch (const InvariantViolation & ex) {
          throw ConfigError(Kind::invalid_value, path, ex.what());
        }
      }
    }
  }
  if (!j.contains("correspondences") || !j["correspondences"].is_array()) {
    throw ConfigError(Kind::missing_field, "correspondences", "array of 4 entries required");
  }
  const json & corr = j["correspondences"];
  if (corr.size() != 4) {
    throw ConfigError(Kind::invalid_value, "correspondences", "exactly 4 entries required");
  }
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const std::string p = "correspondences[" + std::to_string(i) + "]";
    s.correspondences.push_back(
      {{number_at(corr[i], "u", p + ".u"), number_at(corr[i], "v", p + ".v")},
       {number_at(corr[i], "lat", p + ".lat"), number_at(corr[i], "lon", p + ".lon")}});
  }
  if (j.contains("distortion") && !j["distortion"].is_null()) {
    const json & d = j["distortion"];
    geo::DistortionModel m;
    m.fx = number_at(d, "fx", "distortion.fx");
    m.fy = number_at(d, "fy", "distortion.fy");
    m.cx = number_at(d, "cx", "distortion.cx");
    m.cy = number_at(d, "cy", "distortion.cy");
    m.k1 = number_or(d, "k1", "distortion.k1", 0.0);
    m.k2 = number_or(d, "k2", "distortion.k2", 0.0);
    m.k3 = number_or(d, "k3", "distortion.k3", 0.0);
    m.p1 = number_or(d, "p1", "distortion.p1", 0.0);
    m.p2 = number_or(d, "p2", "distortion.p2", 0.0);
    s.distortion = m;
  }
  if (j.contains("oracle")) {
    const json & o = j["oracle"];
    s.friction.mu = number_or(o, "mu", "oracle.mu", s.friction.mu);
    s.friction.g = number_or(o, "g", "oracle.g", s.friction.g);
    s.risk.margin_m = number_or(o, "margin_m", "oracle.margin_m", s.risk.margin_m);
    s.risk.horizon_s = number_or(o, "horizon_s", "oracle.horizon_s", s.risk.horizon_s);
    s.risk.alert_threshold =
      number_or(o, "alert_threshold", "oracle.alert_threshold", s.risk.alert_threshold);
  }
  if (!j.contains("actors") || !j["actors"].is_array()) {
    throw ConfigError(Kind::missing_field, "actors", "array required");
  }
  for (std::size_t i = 0; i < j["actors"].size(); ++i) {
    const json & a = j["actors"][i];
    const std::string p = "actors[" + std::to_string(i) + "]";
    ActorSpec spec;
    spec.class_label = class_at(a, "class", p + ".class");
    if (a.contains("bbox")) {
      spec.bbox_width = number_at(a["bbox"], "width", p + ".bbox.width");
      spec.bbox_height = number_at(a["bbox"], "height", p + ".bbox.height");
    }
    if (!a.contains("path") || !a["path"].is_array()) {
      throw ConfigError(Kind::missing_field, p + ".path", "array of waypoints required");
    }
    for (std::size_t w = 0; w < a["path"].size(); ++w) {
      const json & wp = a["path"][w];
      const std::string wpath = p + ".path[" + std::to_string(w) + "]";
      spec.path.push_back(
        {number_at(wp, "t", wpath + ".t"),
         {number_at(wp, "lat", wpath + ".lat"), number_at(wp, "lon", wpath + ".lon")}});
    }
    s.actors.push_back(std::move(spec));
  }
  try {
    s.validate();
    (void)s.geoframe();
  } catch (const Error & ex) {
    throw ConfigError(Kind::invariant, "scenario", ex.what());
  }
  return s;
}

ingest::PipelineConfig config_for(const ScenarioScript & script)
{
  ingest::PipelineConfig cfg(script.geoframe());
  cfg.camera_id = script.camera_id;
  cfg.distortion = script.distortion;
  cfg.friction = script.friction;
  cfg.risk = script.risk;
  cfg.vru = script.vru;
  cfg.validate();
  return cfg;
}

geo::GeoPoint reference_origin()
{
  return {40.6405, -8.6538};
}

geo::GeoPoint reference_point(double east_m, double north_m)
{
  return geo::LocalTangentPlane(reference_origin()).to_geo({east_m, north_m});
}

std::vector<geo::Correspondence> reference_correspondences()
{
  return {
    {{40.0, 700.0}, reference_point(-40.0, 0.0)},
    {{1240.0, 700.0}, reference_point(40.0, 0.0)},
    {{980.0, 260.0}, reference_point(40.0, 40.0)},
    {{300.0, 260.0}, reference_point(-40.0, 40.0)},
  };
}

ScenarioScript crosswalk_fixture(double pixel_noise_sigma, std::uint64_t seed)
{
  ScenarioScript s = reference_script("crosswalk");
  s.pixel_noise_sigma = pixel_noise_sigma;
  s.seed = seed;
  const geo::GeoPoint west = reference_point(-4.0, 15.0);
  const geo::GeoPoint east = geo::destination(west, 90.0, 8.0);
  for (const auto & g : {west, east}) {
    ActorSpec marker;
    marker.class_label = ClassLabel::person;
    marker.path = {{kReferenceEpoch, g}, {kReferenceEpoch + 3.0, g}};
    s.actors.push_back(marker);
  }
  return s;
}

std::vector<ScenarioScript> collision_fixtures()
{
  using V = Eigen::Vector2d;
  std::vector<ScenarioScript> out;

  // (a) pedestrian standing in the eastbound lane, car driving straight through at 8 m/s
  {
    ScenarioScript s = reference_script("collision-a");
    s.actors.push_back(person({{0.0, V(0.0, 12.0)}, {9.0, V(0.0, 12.0)}}));
    s.actors.push_back(car({{0.0, V(-36.0, 12.0)}, {9.0, V(36.0, 12.0)}}));
    out.push_back(std::move(s));
  }

  // (b) car at 8 m/s braking at 1.52 m/s^2 to stop 4 m short of a pedestrian, then waiting
  {
    ScenarioScript s = reference_script("collision-b");
    s.actors.push_back(person({{0.0, V(0.0, 12.0)}, {10.0, V(0.0, 12.0)}}));
    ActorSpec c = car({{0.0, V(-36.0, 12.0)}});
    const double v0 = 8.0;
    const double x_brake = -25.0;
    const double x_stop = -4.0;
    const double decel = v0 * v0 / (2.0 * (x_stop - x_brake));
    const double t_brake = (x_brake - (-36.0)) / v0;
    const double t_stop = t_brake + v0 / decel;
    c.path.push_back({kReferenceEpoch + t_brake, reference_point(x_brake, 12.0)});
    for (double t = t_brake + 0.1; t < t_stop - 1e-9; t += 0.1) {
      const double tau = t - t_brake;
      c.path.push_back(
        {kReferenceEpoch + t, reference_point(x_brake + v0 * tau - 0.5 * decel * tau * tau, 12.0)});
    }
    c.path.push_back({kReferenceEpoch + t_stop, reference_point(x_stop, 12.0)});
    c.path.push_back({kReferenceEpoch + 10.0, reference_point(x_stop, 12.0)});
    s.actors.push_back(std::move(c));
    out.push_back(std::move(s));
  }

  // (c) pedestrian crossing north at 1.4 m/s, car at 14 m/s timed to meet it at (0, 12)
  {
    ScenarioScript s = reference_script("collision-c");
    const double t_meet = 6.0 / 1.4;
    s.actors.push_back(person({{0.0, V(0.0, 6.0)}, {18.0 / 1.4, V(0.0, 24.0)}}));
    s.actors.push_back(
      car({{t_meet - 38.0 / 14.0, V(-38.0, 12.0)}, {t_meet + 38.0 / 14.0, V(38.0, 12.0)}}));
    out.push_back(std::move(s));
  }

  // (d) two cars in opposite lanes and a pedestrian on the far sidewalk, all parallel
  {
    ScenarioScript s = reference_script("collision-d");
    s.actors.push_back(car({{0.0, V(-38.0, 12.0)}, {7.6, V(38.0, 12.0)}}));
    s.actors.push_back(car({{0.0, V(38.0, 18.0)}, {76.0 / 12.0, V(-38.0, 18.0)}}));
    s.actors.push_back(person({{0.0, V(-10.0, 22.0)}, {7.6, V(-10.0 + 1.4 * 7.6, 22.0)}}));
    out.push_back(std::move(s));
  }
  return out;
}

ScenarioScript busy_scene_fixture(int actors, std::uint64_t seed, double duration_s)
{
  ScenarioScript s = reference_script("busy");
  s.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-36.0, 36.0);
  std::uniform_real_distribution<double> uy(3.0, 37.0);
  std::uniform_real_distribution<double> step(-8.0, 8.0);
  constexpr std::array<ClassLabel, 6> kMix = {
    ClassLabel::person, ClassLabel::car,  ClassLabel::person,
    ClassLabel::bicycle, ClassLabel::car, ClassLabel::truck};
  for (int i = 0; i < actors; ++i) {
    const ClassLabel c = kMix[static_cast<std::size_t>(i) % kMix.size()];
    const Eigen::Vector2d start(ux(rng), uy(rng));
    Eigen::Vector2d end;
    if (c == ClassLabel::person || c == ClassLabel::bicycle) {
      end = {std::clamp(start.x() + step(rng), -36.0, 36.0),
             std::clamp(start.y() + step(rng), 3.0, 37.0)};
    } else {
      end = {ux(rng), uy(rng)};
    }
    const bool vehicle = c == ClassLabel::car || c == ClassLabel::truck;
    s.actors.push_back(make_actor(
      c, {{0.0, start}, {duration_s, end}}, vehicle ? 120.0 : 30.0, vehicle ? 70.0 : 70.0));
  }
  return s;
}

ScenarioScript pedestrian_count_fixture()
{
  ScenarioScript s = reference_script("pedestrians");
  s.confidence.per_class[ClassLabel::person] = 0.85;
  s.confidence.per_class[ClassLabel::other] = 0.4;
  for (int row = 0; row < 6; ++row) {
    for (int col = 0; col < 11; ++col) {
      const Eigen::Vector2d at(-30.0 + 6.0 * col, 6.0 + 5.0 * row);
      s.actors.push_back(make_actor(ClassLabel::person, {{0.0, at}}, 24.0, 48.0));
    }
  }
  for (int i = 0; i < 10; ++i) {
    const Eigen::Vector2d at(-27.0 + 6.0 * i, 8.5);
    s.actors.push_back(make_actor(ClassLabel::other, {{0.0, at}}, 24.0, 24.0));
  }
  return s;
}

ScenarioScript fixture_by_name(std::string_view name, std::uint64_t seed)
{
  if (name == "crosswalk") {
    return crosswalk_fixture(0.0, seed);
  }
  if (name == "busy") {
    return busy_scene_fixture(30, seed);
  }
  if (name == "pedestrians") {
    auto s = pedestrian_count_fixture();
    s.seed = seed;
    return s;
  }
  for (auto & s : collision_fixtures()) {
    if (s.name == name) {
      s.seed = seed;
      return s;
    }
  }
  throw InvariantViolation("unknown fixture '" + std::string(name) + "'");
}

}  // namespace kerbwatch::sim
