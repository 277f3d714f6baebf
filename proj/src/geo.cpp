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

#include "kerbwatch/geo.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace kerbwatch::geo
{
namespace
{
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

constexpr int kMaxUndistortIterations = 20;
constexpr double kUndistortTolerance = 1e-9;
constexpr double kHorizonEpsilon = 1e-12;
constexpr double kInterpolationToleranceDeg = 1e-9;
constexpr double kRegionToleranceP = 1e-9;

double cross(PixelPoint o, PixelPoint a, PixelPoint b)
{
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

bool nearly_collinear(PixelPoint a, PixelPoint b, PixelPoint c)
{
  const double ab = std::hypot(b.u - a.u, b.v - a.v);
  const double ac = std::hypot(c.u - a.u, c.v - a.v);
  const double bc = std::hypot(c.u - b.u, c.v - b.v);
  const double longest = std::max({ab, ac, bc});
  if (longest == 0.0) {
    return true;
  }
  // |cross| is twice the triangle area; compare the height over the longest side.
  return std::abs(cross(a, b, c)) / longest <= 1e-9 * longest;
}

std::vector<PixelPoint> convex_hull(std::array<PixelPoint, 4> pts)
{
  std::sort(pts.begin(), pts.end(), [](const PixelPoint & a, const PixelPoint & b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) {
      --k;
    }
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) {
      --k;
    }
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

// Similarity transform taking the points to zero centroid and mean distance sqrt(2).
template <typename Points>
Eigen::Matrix3d hartley_transform(const Points & pts)
{
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto & p : pts) {
    mean += p;
  }
  mean /= static_cast<double>(pts.size());
  double spread = 0.0;
  for (const auto & p : pts) {
    spread += (p - mean).norm();
  }
  spread /= static_cast<double>(pts.size());
  if (!(spread > 0.0)) {
    throw DegenerateConfiguration("calibration points coincide");
  }
  const double s = std::sqrt(2.0) / spread;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d apply(const Eigen::Matrix3d & h, const Eigen::Vector2d & p)
{
  const Eigen::Vector3d q = h * p.homogeneous();
  if (std::abs(q.z()) < kHorizonEpsilon) {
    throw HorizonSingularity("point maps onto the horizon line (|w| < 1e-12)");
  }
  return q.hnormalized();
}

}  // namespace

void validate(const GeoPoint & p)
{
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
      p.lon < -180.0 || p.lon > 180.0)
  {
    throw InvariantViolation(
      "GeoPoint out of range: lat=" + std::to_string(p.lat) + " lon=" + std::to_string(p.lon));
  }
}

void BoundingBox::validate() const
{
  if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) ||
      !std::isfinite(y_max))
  {
    throw InvariantViolation("BoundingBox has non-finite coordinates");
  }
  if (!(x_min < x_max)) {
    throw InvariantViolation("BoundingBox requires x_min < x_max");
  }
  if (!(y_min < y_max)) {
    throw InvariantViolation("BoundingBox requires y_min < y_max");
  }
}

void DistortionModel::validate() const
{
  for (double c : {fx, fy, cx, cy, k1, k2, k3, p1, p2}) {
    if (!std::isfinite(c)) {
      throw InvariantViolation("DistortionModel coefficients must be finite");
    }
  }
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvariantViolation("DistortionModel requires fx > 0 and fy > 0");
  }
}

bool DistortionModel::has_distortion() const
{
  return k1 != 0.0 || k2 != 0.0 || k3 != 0.0 || p1 != 0.0 || p2 != 0.0;
}

PixelPoint distort_point(PixelPoint p, const DistortionModel & m)
{
  if (!m.has_distortion()) {
    return p;
  }
  const double x = (p.u - m.cx) / m.fx;
  const double y = (p.v - m.cy) / m.fy;
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (m.k1 + r2 * (m.k2 + r2 * m.k3));
  const double xd = x * radial + 2.0 * m.p1 * x * y + m.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + m.p1 * (r2 + 2.0 * y * y) + 2.0 * m.p2 * x * y;
  return {xd * m.fx + m.cx, yd * m.fy + m.cy};
}

PixelPoint undistort_point(PixelPoint p, const DistortionModel & m)
{
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
    throw InvariantViolation("PixelPoint must be finite");
  }
  if (!m.has_distortion()) {
    return p;
  }
  const double xd = (p.u - m.cx) / m.fx;
  const double yd = (p.v - m.cy) / m.fy;
  double x = xd;
  double y = yd;
  for (int i = 0; i < kMaxUndistortIterations; ++i) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (m.k1 + r2 * (m.k2 + r2 * m.k3));
    const double dx = 2.0 * m.p1 * x * y + m.p2 * (r2 + 2.0 * x * x);
    const double dy = m.p1 * (r2 + 2.0 * y * y) + 2.0 * m.p2 * x * y;
    const double xn = (xd - dx) / radial;
    const double yn = (yd - dy) / radial;
    if (!std::isfinite(xn) || !std::isfinite(yn)) {
      break;
    }
    const double step = std::max(std::abs(xn - x), std::abs(yn - y));
    x = xn;
    y = yn;
    if (step < kUndistortTolerance) {
      return {x * m.fx + m.cx, y * m.fy + m.cy};
    }
  }
  throw CorrectionFailed(
    "distortion inversion did not converge in 20 iterations", {x * m.fx + m.cx, y * m.fy + m.cy});
}

GeoFrame GeoFrame::solve(std::span<const Correspondence> correspondences)
{
  if (correspondences.size() != 4) {
    throw InvariantViolation(
      "a geoframe needs exactly 4 correspondences, got " +
      std::to_string(correspondences.size()));
  }
  for (const auto & c : correspondences) {
    if (!std::isfinite(c.pixel.u) || !std::isfinite(c.pixel.v)) {
      throw InvariantViolation("calibration pixel must be finite");
    }
    validate(c.geo);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      for (std::size_t k = j + 1; k < 4; ++k) {
        if (nearly_collinear(
              correspondences[i].pixel, correspondences[j].pixel, correspondences[k].pixel))
        {
          throw DegenerateConfiguration(
            "calibration pixels " + std::to_string(i) + ", " + std::to_string(j) + ", " +
            std::to_string(k) + " are collinear");
        }
      }
    }
  }

  std::array<Eigen::Vector2d, 4> src;
  std::array<Eigen::Vector2d, 4> dst;
  for (std::size_t i = 0; i < 4; ++i) {
    src[i] = {correspondences[i].pixel.u, correspondences[i].pixel.v};
    dst[i] = {correspondences[i].geo.lat, correspondences[i].geo.lon};
  }
  const Eigen::Matrix3d t_src = hartley_transform(src);
  const Eigen::Matrix3d t_dst = hartley_transform(dst);

  Eigen::Matrix<double, 8, 9> a;
  for (std::size_t i = 0; i < 4; ++i) {
    const Eigen::Vector2d s = (t_src * src[i].homogeneous()).hnormalized();
    const Eigen::Vector2d d = (t_dst * dst[i].homogeneous()).hnormalized();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -s.x(), -s.y(), -1.0, 0.0, 0.0, 0.0, d.x() * s.x(), d.x() * s.y(), d.x();
    a.row(r + 1) << 0.0, 0.0, 0.0, -s.x(), -s.y(), -1.0, d.y() * s.x(), d.y() * s.y(), d.y();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const auto & sv = svd.singularValues();
  if (!(sv(7) > 1e-12 * sv(0))) {
    throw SingularSystem("DLT system is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> nullspace = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << nullspace(0), nullspace(1), nullspace(2), nullspace(3), nullspace(4), nullspace(5),
    nullspace(6), nullspace(7), nullspace(8);
  if (std::abs(hn(2, 2)) < 1e-12) {
    throw SingularSystem("normalized homography has a vanishing (2,2) entry");
  }
  hn /= hn(2, 2);
  // The 1e-12 determinant floor applies in conditioned coordinates; in raw degrees-per-pixel
  // units a perfectly healthy camera can have |det| well below it.
  if (!(std::abs(hn.determinant()) > 1e-12)) {
    throw SingularSystem("homography is not invertible");
  }

  GeoFrame frame;
  frame.h_ = t_dst.inverse() * hn * t_src;
  if (std::abs(frame.h_(2, 2)) < 1e-12) {
    throw SingularSystem("homography has a vanishing (2,2) entry");
  }
  frame.h_ /= frame.h_(2, 2);
  frame.h_inv_ = frame.h_.inverse();
  if (!frame.h_inv_.allFinite()) {
    throw SingularSystem("homography is not invertible");
  }
  std::array<PixelPoint, 4> pixels;
  for (std::size_t i = 0; i < 4; ++i) {
    frame.correspondences_[i] = correspondences[i];
    pixels[i] = correspondences[i].pixel;
  }
  frame.region_ = convex_hull(pixels);

  for (const auto & c : frame.correspondences_) {
    const GeoPoint g = frame.project(c.pixel);
    if (std::abs(g.lat - c.geo.lat) > kInterpolationToleranceDeg ||
        std::abs(g.lon - c.geo.lon) > kInterpolationToleranceDeg)
    {
      throw SingularSystem("homography does not reproduce its correspondences to 1e-9 deg");
    }
  }
  return frame;
}

bool GeoFrame::contains(PixelPoint p) const
{
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
    return false;
  }
  const std::size_t n = region_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PixelPoint & a = region_[i];
    const PixelPoint & b = region_[(i + 1) % n];
    const double edge = std::hypot(b.u - a.u, b.v - a.v);
    if (cross(a, b, p) < -kRegionToleranceP * edge) {
      return false;
    }
  }
  return true;
}

GeoPoint GeoFrame::project(PixelPoint p) const
{
  const Eigen::Vector2d g = apply(h_, {p.u, p.v});
  return {g.x(), g.y()};
}

PixelPoint GeoFrame::unproject(GeoPoint g) const
{
  const Eigen::Vector2d p = apply(h_inv_, {g.lat, g.lon});
  return {p.x(), p.y()};
}

GeoPoint GeoFrame::centroid() const
{
  GeoPoint c;
  for (const auto & k : correspondences_) {
    c.lat += k.geo.lat;
    c.lon += k.geo.lon;
  }
  c.lat /= 4.0;
  c.lon /= 4.0;
  return c;
}

std::optional<GeoPoint> pixel_to_geo(const GeoFrame & frame, PixelPoint p)
{
  if (!frame.contains(p)) {
    return std::nullopt;
  }
  return frame.project(p);
}

PixelPoint ground_anchor(const BoundingBox & box)
{
  box.validate();
  return {(box.x_min + box.x_max) / 2.0, box.y_max};
}

double haversine(GeoPoint a, GeoPoint b)
{
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double s_dphi = std::sin((phi2 - phi1) / 2.0);
  const double s_dlambda = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
  const double h = s_dphi * s_dphi + std::cos(phi1) * std::cos(phi2) * s_dlambda * s_dlambda;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint destination(GeoPoint origin, double bearing_deg, double distance_m)
{
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double phi1 = origin.lat * kDegToRad;
  const double lambda1 = origin.lon * kDegToRad;
  const double sin_phi2 =
    std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 = lambda1 + std::atan2(
                                     std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                     std::cos(delta) - std::sin(phi1) * sin_phi2);
  double lon = lambda2 * kRadToDeg;
  lon = std::remainder(lon, 360.0);
  return {phi2 * kRadToDeg, lon};
}

LocalTangentPlane::LocalTangentPlane(GeoPoint origin)
: origin_(origin), meters_per_rad_lon_(kEarthRadiusM * std::cos(origin.lat * kDegToRad))
{
  validate(origin);
}

Eigen::Vector2d LocalTangentPlane::to_local(GeoPoint g) const
{
  const double dlon = std::remainder(g.lon - origin_.lon, 360.0);
  return {dlon * kDegToRad * meters_per_rad_lon_, (g.lat - origin_.lat) * kDegToRad * kEarthRadiusM};
}

GeoPoint LocalTangentPlane::to_geo(const Eigen::Vector2d & local) const
{
  return {
    origin_.lat + local.y() / kEarthRadiusM * kRadToDeg,
    origin_.lon + local.x() / meters_per_rad_lon_ * kRadToDeg};
}

}  // namespace kerbwatch::geo
