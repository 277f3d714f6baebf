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

#ifndef KERBWATCH__GEO_HPP_
#define KERBWATCH__GEO_HPP_

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "kerbwatch/error.hpp"

namespace kerbwatch::geo
{

/// Mean Earth radius (IUGG) used by every spherical computation.
inline constexpr double kEarthRadiusM = 6371000.0;

struct PixelPoint
{
  double u{0.0};
  double v{0.0};
};

struct GeoPoint
{
  double lat{0.0};
  double lon{0.0};

  bool operator==(const GeoPoint &) const = default;
};

/// Throws InvariantViolation unless lat/lon are finite and in WGS84 range.
void validate(const GeoPoint & p);

struct BoundingBox
{
  double x_min{0.0};
  double y_min{0.0};
  double x_max{0.0};
  double y_max{0.0};

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  /// Throws InvariantViolation unless x_min < x_max and y_min < y_max.
  void validate() const;

  bool operator==(const BoundingBox &) const = default;
};

/// Brown-Conrady intrinsics and lens coefficients, as produced by a chessboard calibration.
struct DistortionModel
{
  double fx{1.0};
  double fy{1.0};
  double cx{0.0};
  double cy{0.0};
  double k1{0.0};
  double k2{0.0};
  double k3{0.0};
  double p1{0.0};
  double p2{0.0};

  void validate() const;
  bool has_distortion() const;
};

class CorrectionFailed : public Error
{
public:
  CorrectionFailed(const std::string & what, PixelPoint last_iterate)
  : Error(what), last_iterate_(last_iterate)
  {
  }
  PixelPoint last_iterate() const { return last_iterate_; }

private:
  PixelPoint last_iterate_;
};

class DegenerateConfiguration : public Error
{
public:
  using Error::Error;
};

class SingularSystem : public Error
{
public:
  using Error::Error;
};

class HorizonSingularity : public Error
{
public:
  using Error::Error;
};

/// Forward lens model: ideal pixel -> observed (distorted) pixel.
PixelPoint distort_point(PixelPoint p, const DistortionModel & m);

/// Inverse lens model by fixed-point iteration (at most 20 steps, 1e-9 normalized tolerance).
/// Throws CorrectionFailed carrying the last iterate if the iteration does not settle.
PixelPoint undistort_point(PixelPoint p, const DistortionModel & m);

struct Correspondence
{
  PixelPoint pixel;
  GeoPoint geo;
};

/// Pixel plane -> (lat, lon) homography built from four ground-plane correspondences.
///
/// The homography maps homogeneous [u, v, 1] to [lat, lon, w] and is normalized so that
/// H(2,2) = 1. Only pixels inside the convex hull of the calibration pixels are
/// georeferenced; everything else is reported as outside the region.
class GeoFrame
{
public:
  /// Direct linear transform on Hartley-normalized coordinates.
  /// Throws DegenerateConfiguration for a collinear pixel triple and SingularSystem when the
  /// linear system or the resulting matrix is numerically singular.
  static GeoFrame solve(std::span<const Correspondence> correspondences);

  const Eigen::Matrix3d & homography() const { return h_; }
  const Eigen::Matrix3d & inverse_homography() const { return h_inv_; }
  const std::array<Correspondence, 4> & correspondences() const { return correspondences_; }

  /// Convex hull of the calibration pixels, counter-clockwise in (u, v).
  const std::vector<PixelPoint> & validity_region() const { return region_; }

  /// Inclusive point-in-convex-polygon test with a 1e-9 px edge tolerance.
  bool contains(PixelPoint p) const;

  /// Projects regardless of the validity region. Throws HorizonSingularity for |w| < 1e-12.
  GeoPoint project(PixelPoint p) const;

  /// Inverse projection (lat, lon) -> pixel. Throws HorizonSingularity for |w| < 1e-12.
  PixelPoint unproject(GeoPoint g) const;

  /// Mean of the four calibration geo points.
  GeoPoint centroid() const;

private:
  GeoFrame() = default;

  Eigen::Matrix3d h_{Eigen::Matrix3d::Identity()};
  Eigen::Matrix3d h_inv_{Eigen::Matrix3d::Identity()};
  std::array<Correspondence, 4> correspondences_{};
  std::vector<PixelPoint> region_;
};

inline GeoFrame solve_geoframe(std::span<const Correspondence> correspondences)
{
  return GeoFrame::solve(correspondences);
}

/// Georeferences a pixel; std::nullopt is the outside-region signal.
std::optional<GeoPoint> pixel_to_geo(const GeoFrame & frame, PixelPoint p);

/// Bottom-center of the box, the point assumed to touch the road plane.
PixelPoint ground_anchor(const BoundingBox & box);

/// Great-circle distance in meters on the sphere of radius kEarthRadiusM.
double haversine(GeoPoint a, GeoPoint b);

/// Point reached travelling distance_m along the great circle with the given initial bearing
/// (degrees clockwise from north).
GeoPoint destination(GeoPoint origin, double bearing_deg, double distance_m);

/// Equirectangular east/north plane around an origin. Used for velocity vectors only;
/// haversine stays the distance authority.
class LocalTangentPlane
{
public:
  LocalTangentPlane() = default;
  explicit LocalTangentPlane(GeoPoint origin);

  GeoPoint origin() const { return origin_; }

  /// (east, north) in meters.
  Eigen::Vector2d to_local(GeoPoint g) const;
  GeoPoint to_geo(const Eigen::Vector2d & local) const;

private:
  GeoPoint origin_{};
  double meters_per_rad_lon_{kEarthRadiusM};
};

}  // namespace kerbwatch::geo

#endif  // KERBWATCH__GEO_HPP_
