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

#ifndef KERBWATCH__METRICS_HPP_
#define KERBWATCH__METRICS_HPP_

#include <cstddef>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/geo.hpp"

namespace kerbwatch::metrics
{

/// Time-ordered samples restricted to [t_now - duration, t_now]. The running sum is
/// compensated (Neumaier) so long-lived windows keep their mean exact to rounding.
class RollingWindow
{
public:
  explicit RollingWindow(double duration_s);

  void push(double t, double value);
  void evict(double t_now);

  double duration() const { return duration_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::optional<double> mean() const;
  const std::deque<std::pair<double, double>> & samples() const { return samples_; }

private:
  void add(double x);

  double duration_;
  std::deque<std::pair<double, double>> samples_;
  double sum_{0.0};
  double compensation_{0.0};
};

enum class RiskZone { low_risk, medium_risk, elevated_risk, no_data };

std::string_view to_string(RiskZone z);
RiskZone parse_risk_zone(std::string_view s);

struct RoadState
{
  std::optional<double> ras;
  std::optional<double> rad;
  double t{0.0};
  RiskZone zone{RiskZone::no_data};
};

/// 2D histogram over (RAS, RAD) whose bins are ranked by density.
///
/// A bin is low_risk when the bins strictly denser than it hold less than upper_mass of all
/// samples, elevated_risk when the bins at most as dense as it hold no more than lower_mass,
/// medium_risk otherwise. Queries outside the edges clamp to the border bins.
class ZoneMap
{
public:
  static constexpr std::size_t kMinSamples = 100;

  /// Edges must be strictly increasing with at least two entries each.
  static ZoneMap build(
    std::span<const std::pair<double, double>> samples, std::vector<double> ras_edges,
    std::vector<double> rad_edges, double upper_mass = 0.5, double lower_mass = 0.1);

  /// Equal-width edges spanning the sample range.
  static ZoneMap build_uniform(
    std::span<const std::pair<double, double>> samples, std::size_t ras_bins = 20,
    std::size_t rad_bins = 20, double upper_mass = 0.5, double lower_mass = 0.1);

  RiskZone classify(double ras, double rad) const;
  std::pair<std::size_t, std::size_t> bin_of(double ras, double rad) const;

  std::size_t count(std::size_t ras_bin, std::size_t rad_bin) const;
  std::size_t total() const { return total_; }
  const std::vector<double> & ras_edges() const { return ras_edges_; }
  const std::vector<double> & rad_edges() const { return rad_edges_; }
  /// Bins with count >= low_count are low risk.
  std::size_t low_count() const { return low_count_; }
  /// Bins with count <= elevated_count are elevated risk.
  std::size_t elevated_count() const { return elevated_count_; }

private:
  ZoneMap() = default;

  std::vector<double> ras_edges_;
  std::vector<double> rad_edges_;
  std::vector<std::size_t> counts_;
  std::size_t total_{0};
  std::size_t low_count_{0};
  std::size_t elevated_count_{0};
};

inline RiskZone classify_zone(const ZoneMap & zm, double ras, double rad)
{
  return zm.classify(ras, rad);
}

/// Rolling average speed and rolling average pairwise distance for one camera.
class RoadStateTracker
{
public:
  explicit RoadStateTracker(double window_s = 60.0, std::optional<ZoneMap> zones = std::nullopt);

  /// Without a zone map, non-empty windows are reported as no_data too: there is no reference
  /// density to classify against.
  RoadState update(std::span<const double> speeds, std::span<const double> pair_distances, double t);

  const RollingWindow & speeds() const { return speeds_; }
  const RollingWindow & distances() const { return distances_; }

private:
  RollingWindow speeds_;
  RollingWindow distances_;
  std::optional<ZoneMap> zones_;
};

/// Reads (ras, rad) pairs from a road-state CSV with a header naming ras and rad columns.
/// Rows with an empty ras or rad are skipped.
std::vector<std::pair<double, double>> read_ras_rad_csv(const std::filesystem::path & path);

struct ScoredDetection
{
  geo::BoundingBox bbox;
  ingest::ClassLabel class_label{ingest::ClassLabel::other};
  double confidence{0.0};
};

struct GroundTruthBox
{
  geo::BoundingBox bbox;
  ingest::ClassLabel class_label{ingest::ClassLabel::other};
};

struct LabeledFrame
{
  std::vector<ScoredDetection> detections;
  std::vector<GroundTruthBox> ground_truth;
};

struct EvalCurves
{
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
};

/// Harmonic mean of precision and recall, 0 when both vanish.
double f1_score(double precision, double recall);

/// Per threshold: detections with confidence >= threshold are matched greedily by confidence to
/// the unmatched same-class ground-truth box of highest IoU (>= match_iou). Precision is 0 when
/// nothing is detected. Throws DomainError when there is no ground truth at all.
EvalCurves eval_curves(
  std::span<const LabeledFrame> frames, std::span<const double> thresholds,
  double match_iou = 0.5);

/// Greedy per-class non-maximum suppression: in descending confidence, a detection is dropped
/// when it overlaps an already kept one with IoU > iou_threshold. Returns kept indices in
/// input order.
std::vector<std::size_t> non_max_suppression(
  std::span<const ingest::DetectionEvent> detections, double iou_threshold);

struct CountSurface
{
  std::vector<double> confidence_grid;
  std::vector<double> iou_grid;
  // counts[c][i] for confidence_grid[c], iou_grid[i]
  std::vector<std::vector<std::size_t>> counts;
};

/// Accepted-detection counts over a (confidence, NMS IoU) grid, summed over all batches.
CountSurface threshold_sweep(
  std::span<const ingest::FrameBatch> batches, std::span<const double> confidence_grid,
  std::span<const double> iou_grid);

}  // namespace kerbwatch::metrics

#endif  // KERBWATCH__METRICS_HPP_
