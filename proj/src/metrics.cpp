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

#include "kerbwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "kerbwatch/track.hpp"

namespace kerbwatch::metrics
{
namespace
{

std::size_t locate(const std::vector<double> & edges, double x)
{
  // edges has n+1 entries for n bins; clamp outside values to the border bins.
  const std::size_t bins = edges.size() - 1;
  if (!(x > edges.front())) {
    return 0;
  }
  if (x >= edges.back()) {
    return bins - 1;
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<std::size_t>(std::distance(edges.begin(), it)) - 1;
}

void check_edges(const std::vector<double> & edges, const char * name)
{
  if (edges.size() < 2) {
    throw InvariantViolation(std::string(name) + " needs at least two edges");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw InvariantViolation(std::string(name) + " must be strictly increasing");
    }
  }
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
  if (!(hi > lo)) {
    hi = lo + 1.0;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

std::vector<std::string> split_csv(const std::string & line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

}  // namespace

RollingWindow::RollingWindow(double duration_s) : duration_(duration_s)
{
  if (!(duration_s > 0.0)) {
    throw InvariantViolation("rolling window duration must be positive");
  }
}

void RollingWindow::add(double x)
{
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

void RollingWindow::push(double t, double value)
{
  if (!samples_.empty() && t < samples_.back().first) {
    throw InvariantViolation("rolling window samples must be time ordered");
  }
  samples_.emplace_back(t, value);
  add(value);
}

void RollingWindow::evict(double t_now)
{
  const double cutoff = t_now - duration_;
  while (!samples_.empty() && samples_.front().first < cutoff) {
    add(-samples_.front().second);
    samples_.pop_front();
  }
  if (samples_.empty()) {
    sum_ = 0.0;
    compensation_ = 0.0;
  }
}

std::optional<double> RollingWindow::mean() const
{
  if (samples_.empty()) {
    return std::nullopt;
  }
  return (sum_ + compensation_) / static_cast<double>(samples_.size());
}

std::string_view to_string(RiskZone z)
{
  switch (z) {
    case RiskZone::low_risk:
      return "low_risk";
    case RiskZone::medium_risk:
      return "medium_risk";
    case RiskZone::elevated_risk:
      return "elevated_risk";
    case RiskZone::no_data:
      break;
  }
  return "no_data";
}

RiskZone parse_risk_zone(std::string_view s)
{
  for (auto z : {RiskZone::low_risk, RiskZone::medium_risk, RiskZone::elevated_risk,
                 RiskZone::no_data})
  {
    if (to_string(z) == s) {
      return z;
    }
  }
  throw InvariantViolation("unknown risk zone '" + std::string(s) + "'");
}

ZoneMap ZoneMap::build(
  std::span<const std::pair<double, double>> samples, std::vector<double> ras_edges,
  std::vector<double> rad_edges, double upper_mass, double lower_mass)
{
  if (samples.size() < kMinSamples) {
    throw DomainError("a zone map needs at least 100 samples");
  }
  if (!(lower_mass >= 0.0 && lower_mass < upper_mass && upper_mass <= 1.0)) {
    throw InvariantViolation("zone mass cut points must satisfy 0 <= lower < upper <= 1");
  }
  check_edges(ras_edges, "RAS edges");
  check_edges(rad_edges, "RAD edges");

  ZoneMap zm;
  zm.ras_edges_ = std::move(ras_edges);
  zm.rad_edges_ = std::move(rad_edges);
  zm.counts_.assign((zm.ras_edges_.size() - 1) * (zm.rad_edges_.size() - 1), 0);
  for (const auto & [ras, rad] : samples) {
    const auto [i, j] = zm.bin_of(ras, rad);
    ++zm.counts_[i * (zm.rad_edges_.size() - 1) + j];
  }
  zm.total_ = samples.size();

  // mass held by bins of each distinct count value
  std::map<std::size_t, std::size_t> mass_by_count;
  for (std::size_t c : zm.counts_) {
    mass_by_count[c] += c;
  }
  const double total = static_cast<double>(zm.total_);

  std::size_t denser = 0;
  zm.low_count_ = mass_by_count.rbegin()->first;
  for (auto it = mass_by_count.rbegin(); it != mass_by_count.rend(); ++it) {
    if (static_cast<double>(denser) < upper_mass * total) {
      zm.low_count_ = it->first;
    }
    denser += it->second;
  }
  std::size_t at_most = 0;
  zm.elevated_count_ = 0;
  for (const auto & [count, mass] : mass_by_count) {
    at_most += mass;
    if (static_cast<double>(at_most) <= lower_mass * total) {
      zm.elevated_count_ = count;
    } else {
      break;
    }
  }
  return zm;
}

ZoneMap ZoneMap::build_uniform(
  std::span<const std::pair<double, double>> samples, std::size_t ras_bins, std::size_t rad_bins,
  double upper_mass, double lower_mass)
{
  if (samples.empty() || ras_bins == 0 || rad_bins == 0) {
    throw DomainError("a zone map needs samples and at least one bin per axis");
  }
  auto [ras_lo, ras_hi] = std::minmax_element(
    samples.begin(), samples.end(), [](const auto & a, const auto & b) { return a.first < b.first; });
  auto [rad_lo, rad_hi] = std::minmax_element(
    samples.begin(), samples.end(),
    [](const auto & a, const auto & b) { return a.second < b.second; });
  return build(
    samples, uniform_edges(ras_lo->first, ras_hi->first, ras_bins),
    uniform_edges(rad_lo->second, rad_hi->second, rad_bins), upper_mass, lower_mass);
}

std::pair<std::size_t, std::size_t> ZoneMap::bin_of(double ras, double rad) const
{
  return {locate(ras_edges_, ras), locate(rad_edges_, rad)};
}

std::size_t ZoneMap::count(std::size_t ras_bin, std::size_t rad_bin) const
{
  return counts_.at(ras_bin * (rad_edges_.size() - 1) + rad_bin);
}

RiskZone ZoneMap::classify(double ras, double rad) const
{
  if (std::isnan(ras) || std::isnan(rad)) {
    return RiskZone::no_data;
  }
  const auto [i, j] = bin_of(ras, rad);
  const std::size_t c = count(i, j);
  if (c >= low_count_) {
    return RiskZone::low_risk;
  }
  if (c <= elevated_count_) {
    return RiskZone::elevated_risk;
  }
  return RiskZone::medium_risk;
}

RoadStateTracker::RoadStateTracker(double window_s, std::optional<ZoneMap> zones)
: speeds_(window_s), distances_(window_s), zones_(std::move(zones))
{
}

RoadState RoadStateTracker::update(
  std::span<const double> speeds, std::span<const double> pair_distances, double t)
{
  for (double s : speeds) {
    speeds_.push(t, s);
  }
  for (double d : pair_distances) {
    distances_.push(t, d);
  }
  speeds_.evict(t);
  distances_.evict(t);

  RoadState state;
  state.t = t;
  state.ras = speeds_.mean();
  state.rad = distances_.mean();
  if (state.ras && state.rad && zones_) {
    state.zone = zones_->classify(*state.ras, *state.rad);
  }
  return state;
}

std::vector<std::pair<double, double>> read_ras_rad_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(path.string() + " is empty");
  }
  const auto header = split_csv(line);
  const auto ras_col = std::find(header.begin(), header.end(), "ras");
  const auto rad_col = std::find(header.begin(), header.end(), "rad");
  if (ras_col == header.end() || rad_col == header.end()) {
    throw Error(path.string() + " lacks ras/rad columns");
  }
  const auto ri = static_cast<std::size_t>(std::distance(header.begin(), ras_col));
  const auto di = static_cast<std::size_t>(std::distance(header.begin(), rad_col));
  std::vector<std::pair<double, double>> out;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() <= std::max(ri, di) || cells[ri].empty() || cells[di].empty()) {
      continue;
    }
    out.emplace_back(std::stod(cells[ri]), std::stod(cells[di]));
  }
  return out;
}

double f1_score(double precision, double recall)
{
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

EvalCurves eval_curves(
  std::span<const LabeledFrame> frames, std::span<const double> thresholds, double match_iou)
{
  std::size_t total_gt = 0;
  for (const auto & f : frames) {
    total_gt += f.ground_truth.size();
  }
  if (total_gt == 0) {
    throw DomainError("evaluation needs at least one ground-truth instance");
  }
  EvalCurves curves;
  for (double thr : thresholds) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const auto & f : frames) {
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < f.detections.size(); ++i) {
        if (f.detections[i].confidence >= thr) {
          order.push_back(i);
        }
      }
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return f.detections[a].confidence > f.detections[b].confidence;
      });
      std::vector<bool> taken(f.ground_truth.size(), false);
      for (std::size_t i : order) {
        const auto & det = f.detections[i];
        double best = -1.0;
        std::size_t best_gt = 0;
        for (std::size_t g = 0; g < f.ground_truth.size(); ++g) {
          if (taken[g] || f.ground_truth[g].class_label != det.class_label) {
            continue;
          }
          const double overlap = track::iou(det.bbox, f.ground_truth[g].bbox);
          if (overlap >= match_iou && overlap > best) {
            best = overlap;
            best_gt = g;
          }
        }
        if (best >= 0.0) {
          taken[best_gt] = true;
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const double precision =
      tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_gt);
    curves.thresholds.push_back(thr);
    curves.precision.push_back(precision);
    curves.recall.push_back(recall);
    curves.f1.push_back(f1_score(precision, recall));
  }
  return curves;
}

std::vector<std::size_t> non_max_suppression(
  std::span<const ingest::DetectionEvent> detections, double iou_threshold)
{
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const auto & d = detections[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return detections[k].class_label == d.class_label &&
             track::iou(detections[k].bbox, d.bbox) > iou_threshold;
    });
    if (!suppressed) {
      kept.push_back(i);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

CountSurface threshold_sweep(
  std::span<const ingest::FrameBatch> batches, std::span<const double> confidence_grid,
  std::span<const double> iou_grid)
{
  if (confidence_grid.empty() || iou_grid.empty()) {
    throw DomainError("threshold sweep grids must be non-empty");
  }
  CountSurface surface;
  surface.confidence_grid.assign(confidence_grid.begin(), confidence_grid.end());
  surface.iou_grid.assign(iou_grid.begin(), iou_grid.end());
  surface.counts.assign(confidence_grid.size(), std::vector<std::size_t>(iou_grid.size(), 0));
  for (const auto & batch : batches) {
    for (std::size_t c = 0; c < confidence_grid.size(); ++c) {
      const auto filtered = ingest::filter_by_confidence(batch, confidence_grid[c]);
      for (std::size_t i = 0; i < iou_grid.size(); ++i) {
        surface.counts[c][i] += non_max_suppression(filtered.detections, iou_grid[i]).size();
      }
    }
  }
  return surface;
}

}  // namespace kerbwatch::metrics
