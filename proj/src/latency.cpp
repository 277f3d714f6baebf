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


#include "kerbwatch/latency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "kerbwatch/error.hpp"

namespace kerbwatch::app
{

double LatencyStats::quantile(double q) const
{
  const auto it = quantiles.find(q);
  if (it == quantiles.end()) {
    throw DomainError("quantile " + std::to_string(q) + " was not computed");
  }
  return it->second;
}

double quantile_sorted(std::span<const double> sorted, double q)
{
  if (sorted.empty()) {
    throw DomainError("quantile of an empty sample");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("quantile fraction must lie in [0, 1]");
  }
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) {
    return sorted[lo];
  }
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LatencyStats latency_stats(std::span<const double> samples)
{
  if (samples.empty()) {
    throw DomainError("latency statistics need at least one sample");
  }
  for (double x : samples) {
    if (!std::isfinite(x) || x < 0.0) {
      throw DomainError("latency samples must be finite and non-negative");
    }
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double dn = static_cast<double>(n);

  LatencyStats s;
  s.count = n;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

  double sum = 0.0;
  for (double x : sorted) {
    sum += x;
  }
  double mean = sum / dn;
  double residual = 0.0;
  for (double x : sorted) {
    residual += x - mean;
  }
  mean += residual / dn;
  double ss = 0.0;
  for (double x : sorted) {
    ss += (x - mean) * (x - mean);
  }
  s.mean = mean;
  s.std = std::sqrt(ss / dn);

  for (double q : {0.5, 0.9, 0.95, 0.99}) {
    s.quantiles[q] = quantile_sorted(sorted, q);
  }

  const double width = (s.max - s.min) / static_cast<double>(kHistogramBins);
  s.bin_edges.resize(kHistogramBins + 1);
  for (std::size_t i = 0; i <= kHistogramBins; ++i) {
    s.bin_edges[i] = s.min + width * static_cast<double>(i);
  }
  s.bin_edges.back() = s.max;
  std::vector<std::size_t> counts(kHistogramBins, 0);
  for (double x : sorted) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = std::min(
        static_cast<std::size_t>(std::floor((x - s.min) / width)), kHistogramBins - 1);
    }
    ++counts[b];
  }
  s.histogram.resize(kHistogramBins);
  s.cumulative.resize(kHistogramBins);
  std::size_t running = 0;
  for (std::size_t i = 0; i < kHistogramBins; ++i) {
    running += counts[i];
    s.histogram[i] = static_cast<double>(counts[i]) / dn;
    s.cumulative[i] = static_cast<double>(running) / dn;
  }
  return s;
}

void write_latency_csv(std::ostream & out, const LatencyStats & s)
{
  out << "bin_low,bin_high,pdf,cdf\n";
  char line[160];
  for (std::size_t i = 0; i < s.histogram.size(); ++i) {
    std::snprintf(
      line, sizeof(line), "%.9f,%.9f,%.12f,%.12f\n", s.bin_edges[i], s.bin_edges[i + 1],
      s.histogram[i], s.cumulative[i]);
    out << line;
  }
}

}  // namespace kerbwatch::app
