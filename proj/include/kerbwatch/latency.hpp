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


#ifndef KERBWATCH__LATENCY_HPP_
#define KERBWATCH__LATENCY_HPP_

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <vector>

namespace kerbwatch::app
{

inline constexpr std::size_t kHistogramBins = 50;

struct LatencyStats
{
  std::size_t count{0};
  double min{0.0};
  double max{0.0};
  double mean{0.0};
  double median{0.0};
  // population standard deviation
  double std{0.0};
  std::map<double, double> quantiles;
  // kHistogramBins + 1 edges spanning [min, max]
  std::vector<double> bin_edges;
  // probability mass per bin
  std::vector<double> histogram;
  std::vector<double> cumulative;

  double quantile(double q) const;
};

/// Linear interpolation between order statistics (h = (n - 1) q) on sorted input.
double quantile_sorted(std::span<const double> sorted, double q);

/// Reports the 0.5, 0.9, 0.95 and 0.99 quantiles. Throws DomainError on empty input.
LatencyStats latency_stats(std::span<const double> samples);

void write_latency_csv(std::ostream & out, const LatencyStats & s);

}  // namespace kerbwatch::app

#endif  // KERBWATCH__LATENCY_HPP_
