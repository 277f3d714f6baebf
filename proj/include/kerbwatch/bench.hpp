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


#ifndef KERBWATCH__BENCH_HPP_
#define KERBWATCH__BENCH_HPP_

#include <array>
#include <string>
#include <vector>

#include "kerbwatch/config.hpp"
#include "kerbwatch/latency.hpp"
#include "kerbwatch/pipeline.hpp"
#include "kerbwatch/sim.hpp"

namespace kerbwatch::app
{

inline constexpr double kDefaultBudgetS = 0.300;
// measured on the field deployment, for context only
inline constexpr double kReferenceServiceMedianS = 0.44;
inline constexpr double kReferenceStreamingMeanS = 0.08;

struct BenchBlock
{
  std::array<LatencyStats, kStageCount> stages;
  LatencyStats end_to_end;
};

struct StageVerdict
{
  Stage stage{Stage::ingest};
  double p99{0.0};
  bool pass{false};
};

struct BudgetReport
{
  double budget{kDefaultBudgetS};
  double end_to_end_p99{0.0};
  // end_to_end_p99 <= budget
  bool pass{false};
  std::vector<StageVerdict> stages;
  // stage with the largest p99
  Stage worst_offender{Stage::ingest};
  std::string note;
};

struct BenchResult
{
  std::vector<BenchBlock> repetitions;
  BenchBlock pooled;
  BudgetReport report;
  std::size_t frames_per_repetition{0};
};

/// Replays the scenario's detections through a fresh pipeline per repetition with an in-memory
/// sink, timing every stage with a monotonic clock.
BenchResult bench(
  const ingest::PipelineConfig & config, const sim::ScenarioScript & scenario, int repetitions,
  double budget_s = kDefaultBudgetS);

std::string format_bench(const BenchResult & r);

}  // namespace kerbwatch::app

#endif  // KERBWATCH__BENCH_HPP_
