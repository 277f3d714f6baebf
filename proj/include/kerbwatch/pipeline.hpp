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


#ifndef KERBWATCH__PIPELINE_HPP_
#define KERBWATCH__PIPELINE_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "kerbwatch/config.hpp"
#include "kerbwatch/detection_stream.hpp"
#include "kerbwatch/metrics.hpp"
#include "kerbwatch/risk.hpp"
#include "kerbwatch/telemetry.hpp"
#include "kerbwatch/track.hpp"

namespace kerbwatch::app
{

enum class Stage { ingest, undistort, geo, track, risk, metrics, publish };

inline constexpr std::size_t kStageCount = 7;
inline constexpr std::array<Stage, kStageCount> kStages = {
  Stage::ingest, Stage::undistort, Stage::geo,    Stage::track,
  Stage::risk,   Stage::metrics,   Stage::publish};

std::string_view to_string(Stage s);

struct StageTiming
{
  Stage stage{Stage::ingest};
  // seconds, never negative
  double duration{0.0};
};

enum class ClockMode { replay, live };

struct Sinks
{
  telemetry::Publisher * publisher{nullptr};
  telemetry::CsvExporter * csv{nullptr};
};

struct FrameResult
{
  telemetry::FrameHeader header;
  std::vector<telemetry::ObjectMetadata> objects;
  std::vector<risk::PairAssessment> assessments;
  std::vector<risk::PairAssessment> alerts;
  std::size_t detections{0};
  std::size_t filtered{0};
  std::size_t outside_region{0};
  std::size_t undistort_failures{0};
  std::size_t skipped_pairs{0};
  metrics::RoadState road_state;
  telemetry::DeliveryReport delivery;
  std::array<StageTiming, kStageCount> timings{};

  double end_to_end() const;
};

/// One camera's chain: filter, undistort, georeference, track, assess, road state, publish.
class Pipeline
{
public:
  explicit Pipeline(
    ingest::PipelineConfig config, Sinks sinks = {}, ClockMode mode = ClockMode::replay);

  /// ingest_seconds is the time the caller spent reading and parsing the batch.
  FrameResult process(const ingest::FrameBatch & batch, double ingest_seconds = 0.0);

  const ingest::PipelineConfig & config() const { return config_; }
  const track::Tracker & tracker() const { return tracker_; }

private:
  ingest::PipelineConfig config_;
  Sinks sinks_;
  ClockMode mode_;
  track::Tracker tracker_;
  metrics::RoadStateTracker road_state_;
};

struct RunSummary
{
  std::size_t frames{0};
  std::size_t detections{0};
  std::size_t filtered{0};
  std::size_t outside_region{0};
  std::size_t undistort_failures{0};
  std::size_t other_camera{0};
  std::size_t tracks_created{0};
  std::size_t alerts{0};
  std::size_t rejects{0};
  std::size_t published{0};
  std::size_t failed{0};
  std::size_t dropped{0};
  std::size_t buffered{0};
  std::size_t skipped{0};
  std::vector<std::string> diagnostics;
};

using FrameCallback = std::function<void(const FrameResult &)>;

/// Runs until the source is exhausted. Frames for other cameras are counted and ignored.
RunSummary run_pipeline(
  const ingest::PipelineConfig & config, std::istream & source, Sinks sinks = {},
  ClockMode mode = ClockMode::replay, const FrameCallback & on_frame = {});

std::string format_summary(const RunSummary & s);

}  // namespace kerbwatch::app

#endif  // KERBWATCH__PIPELINE_HPP_
