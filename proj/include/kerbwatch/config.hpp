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

#ifndef KERBWATCH__CONFIG_HPP_
#define KERBWATCH__CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "kerbwatch/error.hpp"
#include "kerbwatch/geo.hpp"
#include "kerbwatch/risk.hpp"
#include "kerbwatch/track.hpp"

namespace kerbwatch::ingest
{

/// Everything one camera pipeline needs. Built by load_config / parse_config, which validate
/// the geoframe at load time.
struct PipelineConfig
{
  explicit PipelineConfig(geo::GeoFrame gf) : geoframe(std::move(gf)) {}

  std::string camera_id{"cam-0"};
  int frame_width{0};
  int frame_height{0};
  geo::GeoFrame geoframe;
  std::optional<geo::DistortionModel> distortion;

  double confidence_threshold{0.6};
  track::TrackerParams tracker;
  risk::FrictionContext friction;
  risk::RiskParams risk;
  risk::VruPolicy vru;

  double road_state_window_s{60.0};
  double reorder_window_s{1.0};

  std::string mqtt_url;
  std::string csv_dir;
  std::string zone_map_csv;

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

class ConfigError : public Error
{
public:
  enum class Kind { missing_field, invalid_value, invariant };

  ConfigError(Kind kind, std::string field, const std::string & detail);

  Kind kind() const { return kind_; }
  const std::string & field() const { return field_; }

private:
  Kind kind_;
  std::string field_;
};

PipelineConfig load_config(const std::filesystem::path & path);
PipelineConfig parse_config(std::string_view json_text);

/// Canonical JSON rendering; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const PipelineConfig & c);

}  // namespace kerbwatch::ingest

#endif  // KERBWATCH__CONFIG_HPP_
