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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kerbwatch/bench.hpp"
#include "kerbwatch/cli.hpp"
#include "kerbwatch/error.hpp"
#include "kerbwatch/latency.hpp"
#include "kerbwatch/pipeline.hpp"
#include "kerbwatch/sim.hpp"
#include "kerbwatch/telemetry.hpp"

namespace
{
using namespace kerbwatch;
using namespace kerbwatch::app;
namespace fs = std::filesystem;

std::string stream_of(const sim::ScenarioScript & s)
{
  std::ostringstream out;
  ingest::write_detection_stream(out, sim::run_scenario(s).detections);
  return out.str();
}

fs::path scratch(const std::string & name)
{
  const fs::path p = fs::temp_directory_path() / ("kerbwatch_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Pipeline, EmptySource)
{
  const auto script = sim::crosswalk_fixture();
  std::istringstream empty;
  const RunSummary s = run_pipeline(sim::config_for(script), empty);
  EXPECT_EQ(s.frames, 0u);
  EXPECT_EQ(s.alerts, 0u);
}

TEST(Pipeline, CrosswalkDistance)
{
  const auto script = sim::crosswalk_fixture();
  std::istringstream in(stream_of(script));
  std::vector<double> d;
  run_pipeline(sim::config_for(script), in, {}, ClockMode::replay, [&](const FrameResult & f) {
    for (const auto & a : f.assessments) {
      d.push_back(a.distance_now);
    }
  });
  ASSERT_GT(d.size(), 80u);
  for (double x : d) {
    EXPECT_NEAR(x, 8.0, 1e-3);
  }
}

TEST(Pipeline, StraightApproachPublishesAlert)
{
  const auto script = sim::fixture_by_name("collision-a", 0);
  telemetry::InMemoryBroker broker;
  std::vector<telemetry::Message> alerts;
  broker.subscribe(telemetry::topic_for(script.camera_id, telemetry::TopicClass::alerts),
    [&](const telemetry::Message & m) { alerts.push_back(m); });
  telemetry::Publisher pub(broker);
  std::istringstream in(stream_of(script));
  const RunSummary s = run_pipeline(sim::config_for(script), in, {&pub, nullptr});
  EXPECT_GE(s.alerts, 1u);
  std::size_t non_empty = 0;
  for (const auto & m : alerts) {
    EXPECT_EQ(m.qos, 1);
    EXPECT_TRUE(telemetry::validate_payload(telemetry::TopicClass::alerts, m.payload).empty());
    non_empty += m.payload.find("\"alerts\":[]") == std::string::npos ? 1 : 0;
  }
  EXPECT_EQ(non_empty, s.alerts > 0 ? non_empty : 0u);
  EXPECT_GE(non_empty, 1u);
}

TEST(Pipeline, StalledSinkStaysBounded)
{
  const auto script = sim::busy_scene_fixture(30, 11, 10.0);
  telemetry::InMemoryBroker broker;
  broker.set_connected(false);
  telemetry::Publisher pub(broker, 500);
  std::istringstream in(stream_of(script));
  const RunSummary s = run_pipeline(sim::config_for(script), in, {&pub, nullptr});
  EXPECT_EQ(s.frames, 301u);
  EXPECT_EQ(pub.backlog(), 500u);
  EXPECT_EQ(s.dropped, 3 * 301u - 500u);
}

TEST(Pipeline, WrongCameraBatchIsRejected)
{
  const auto script = sim::crosswalk_fixture();
  Pipeline p(sim::config_for(script));
  ingest::FrameBatch b;
  b.camera_id = "other";
  EXPECT_THROW(p.process(b), InvariantViolation);
}

TEST(Pipeline, StageTimingsRecorded)
{
  const auto script = sim::crosswalk_fixture();
  std::istringstream in(stream_of(script));
  run_pipeline(sim::config_for(script), in, {}, ClockMode::replay, [](const FrameResult & f) {
    for (std::size_t i = 0; i < kStageCount; ++i) {
      EXPECT_EQ(f.timings[i].stage, kStages[i]);
      EXPECT_GE(f.timings[i].duration, 0.0);
    }
  });
}

// Sort, then read order statistics directly.
struct SortOracle
{
  std::vector<double> s;
  explicit SortOracle(std::vector<double> xs) : s(std::move(xs)) { std::sort(s.begin(), s.end()); }
  double median() const
  {
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  }
  double q(double p) const
  {
    const double h = (s.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= s.size()) {
      return s.back();
    }
    return s[lo] + (h - lo) * (s[lo + 1] - s[lo]);
  }
};

TEST(LatencyStats, ReferenceConstants)
{
  const std::vector<double> xs{0.35, 0.44, 0.99};
  const LatencyStats s = latency_stats(xs);
  EXPECT_EQ(s.min, 0.35);
  EXPECT_EQ(s.median, 0.44);
  EXPECT_EQ(s.max, 0.99);
  EXPECT_EQ(s.count, 3u);
}

TEST(LatencyStats, ConstantSamples)
{
  const std::vector<double> xs(100, 0.08);
  const LatencyStats s = latency_stats(xs);
  EXPECT_NEAR(s.mean, 0.08, 1e-15);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.cumulative.back(), 1.0);
}

TEST(LatencyStats, EmptyIsDomainError)
{
  EXPECT_THROW(latency_stats(std::vector<double>{}), DomainError);
}

TEST(LatencyStats, UniformMoments)
{
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(10000);
  for (auto & x : xs) {
    x = u(rng);
  }
  const LatencyStats s = latency_stats(xs);
  const double sigma = std::sqrt(1.0 / 12.0);
  const double se_mean = sigma / 100.0;
  // standard error of the sample variance for a uniform law, mapped to the std
  const double se_std = std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / 10000.0) / (2.0 * sigma);
  EXPECT_NEAR(s.mean, 0.5, 3.0 * se_mean);
  EXPECT_NEAR(s.std, sigma, 3.0 * se_std);
}

TEST(LatencyStats, MatchesSortOracleExactly)
{
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> ln(-1.0, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> xs(10000 + trial);
    for (auto & x : xs) {
      x = ln(rng);
    }
    const LatencyStats s = latency_stats(xs);
    const SortOracle o(xs);
    EXPECT_EQ(s.min, o.s.front());
    EXPECT_EQ(s.max, o.s.back());
    EXPECT_EQ(s.median, o.median());
    for (double p : {0.5, 0.9, 0.95, 0.99}) {
      EXPECT_EQ(s.quantile(p), o.q(p));
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < s.histogram.size(); ++i) {
      mass += s.histogram[i];
      if (i > 0) {
        EXPECT_GE(s.cumulative[i], s.cumulative[i - 1]);
      }
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_EQ(s.cumulative.back(), 1.0);
    EXPECT_EQ(s.histogram.size(), kHistogramBins);
    // bin counts against a direct scan
    const double w = (s.max - s.min) / kHistogramBins;
    std::vector<std::size_t> counts(kHistogramBins, 0);
    for (double x : xs) {
      ++counts[std::min<std::size_t>(static_cast<std::size_t>((x - s.min) / w), kHistogramBins - 1)];
    }
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
      EXPECT_EQ(s.histogram[i], static_cast<double>(counts[i]) / xs.size());
    }
  }
}

sim::ScenarioScript ten_frames()
{
  sim::ScenarioScript s = sim::crosswalk_fixture();
  for (auto & a : s.actors) {
    a.path.back().t = sim::kReferenceEpoch + 9.0 / 30.0;
  }
  return s;
}

TEST(Bench, TrivialScenarioWithinBudget)
{
  const auto script = ten_frames();
  const BenchResult r = bench(sim::config_for(script), script, 1);
  EXPECT_EQ(r.frames_per_repetition, 10u);
  EXPECT_TRUE(r.report.pass);
  EXPECT_LE(r.report.end_to_end_p99, 0.300);
  EXPECT_EQ(r.report.stages.size(), kStageCount);
  EXPECT_NE(r.report.note.find("0.44"), std::string::npos);
  EXPECT_NE(r.report.note.find("0.08"), std::string::npos);
}

TEST(Bench, ZeroBudgetFailsAndNamesOffender)
{
  const auto script = ten_frames();
  const BenchResult r = bench(sim::config_for(script), script, 1, 0.0);
  EXPECT_FALSE(r.report.pass);
  const std::string text = format_bench(r);
  EXPECT_NE(text.find("FAIL"), std::string::npos);
  EXPECT_NE(text.find("worst offender: " + std::string(to_string(r.report.worst_offender))),
    std::string::npos);
}

TEST(Bench, RepetitionsAndPooledBlock)
{
  const auto script = ten_frames();
  const BenchResult r = bench(sim::config_for(script), script, 3);
  ASSERT_EQ(r.repetitions.size(), 3u);
  for (const auto & b : r.repetitions) {
    EXPECT_EQ(b.end_to_end.count, 10u);
  }
  EXPECT_EQ(r.pooled.end_to_end.count, 30u);
}

struct CliRun
{
  int code{0};
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args, std::map<std::string, std::string> env = {})
{
  args.insert(args.begin(), "kerbwatch");
  std::vector<const char *> argv;
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err,
    [&](std::string_view name) -> std::optional<std::string> {
      const auto it = env.find(std::string(name));
      if (it == env.end()) {
        return std::nullopt;
      }
      return it->second;
    });
  return {code, out.str(), err.str()};
}

TEST(Cli, CalibrateSquare)
{
  const fs::path dir = scratch("calibrate");
  {
    std::ofstream f(dir / "square.json");
    f << R"([{"u":0,"v":0,"lat":40.0,"lon":-8.0},{"u":100,"v":0,"lat":40.0,"lon":-7.999},)"
      << R"({"u":100,"v":100,"lat":40.001,"lon":-7.999},{"u":0,"v":100,"lat":40.001,"lon":-8.0}])";
  }
  const CliRun r = cli({"calibrate", "--input", (dir / "square.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int residuals = 0;
  while (std::getline(lines, line)) {
    const auto colon = line.find(": ");
    const auto deg = line.find(" deg");
    if (colon != std::string::npos && deg != std::string::npos) {
      EXPECT_LE(std::stod(line.substr(colon + 2, deg - colon - 2)), 1e-9) << line;
      ++residuals;
    }
  }
  EXPECT_EQ(residuals, 4);
}

TEST(Cli, SimulateTwiceIdentical)
{
  const fs::path dir = scratch("simulate");
  ASSERT_EQ(cli({"simulate", "--fixture", "crosswalk", "--seed", "7", "--out-dir",
                 (dir / "a").string()}).code, 0);
  ASSERT_EQ(cli({"simulate", "--fixture", "crosswalk", "--seed", "7", "--out-dir",
                 (dir / "b").string()}).code, 0);
  for (const char * f : {"detections.ndjson", "ground_truth.ndjson", "scenario.json", "config.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_FALSE(slurp(dir / "a" / f).empty()) << f;
  }
}

TEST(Cli, RunThenReport)
{
  const fs::path dir = scratch("run");
  ASSERT_EQ(cli({"simulate", "--fixture", "busy", "--seed", "11", "--out-dir", dir.string()}).code, 0);
  const CliRun run = cli({"run", "--config", (dir / "config.json").string(), "--input",
    (dir / "detections.ndjson").string(), "--csv-dir", (dir / "csv").string(), "--messages",
    (dir / "messages.ndjson").string(), "--window-s", "2"});
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NE(run.out.find("frames:           301"), std::string::npos) << run.out;

  // the road-state history feeds the RAS/RAD scatter report
  const CliRun rep = cli({"report", "--ras-rad", (dir / "csv" / "road_state.csv").string()});
  ASSERT_EQ(rep.code, 0) << rep.err;
  std::istringstream lines(rep.out);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "ras,rad,zone");
  std::string row;
  ASSERT_TRUE(static_cast<bool>(std::getline(lines, row)));
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 2);
}

TEST(Cli, EnvironmentOverridesFlags)
{
  const fs::path dir = scratch("env");
  ASSERT_EQ(cli({"simulate", "--fixture", "crosswalk", "--out-dir", (dir / "flag").string()},
                {{"KERBWATCH_OUT_DIR", (dir / "env").string()}}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "env" / "detections.ndjson"));
  EXPECT_FALSE(fs::exists(dir / "flag"));
}

TEST(Cli, UsageAndRuntimeErrors)
{
  EXPECT_EQ(cli({"run", "--config", "x.json", "--bogus"}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"run", "--config", "/nonexistent/config.json"}).code, 2);
  EXPECT_EQ(cli({"simulate", "--fixture", "nope", "--out-dir", scratch("bad").string()}).code, 2);
  EXPECT_EQ(cli({"simulate", "--seed", "abc"}).code, 1);
}

TEST(Cli, BenchReportsVerdict)
{
  const CliRun r = cli({"bench", "--fixture", "crosswalk", "--repetitions", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  const CliRun z = cli({"bench", "--fixture", "crosswalk", "--repetitions", "1", "--budget-ms", "0"});
  EXPECT_NE(z.out.find("FAIL"), std::string::npos);
  EXPECT_NE(z.out.find("worst offender"), std::string::npos);
}

}  // namespace
