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


#include "kerbwatch/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "kerbwatch/bench.hpp"
#include "kerbwatch/config.hpp"
#include "kerbwatch/error.hpp"
#include "kerbwatch/latency.hpp"
#include "kerbwatch/metrics.hpp"
#include "kerbwatch/mqtt_transport.hpp"
#include "kerbwatch/pipeline.hpp"
#include "kerbwatch/sim.hpp"
#include "kerbwatch/telemetry.hpp"

namespace kerbwatch::app
{
namespace
{
namespace fs = std::filesystem;
using json = nlohmann::json;

struct Options
{
  std::string config;
  std::string input{"-"};
  std::string mqtt_url;
  std::string csv_dir;
  std::string messages;
  std::uint64_t seed{0};
  std::string fixture;
  std::string scenario;
  std::string out_dir{"simulation"};
  double noise{-1.0};
  double budget_ms{kDefaultBudgetS * 1e3};
  int repetitions{3};
  double window_s{-1.0};
  double mu{-1.0};
  bool live{false};
  double match_iou{0.5};
  std::string detections;
  std::string ras_rad;
  std::string latency;
  std::string road_state;
};

// Flags registered per subcommand, used to map KERBWATCH_* variables onto the command line.
struct FlagInfo
{
  std::string name;
  bool is_flag{false};
};

std::string env_name(const std::string & flag)
{
  std::string out = "KERBWATCH_";
  for (char c : flag.substr(2)) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path & path)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

std::string fmt(const char * f, double x)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

void apply_overrides(ingest::PipelineConfig & cfg, const Options & o)
{
  if (!o.mqtt_url.empty()) {
    cfg.mqtt_url = o.mqtt_url;
  }
  if (!o.csv_dir.empty()) {
    cfg.csv_dir = o.csv_dir;
  }
  if (o.window_s >= 0.0) {
    cfg.road_state_window_s = o.window_s;
  }
  if (o.mu >= 0.0) {
    cfg.friction.mu = o.mu;
  }
  try {
    cfg.validate();
  } catch (const ingest::ConfigError &) {
    throw;
  } catch (const Error & ex) {
    throw ingest::ConfigError(ingest::ConfigError::Kind::invariant, "<overrides>", ex.what());
  }
}

int cmd_run(const Options & o, std::ostream & out)
{
  ingest::PipelineConfig cfg = ingest::load_config(o.config);
  apply_overrides(cfg, o);

  std::unique_ptr<telemetry::Transport> transport;
  if (!cfg.mqtt_url.empty()) {
    transport = std::make_unique<telemetry::MqttTransport>(
      telemetry::parse_mqtt_url(cfg.mqtt_url), "kerbwatch-" + cfg.camera_id);
  } else if (!o.messages.empty()) {
    transport = std::make_unique<telemetry::FileTransport>(o.messages);
  }
  std::unique_ptr<telemetry::Publisher> publisher;
  if (transport) {
    publisher = std::make_unique<telemetry::Publisher>(*transport);
  }
  std::unique_ptr<telemetry::CsvExporter> csv;
  if (!cfg.csv_dir.empty()) {
    csv = std::make_unique<telemetry::CsvExporter>(cfg.csv_dir);
  }

  std::ifstream file;
  std::istream * source = &std::cin;
  if (o.input != "-") {
    file.open(o.input, std::ios::binary);
    if (!file) {
      throw Error("cannot open " + o.input);
    }
    source = &file;
  }
  const RunSummary s = run_pipeline(
    cfg, *source, {publisher.get(), csv.get()}, o.live ? ClockMode::live : ClockMode::replay);
  out << format_summary(s);
  return kExitOk;
}

sim::ScenarioScript load_scenario(const Options & o, const std::string & default_fixture)
{
  sim::ScenarioScript script;
  if (!o.scenario.empty()) {
    script = sim::script_from_json(read_file(o.scenario));
    script.seed = o.seed != 0 ? o.seed : script.seed;
  } else {
    script = sim::fixture_by_name(o.fixture.empty() ? default_fixture : o.fixture, o.seed);
  }
  if (o.noise >= 0.0) {
    script.pixel_noise_sigma = o.noise;
  }
  if (o.mu >= 0.0) {
    script.friction.mu = o.mu;
  }
  return script;
}

int cmd_simulate(const Options & o, std::ostream & out)
{
  const sim::ScenarioScript script = load_scenario(o, "crosswalk");
  const sim::ScenarioOutput result = sim::run_scenario(script);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "detections.ndjson");
    ingest::write_detection_stream(f, result.detections);
  }
  {
    auto f = open_output(dir / "ground_truth.ndjson");
    sim::write_ground_truth(f, result.truth);
  }
  {
    auto f = open_output(dir / "scenario.json");
    f << sim::script_to_json(script) << '\n';
  }
  {
    auto f = open_output(dir / "config.json");
    f << ingest::config_to_json(sim::config_for(script)) << '\n';
  }
  std::size_t alerts = 0;
  for (const auto & fr : result.truth) {
    alerts += fr.any_alert() ? 1 : 0;
  }
  out << "scenario " << script.name << " (seed " << script.seed << "): " << result.truth.size()
      << " frames, " << result.detections.size() << " detections, " << alerts
      << " frames with an oracle alert, written to " << dir.string() << '\n';
  return kExitOk;
}

std::vector<geo::Correspondence> parse_correspondences(const std::string & text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & ex) {
    throw ingest::ConfigError(
      ingest::ConfigError::Kind::invalid_value, "<root>", std::string("not valid JSON: ") + ex.what());
  }
  const json & arr = j.is_object() && j.contains("correspondences") ? j["correspondences"] : j;
  if (!arr.is_array()) {
    throw ingest::ConfigError(
      ingest::ConfigError::Kind::missing_field, "correspondences", "array of 4 entries required");
  }
  std::vector<geo::Correspondence> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json & c = arr[i];
    for (const char * key : {"u", "v", "lat", "lon"}) {
      if (!c.contains(key) || !c[key].is_number()) {
        throw ingest::ConfigError(
          ingest::ConfigError::Kind::missing_field,
          "correspondences[" + std::to_string(i) + "]." + key, "number required");
      }
    }
    out.push_back(
      {{c["u"].get<double>(), c["v"].get<double>()},
       {c["lat"].get<double>(), c["lon"].get<double>()}});
  }
  return out;
}

int cmd_calibrate(const Options & o, std::ostream & out)
{
  const std::string text = o.input == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                          : read_file(o.input);
  const auto corr = parse_correspondences(text);
  const geo::GeoFrame gf = geo::solve_geoframe(corr);
  const Eigen::Matrix3d & h = gf.homography();
  out << "homography (pixel -> lat, lon):\n";
  for (int r = 0; r < 3; ++r) {
    out << "  " << fmt("% .12e", h(r, 0)) << ' ' << fmt("% .12e", h(r, 1)) << ' '
        << fmt("% .12e", h(r, 2)) << '\n';
  }
  out << "residuals:\n";
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const geo::GeoPoint g = gf.project(corr[i].pixel);
    const double deg = std::hypot(g.lat - corr[i].geo.lat, g.lon - corr[i].geo.lon);
    out << "  " << i << ": " << fmt("%.3e", deg) << " deg, "
        << fmt("%.3e", geo::haversine(g, corr[i].geo)) << " m\n";
  }
  out << "validity region:";
  for (const auto & p : gf.validity_region()) {
    out << " (" << fmt("%.3f", p.u) << ", " << fmt("%.3f", p.v) << ")";
  }
  out << '\n';
  return kExitOk;
}

geo::BoundingBox parse_bbox(const json & j)
{
  return {
    j.at("x_min").get<double>(), j.at("y_min").get<double>(), j.at("x_max").get<double>(),
    j.at("y_max").get<double>()};
}

std::vector<metrics::LabeledFrame> read_labeled_frames(std::istream & in)
{
  std::vector<metrics::LabeledFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const json j = json::parse(line);
      metrics::LabeledFrame f;
      for (const auto & d : j.at("detections")) {
        f.detections.push_back(
          {parse_bbox(d.at("bbox")), ingest::parse_class_label(d.at("class").get<std::string>()),
           d.at("confidence").get<double>()});
      }
      for (const auto & g : j.at("ground_truth")) {
        f.ground_truth.push_back(
          {parse_bbox(g.at("bbox")), ingest::parse_class_label(g.at("class").get<std::string>())});
      }
      frames.push_back(std::move(f));
    } catch (const json::exception & ex) {
      throw ingest::ParseError("line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return frames;
}

std::vector<double> grid(double lo, double hi, double step)
{
  std::vector<double> g;
  const auto n = static_cast<int>(std::llround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) {
    g.push_back(std::round((lo + step * i) * 1e9) / 1e9);
  }
  return g;
}

int cmd_eval(const Options & o, std::ostream & out)
{
  if (o.input == "-" && o.detections.empty()) {
    throw Error("eval needs --input (labeled frames) or --detections (detection stream)");
  }
  if (!o.detections.empty()) {
    std::ifstream in(o.detections, std::ios::binary);
    if (!in) {
      throw Error("cannot open " + o.detections);
    }
    const auto read = ingest::read_detection_stream(in);
    const auto conf = grid(0.1, 0.9, 0.1);
    const auto ious = grid(0.1, 0.9, 0.1);
    const metrics::CountSurface surface = metrics::threshold_sweep(read.batches, conf, ious);
    std::ostringstream csv;
    csv << "confidence,iou,count\n";
    for (std::size_t c = 0; c < conf.size(); ++c) {
      for (std::size_t i = 0; i < ious.size(); ++i) {
        csv << fmt("%.2f", conf[c]) << ',' << fmt("%.2f", ious[i]) << ','
            << surface.counts[c][i] << '\n';
      }
    }
    if (o.csv_dir.empty()) {
      out << csv.str();
    } else {
      open_output(fs::path(o.csv_dir) / "sweep.csv") << csv.str();
      out << "count surface over " << read.batches.size() << " frames written to "
          << (fs::path(o.csv_dir) / "sweep.csv").string() << '\n';
    }
  }
  if (o.input != "-") {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) {
      throw Error("cannot open " + o.input);
    }
    const auto frames = read_labeled_frames(in);
    const auto thresholds = grid(0.05, 0.95, 0.05);
    const metrics::EvalCurves curves = metrics::eval_curves(frames, thresholds, o.match_iou);
    std::ostringstream csv;
    csv << "threshold,precision,recall,f1\n";
    std::size_t best = 0;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      csv << fmt("%.2f", curves.thresholds[i]) << ',' << fmt("%.6f", curves.precision[i]) << ','
          << fmt("%.6f", curves.recall[i]) << ',' << fmt("%.6f", curves.f1[i]) << '\n';
      if (curves.f1[i] > curves.f1[best]) {
        best = i;
      }
    }
    if (o.csv_dir.empty()) {
      out << csv.str();
    } else {
      open_output(fs::path(o.csv_dir) / "eval.csv") << csv.str();
      out << "best F1 " << fmt("%.4f", curves.f1[best]) << " at confidence "
          << fmt("%.2f", curves.thresholds[best]) << '\n';
    }
  }
  return kExitOk;
}

int cmd_bench(const Options & o, std::ostream & out)
{
  sim::ScenarioScript script = load_scenario(o, "busy");
  ingest::PipelineConfig cfg =
    o.config.empty() ? sim::config_for(script) : ingest::load_config(o.config);
  apply_overrides(cfg, o);
  script.camera_id = cfg.camera_id;
  const BenchResult r = bench(cfg, script, o.repetitions, o.budget_ms / 1e3);
  out << format_bench(r);
  if (!o.csv_dir.empty()) {
    const fs::path dir = o.csv_dir;
    auto e2e = open_output(dir / "latency_end_to_end.csv");
    write_latency_csv(e2e, r.pooled.end_to_end);
    auto stages = open_output(dir / "latency_stages.csv");
    stages << "stage,count,min,median,mean,std,p90,p95,p99,max\n";
    auto row = [&](std::string_view name, const LatencyStats & s) {
      stages << name << ',' << s.count;
      for (double x : {s.min, s.median, s.mean, s.std, s.quantile(0.9), s.quantile(0.95),
                       s.quantile(0.99), s.max}) {
        stages << ',' << fmt("%.9f", x);
      }
      stages << '\n';
    };
    for (std::size_t i = 0; i < kStageCount; ++i) {
      row(to_string(kStages[i]), r.pooled.stages[i]);
    }
    row("end_to_end", r.pooled.end_to_end);
  }
  return kExitOk;
}

std::vector<double> read_latency_samples(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::vector<double> xs;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(0, comma);
    char * end = nullptr;
    const double x = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str()) {
      xs.push_back(x);
    }
  }
  return xs;
}

int cmd_report(const Options & o, std::ostream & out)
{
  if (o.ras_rad.empty() && o.latency.empty() && o.road_state.empty()) {
    throw Error("report needs --ras-rad, --latency or --road-state");
  }
  auto emit = [&](const std::string & file, const std::string & body) {
    if (o.csv_dir.empty()) {
      out << body;
    } else {
      open_output(fs::path(o.csv_dir) / file) << body;
      out << "wrote " << (fs::path(o.csv_dir) / file).string() << '\n';
    }
  };
  if (!o.ras_rad.empty()) {
    const auto samples = metrics::read_ras_rad_csv(o.ras_rad);
    const auto zones = metrics::ZoneMap::build_uniform(samples);
    std::ostringstream csv;
    csv << "ras,rad,zone\n";
    for (const auto & [ras, rad] : samples) {
      csv << fmt("%.6f", ras) << ',' << fmt("%.6f", rad) << ','
          << metrics::to_string(zones.classify(ras, rad)) << '\n';
    }
    emit("ras_rad_zones.csv", csv.str());
  }
  if (!o.latency.empty()) {
    const LatencyStats s = latency_stats(read_latency_samples(o.latency));
    std::ostringstream csv;
    write_latency_csv(csv, s);
    emit("latency_distribution.csv", csv.str());
    out << "latency: n " << s.count << ", min " << fmt("%.4f", s.min) << " s, median "
        << fmt("%.4f", s.median) << " s, mean " << fmt("%.4f", s.mean) << " s, std "
        << fmt("%.4f", s.std) << " s, p99 " << fmt("%.4f", s.quantile(0.99)) << " s, max "
        << fmt("%.4f", s.max) << " s\n";
  }
  if (!o.road_state.empty()) {
    std::ifstream in(o.road_state);
    if (!in) {
      throw Error("cannot open " + o.road_state);
    }
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    while (std::getline(in, line)) {
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) {
        continue;
      }
      ++counts[line.substr(comma + 1)];
      ++total;
    }
    std::ostringstream csv;
    csv << "zone,frames,fraction\n";
    for (const auto z : {metrics::RiskZone::low_risk, metrics::RiskZone::medium_risk,
                         metrics::RiskZone::elevated_risk, metrics::RiskZone::no_data}) {
      const std::string name(metrics::to_string(z));
      const std::size_t n = counts[name];
      csv << name << ',' << n << ','
          << fmt("%.6f", total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total))
          << '\n';
    }
    emit("zone_occupancy.csv", csv.str());
  }
  return kExitOk;
}

}  // namespace

std::optional<std::string> process_env(std::string_view name)
{
  const char * v = std::getenv(std::string(name).c_str());
  if (v == nullptr) {
    return std::nullopt;
  }
  return std::string(v);
}

int run_cli(
  int argc, const char * const * argv, std::ostream & out, std::ostream & err,
  const EnvLookup & env)
{
  Options o;
  CLI::App app{"Roadside collision-risk analytics over camera detection streams", "kerbwatch"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::map<std::string, std::vector<FlagInfo>> flags;
  auto opt = [&](CLI::App * sub, const std::string & name, auto & target, const std::string & help) {
    flags[sub->get_name()].push_back({name, false});
    return sub->add_option(name, target, help);
  };
  auto flag = [&](CLI::App * sub, const std::string & name, bool & target, const std::string & help) {
    flags[sub->get_name()].push_back({name, true});
    return sub->add_flag(name, target, help);
  };

  auto * run = app.add_subcommand("run", "Process a detection stream and publish metadata");
  opt(run, "--config", o.config, "Pipeline configuration JSON")->required();
  opt(run, "--input", o.input, "Detection stream file, or - for stdin");
  opt(run, "--mqtt-url", o.mqtt_url, "Broker URL, e.g. mqtt://localhost:1883");
  opt(run, "--csv-dir", o.csv_dir, "Directory for CSV exports");
  opt(run, "--messages", o.messages, "Write published messages to this NDJSON file");
  opt(run, "--window-s", o.window_s, "Road-state window in seconds");
  opt(run, "--mu", o.mu, "Friction coefficient");
  flag(run, "--live", o.live, "Stamp payload time from the wall clock");

  auto * simulate = app.add_subcommand("simulate", "Generate a detection stream and ground truth");
  opt(simulate, "--fixture", o.fixture, "Built-in scenario name");
  opt(simulate, "--scenario", o.scenario, "Scenario script JSON");
  opt(simulate, "--seed", o.seed, "Random seed");
  opt(simulate, "--noise", o.noise, "Anchor noise sigma in pixels");
  opt(simulate, "--mu", o.mu, "Friction coefficient of the oracle");
  opt(simulate, "--out-dir", o.out_dir, "Output directory");

  auto * calibrate = app.add_subcommand("calibrate", "Solve a geoframe and print residuals");
  opt(calibrate, "--input", o.input, "Correspondence JSON, or - for stdin");

  auto * eval = app.add_subcommand("eval", "Detector evaluation curves and count sweeps");
  opt(eval, "--input", o.input, "Labeled frames NDJSON");
  opt(eval, "--detections", o.detections, "Detection stream for the confidence/IoU count sweep");
  opt(eval, "--match-iou", o.match_iou, "IoU needed to match a ground-truth box");
  opt(eval, "--csv-dir", o.csv_dir, "Directory for CSV output");

  auto * bench_cmd = app.add_subcommand("bench", "Stage latency against the alert budget");
  opt(bench_cmd, "--config", o.config, "Pipeline configuration JSON");
  opt(bench_cmd, "--fixture", o.fixture, "Built-in scenario name");
  opt(bench_cmd, "--scenario", o.scenario, "Scenario script JSON");
  opt(bench_cmd, "--seed", o.seed, "Random seed");
  opt(bench_cmd, "--budget-ms", o.budget_ms, "End-to-end budget in milliseconds");
  opt(bench_cmd, "--repetitions", o.repetitions, "Independent repetitions");
  opt(bench_cmd, "--window-s", o.window_s, "Road-state window in seconds");
  opt(bench_cmd, "--mu", o.mu, "Friction coefficient");
  opt(bench_cmd, "--csv-dir", o.csv_dir, "Directory for latency CSV output");

  auto * report = app.add_subcommand("report", "Plot-ready CSV from run outputs");
  opt(report, "--ras-rad", o.ras_rad, "CSV with ras and rad columns");
  opt(report, "--latency", o.latency, "Latency samples in seconds, one per line");
  opt(report, "--road-state", o.road_state, "road_state.csv from a run");
  opt(report, "--csv-dir", o.csv_dir, "Directory for CSV output");

  std::vector<std::string> args;
  for (int i = 0; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  if (argc > 1) {
    const auto it = flags.find(args[1]);
    if (it != flags.end()) {
      for (const auto & f : it->second) {
        const auto value = env(env_name(f.name));
        if (!value) {
          continue;
        }
        if (f.is_flag) {
          args.push_back(f.name + "=" + *value);
        } else {
          args.push_back(f.name);
          args.push_back(*value);
        }
      }
    }
  }
  std::vector<const char *> cargs;
  for (const auto & a : args) {
    cargs.push_back(a.c_str());
  }

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError & ex) {
    err << "error: " << ex.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      return cmd_run(o, out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(o, out);
    }
    if (calibrate->parsed()) {
      return cmd_calibrate(o, out);
    }
    if (eval->parsed()) {
      return cmd_eval(o, out);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(o, out);
    }
    if (report->parsed()) {
      return cmd_report(o, out);
    }
  } catch (const ingest::ConfigError & ex) {
    err << "configuration error: " << ex.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception & ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace kerbwatch::app
