/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blindspot/errors.hpp"
#include "blindspot/io/config.hpp"
#include "blindspot/io/raster_io.hpp"
#include "blindspot/io/report.hpp"
#include "blindspot/pipeline.hpp"
#include "blindspot/presets.hpp"
#include "blindspot/version.hpp"

namespace fs = std::filesystem;
using namespace blindspot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> timesteps;
  std::optional<double> r_thresh;
  unsigned threads = default_thread_count();
  std::string out_dir = "blindspot_out";
  bool dump_reference = false;
  bool quiet = false;
};

io::ScenarioConfig load(const std::string& name) {
  if (!fs::exists(name)) {
    if (auto j = presets::find(name)) return io::parse_config(*j);
  }
  return io::load_config(name);
}

void print_rois(const io::CoverageReport& rep) {
  std::printf("rig %s\n", rep.rig.c_str());
  for (const RoiSummary& s : rep.rois) {
    char r[32] = "n/a", p[32] = "n/a";
    if (s.mean_blind_spot_radius) std::snprintf(r, sizeof r, "%.4f", *s.mean_blind_spot_radius);
    if (s.mean_detection_probability) {
      std::snprintf(p, sizeof p, "%.2f%%", 100.0 * *s.mean_detection_probability);
    }
    std::printf("  %-34s r=%-10s p=%-9s cells=%zu\n", s.name.c_str(), r, p, s.nonempty_cell_count);
  }
}

int run(const RunArgs& a) {
  io::ScenarioConfig cfg = load(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.timesteps) cfg.timesteps = *a.timesteps;
  if (a.r_thresh) cfg.r_thresh = *a.r_thresh;
  cfg.reference.sampler.seed = cfg.seed;
  io::validate(cfg);

  RunOptions opt;
  opt.threads = a.threads;
  opt.out_dir = fs::path(a.out_dir);
  if (a.dump_reference) opt.dump_reference_dir = fs::path(a.out_dir) / "reference";
  if (!a.quiet) {
    opt.progress = [](std::int64_t done, std::int64_t total) {
      std::fprintf(stderr, "\r%lld/%lld timesteps", static_cast<long long>(done),
                   static_cast<long long>(total));
      if (done == total) std::fputc('\n', stderr);
    };
  }
  const RunResult res = run_scenario(cfg, opt);

  std::printf("scenario %s, seed %llu, %lld timesteps, config %s\n", cfg.name.c_str(),
              static_cast<unsigned long long>(cfg.seed), static_cast<long long>(cfg.timesteps),
              res.config_hash.c_str());
  for (const RigResult& r : res.rigs) print_rois(r.report);
  for (std::size_t i = 1; i < res.rigs.size(); ++i) {
    std::printf("\n%s vs %s\n", res.rigs[i - 1].name.c_str(), res.rigs[i].name.c_str());
    std::fputs(io::format_comparison(io::compare_reports(res.rigs[i - 1].report, res.rigs[i].report)).c_str(),
               stdout);
  }
  std::printf("\n%.2f s (%.2f timesteps/s, %u threads), outputs in %s\n", res.seconds,
              static_cast<double>(cfg.timesteps) / res.seconds, a.threads, a.out_dir.c_str());
  return kExitOk;
}

int compare(const std::string& a, const std::string& b, bool as_json) {
  const io::Comparison c = io::compare_reports(io::read_report(a), io::read_report(b));
  if (!as_json) {
    std::fputs(io::format_comparison(c).c_str(), stdout);
    return kExitOk;
  }
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  auto winner = [](io::Winner w) {
    switch (w) {
      case io::Winner::A: return "A";
      case io::Winner::B: return "B";
      case io::Winner::Tie: return "tie";
      case io::Winner::None: break;
    }
    return "none";
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"roi", r.roi},
                    {"mean_blind_spot_radius", {{"a", opt(r.radius_a)}, {"b", opt(r.radius_b)},
                                                {"delta", opt(r.radius_delta())},
                                                {"winner", winner(r.radius_winner)}}},
                    {"mean_detection_probability",
                     {{"a", opt(r.probability_a)}, {"b", opt(r.probability_b)},
                      {"delta", opt(r.probability_delta())},
                      {"winner", winner(r.probability_winner)}}}});
  }
  std::cout << nlohmann::json{{"a", c.label_a}, {"b", c.label_b}, {"rows", rows}}.dump(2) << '\n';
  return kExitOk;
}

int render(const std::string& csv, std::string out, double radius_max) {
  const io::RasterFile f = io::read_raster_csv(csv);
  if (out.empty()) out = fs::path(csv).replace_extension(".ppm").string();
  io::write_raster_ppm(out, f.raster, radius_max);
  std::printf("%s (%zux%zu, %s)\n", out.c_str(), f.raster.spec.ny(), f.raster.spec.nx(),
              to_string(f.raster.kind).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor blind-spot coverage analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario config or a bundled preset");
  run_cmd->add_option("config", ra.config, "Config file, or a preset name")->required();
  run_cmd->add_option("--seed", ra.seed, "Override the config seed");
  run_cmd->add_option("--timesteps", ra.timesteps, "Override the timestep count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--threads", ra.threads, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out-dir", ra.out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--r-thresh", ra.r_thresh, "Detection threshold on r in meters")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--dump-reference", ra.dump_reference, "Write reference clouds to <out-dir>/reference");
  run_cmd->add_flag("-q,--quiet", ra.quiet, "No progress output");

  std::string report_a, report_b;
  bool compare_json = false;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two report.json files");
  cmp_cmd->add_option("report_a", report_a)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("report_b", report_b)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_flag("--json", compare_json, "Machine-readable output");

  std::string raster_csv, render_out;
  double radius_max = 5.0;
  auto* render_cmd = app.add_subcommand("render", "Render a raster CSV as a PPM image");
  render_cmd->add_option("raster", raster_csv)->required();
  render_cmd->add_option("-o,--out", render_out, "Image path (default: next to the CSV)");
  render_cmd->add_option("--radius-max", radius_max, "Upper end of the radius color range in m")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string dump_name;
  auto* presets_cmd = app.add_subcommand("presets", "List bundled presets or print one as JSON");
  presets_cmd->add_option("name", dump_name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (*run_cmd) return run(ra);
    if (*cmp_cmd) return compare(report_a, report_b, compare_json);
    if (*render_cmd) return render(raster_csv, render_out, radius_max);
    if (*presets_cmd) {
      if (dump_name.empty()) {
        for (const auto& n : presets::names()) std::printf("%s\n", n.c_str());
        return kExitOk;
      }
      const auto j = presets::find(dump_name);
      if (!j) throw ConfigError("preset", "unknown preset '" + dump_name + "'");
      std::cout << j->dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "i/o error: %s (offset %zu)\n", e.what(), e.offset());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
