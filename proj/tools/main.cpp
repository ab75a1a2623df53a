/*
 * Copyright 2026 The FabricFlow Authors
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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fabricflow/bench.hpp"
#include "fabricflow/oracle.hpp"
#include "fabricflow/report.hpp"

namespace ff = fabricflow;

namespace {

struct CommonOpts {
  std::string config = "wire-only";
  std::size_t devices = 2;
  std::vector<std::uint64_t> sizes;
  std::size_t reps = 50;
  std::size_t warmups = 4;
  std::uint64_t seed = 0;
  std::string ack_mode;
  std::string out = ".";
  ff::SimTime compute_ns = 0;
};

/// Option handles for was-it-given checks.
struct OptFlags {
  CLI::Option* config = nullptr;
  CLI::Option* devices = nullptr;
  CLI::Option* sizes = nullptr;
  CLI::Option* ack_mode = nullptr;
  CLI::Option* out = nullptr;
};

OptFlags add_common_flags(CLI::App* sub, CommonOpts& o) {
  OptFlags f;
  f.config = sub->add_option(
      "--config", o.config,
      "Config file path or built-in name (wire-only, calibrated)");
  f.devices = sub->add_option("--devices", o.devices, "Pipeline device count")
                  ->check(CLI::Range(std::size_t{1}, std::size_t{6}));
  f.sizes = sub->add_option("--sizes", o.sizes,
                            "Comma-separated transfer sizes in bytes")
                ->delimiter(',');
  sub->add_option("--reps", o.reps, "Measured repetitions per scenario");
  sub->add_option("--warmups", o.warmups, "Discarded warm-up rounds");
  sub->add_option("--seed", o.seed, "Sweep seed (mixed with the config seed)");
  f.ack_mode =
      sub->add_option("--ack-mode", o.ack_mode,
                      "Packet acknowledgement discipline")
          ->check(CLI::IsMember({"serialized-rtt", "pipelined-oneway"}));
  f.out = sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--compute-ns", o.compute_ns,
                  "Per-device compute delay in ns")
      ->check(CLI::NonNegativeNumber);
  return f;
}

ff::FabricConfig resolve_config(const std::string& name) {
  if (auto builtin = ff::builtin_config(name)) {
    return *builtin;
  }
  return ff::parse_config(ff::read_file(name));
}

bool trace_enabled() {
  const char* v = std::getenv("FABRICFLOW_TRACE");
  return v != nullptr && std::string_view(v) == "1";
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::vector<std::uint64_t> effective_sizes(const std::vector<std::uint64_t>& given) {
  std::vector<std::uint64_t> sizes =
      given.empty() ? ff::default_size_ladder() : given;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

void print_summary_table(const std::vector<ff::ScenarioResult>& results) {
  std::printf("%-12s %7s %10s %12s %12s %12s %12s\n", "placement", "devices",
              "size", "median_ns", "min_ns", "mean_ns", "p95_ns");
  for (const ff::ScenarioResult& r : results) {
    const ff::SummaryStats s = ff::summarize(r.samples);
    std::printf("%-12s %7zu %10llu %12.1f %12lld %12.2f %12lld\n",
                std::string(to_string(r.placement)).c_str(), r.devices,
                static_cast<unsigned long long>(r.size), s.median_ns,
                static_cast<long long>(s.min_ns), s.mean_ns,
                static_cast<long long>(s.p95_ns));
  }
}

void print_csv_body(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '#') continue;
    std::printf("%s\n", line.c_str());
  }
}

/// Leading '#' comment lines of a CSV, stripped, for carrying a file's
/// provenance header forward into derived outputs.
std::vector<std::string> leading_comments(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() != '#') break;
    std::string_view body(line);
    body.remove_prefix(1);
    if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
    lines.emplace_back(body);
  }
  return lines;
}

ff::Band parse_band(const std::string& text, const std::string& flag) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw ff::CalibrationError(flag + " expects 'lo,hi'");
  }
  try {
    ff::Band band;
    band.lo = std::stod(text.substr(0, comma));
    band.hi = std::stod(text.substr(comma + 1));
    return band;
  } catch (const std::exception&) {
    throw ff::CalibrationError(flag + " expects two numbers 'lo,hi'");
  }
}

ff::CalibKnob knob_from_string(const std::string& name) {
  for (ff::CalibKnob k :
       {ff::CalibKnob::HandlingCycles, ff::CalibKnob::BridgeCrossNs,
        ff::CalibKnob::PerByteCrossNs, ff::CalibKnob::PerByteLocalNs}) {
    if (name == to_string(k)) return k;
  }
  throw ff::CalibrationError("unknown calibration knob '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fabricflow: deterministic latency simulator and benchmark for "
      "disaggregated device fabrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ff::kToolVersion));

  int exit_code = 0;

  // -- validate ------------------------------------------------------------
  auto vo = std::make_shared<CommonOpts>();
  CLI::App* validate = app.add_subcommand(
      "validate", "Parse and validate a config; print its normalized form");
  validate->add_option("--config", vo->config,
                       "Config file path or built-in name");
  validate->callback([vo]() {
    std::cout << ff::serialize_config(resolve_config(vo->config));
  });

  // -- run -----------------------------------------------------------------
  auto ro = std::make_shared<CommonOpts>();
  auto run_placement = std::make_shared<std::string>("distributed");
  CLI::App* run = app.add_subcommand(
      "run", "Benchmark one placement across the size list");
  auto rf = std::make_shared<OptFlags>(add_common_flags(run, *ro));
  run->add_option("--placement", *run_placement, "Placement to run")
      ->check(CLI::IsMember({"app-side", "central", "distributed"}));
  run->callback([ro, rf, run_placement]() {
    ff::FabricConfig cfg = resolve_config(ro->config);
    if (!ro->ack_mode.empty()) {
      cfg.ack_mode = ff::ack_mode_from_string(ro->ack_mode);
    }
    const ff::PlacementKind kind = ff::placement_from_string(*run_placement);
    const std::vector<std::uint64_t> sizes = effective_sizes(ro->sizes);
    const ff::PipelineSpec pipeline = ff::default_pipeline(cfg, ro->devices);
    ff::validate_pipeline(cfg, pipeline, kind);
    std::uint64_t buffer = ff::kDefaultBufferBytes;
    for (std::uint64_t s : sizes) buffer = std::max(buffer, s);

    std::vector<ff::ScenarioResult> results;
    std::vector<std::pair<std::string, std::string>> traces;
    for (std::uint64_t size : sizes) {
      ff::Fabric fabric(cfg,
                        ff::scenario_seed(ro->seed, kind, size, ro->devices));
      ff::Kernel kernel(fabric);
      ff::Scenario scenario = ff::build_scenario(fabric, kernel, kind,
                                                 pipeline, ro->compute_ns,
                                                 buffer);
      results.push_back(ff::run_scenario(fabric, scenario, size, ro->reps,
                                         ro->warmups));
      if (trace_enabled()) {
        traces.emplace_back("trace-" + std::string(to_string(kind)) + "-" +
                                std::to_string(size),
                            fabric.engine().export_trace());
      }
    }
    print_summary_table(results);

    if (rf->out->count() > 0) {
      ff::SweepOptions swo;
      swo.devices = ro->devices;
      swo.sizes = sizes;
      swo.repetitions = ro->reps;
      swo.warmups = ro->warmups;
      swo.seed = ro->seed;
      swo.compute_ns = ro->compute_ns;
      ff::RunManifest manifest = ff::make_manifest(cfg, ro->config, swo);
      manifest.placements = {std::string(to_string(kind))};
      manifest.outputs = {"run-samples.csv", "run-summary.csv"};
      ff::write_file(out_path(ro->out, "run-samples.csv"),
                     ff::samples_csv(manifest, results));
      ff::write_file(out_path(ro->out, "run-summary.csv"),
                     ff::summary_csv(manifest, results));
      std::printf("wrote %s\n", out_path(ro->out, "run-samples.csv").c_str());
      std::printf("wrote %s\n", out_path(ro->out, "run-summary.csv").c_str());
    }
    for (const auto& [stem, text] : traces) {
      ff::write_file(out_path(ro->out, stem + ".txt"), text);
      std::printf("wrote %s\n", out_path(ro->out, stem + ".txt").c_str());
    }
  });

  // -- sweep ---------------------------------------------------------------
  auto so = std::make_shared<CommonOpts>();
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Benchmark all three placements; write CSV + SVG reports");
  add_common_flags(sweep, *so);
  sweep->callback([so]() {
    ff::FabricConfig cfg = resolve_config(so->config);
    if (!so->ack_mode.empty()) {
      cfg.ack_mode = ff::ack_mode_from_string(so->ack_mode);
    }
    ff::SweepOptions swo;
    swo.devices = so->devices;
    swo.sizes = effective_sizes(so->sizes);
    swo.repetitions = so->reps;
    swo.warmups = so->warmups;
    swo.seed = so->seed;
    swo.compute_ns = so->compute_ns;
    swo.capture_traces = trace_enabled();

    const ff::SweepResult result = ff::run_sweep(cfg, swo);

    ff::RunManifest manifest = ff::make_manifest(cfg, so->config, swo);
    manifest.outputs = {"samples.csv", "summary.csv", "speedups.csv",
                        "latency.svg"};
    const std::string summary = ff::summary_csv(manifest, result.results);
    const std::string speedups = ff::speedup_csv(manifest, result.results);
    const std::string svg =
        ff::render_latency_svg(manifest, ff::parse_summary_csv(summary));

    print_summary_table(result.results);
    std::printf("\nspeedups:\n");
    print_csv_body(speedups);

    ff::write_file(out_path(so->out, "samples.csv"),
                   ff::samples_csv(manifest, result.results));
    ff::write_file(out_path(so->out, "summary.csv"), summary);
    ff::write_file(out_path(so->out, "speedups.csv"), speedups);
    ff::write_file(out_path(so->out, "latency.svg"), svg);
    for (const char* name :
         {"samples.csv", "summary.csv", "speedups.csv", "latency.svg"}) {
      std::printf("wrote %s\n", out_path(so->out, name).c_str());
    }
    for (const auto& [stem, text] : result.traces) {
      ff::write_file(out_path(so->out, stem + ".txt"), text);
      std::printf("wrote %s\n", out_path(so->out, stem + ".txt").c_str());
    }
  });

  // -- plot ----------------------------------------------------------------
  auto po = std::make_shared<CommonOpts>();
  auto plot_in = std::make_shared<std::string>();
  CLI::App* plot = app.add_subcommand(
      "plot", "Render a summary CSV as a latency line chart (SVG)");
  plot->add_option("--in", *plot_in, "Summary CSV to plot")->required();
  plot->add_option("--out", po->out, "Output directory");
  plot->callback([po, plot_in]() {
    const std::string text = ff::read_file(*plot_in);
    const std::vector<ff::SummaryRow> rows = ff::parse_summary_csv(text);

    std::string header;
    const std::vector<std::string> carried = leading_comments(text);
    if (!carried.empty()) {
      std::ostringstream os;
      os << "<!--\n";
      for (const std::string& line : carried) os << line << "\n";
      os << "-->\n";
      header = os.str();
    } else {
      ff::RunManifest manifest;
      manifest.config_name = *plot_in;
      manifest.config_hash = ff::fnv1a64(text);
      for (const ff::SummaryRow& r : rows) {
        if (std::find(manifest.placements.begin(), manifest.placements.end(),
                      r.placement) == manifest.placements.end()) {
          manifest.placements.push_back(r.placement);
        }
        if (std::find(manifest.device_counts.begin(),
                      manifest.device_counts.end(),
                      r.devices) == manifest.device_counts.end()) {
          manifest.device_counts.push_back(r.devices);
        }
        if (std::find(manifest.sizes.begin(), manifest.sizes.end(),
                      r.size_bytes) == manifest.sizes.end()) {
          manifest.sizes.push_back(r.size_bytes);
        }
      }
      std::sort(manifest.sizes.begin(), manifest.sizes.end());
      manifest.repetitions = 0;
      manifest.warmups = 0;
      manifest.ack_mode = "unknown";
      manifest.outputs = {"latency.svg"};
      header = ff::manifest_xml_comment(manifest);
    }

    const std::string svg = ff::render_latency_svg(header, rows);
    ff::write_file(out_path(po->out, "latency.svg"), svg);
    std::printf("wrote %s\n", out_path(po->out, "latency.svg").c_str());
  });

  // -- calibrate -----------------------------------------------------------
  auto co = std::make_shared<CommonOpts>();
  auto band_app = std::make_shared<std::string>("0.45,0.67");
  auto band_central = std::make_shared<std::string>("0.21,0.28");
  auto knob_names = std::make_shared<std::vector<std::string>>();
  CLI::App* calibrate = app.add_subcommand(
      "calibrate",
      "Grid-search cost knobs until the placement speedups hit the target "
      "bands; write calibrated.json");
  auto cf = std::make_shared<OptFlags>(add_common_flags(calibrate, *co));
  calibrate->add_option("--band-app", *band_app,
                        "Target dist-vs-app-side speedup band 'lo,hi'");
  calibrate->add_option("--band-central", *band_central,
                        "Target dist-vs-central speedup band 'lo,hi'");
  calibrate->add_option("--knobs", *knob_names,
                        "Comma-separated knobs to search "
                        "(handling_cycles, bridge_cross_ns, "
                        "per_byte_ns_cross, per_byte_ns_local)")
      ->delimiter(',');
  calibrate->callback([co, cf, band_app, band_central, knob_names]() {
    const ff::FabricConfig base = resolve_config(co->config);
    const ff::PipelineSpec pipeline = ff::default_pipeline(base, co->devices);

    ff::CalibrationTargets targets;
    targets.dist_vs_app = parse_band(*band_app, "--band-app");
    targets.dist_vs_central = parse_band(*band_central, "--band-central");
    if (cf->sizes->count() > 0) {
      targets.sizes = effective_sizes(co->sizes);
    }

    std::vector<ff::CalibKnob> knobs;
    if (knob_names->empty()) {
      knobs = ff::default_calibration_knobs();
    } else {
      for (const std::string& name : *knob_names) {
        if (!name.empty()) knobs.push_back(knob_from_string(name));
      }
    }

    const ff::FabricConfig result =
        ff::calibrate(base, pipeline, targets, knobs);

    std::printf("calibrated knobs:\n");
    std::printf("  handling_cycles   %llu\n",
                static_cast<unsigned long long>(result.handling_cycles));
    std::printf("  bridge_cross_ns   %lld\n",
                static_cast<long long>(result.bridge_cross_ns));
    std::printf("  per_byte_ns_cross %g\n", result.per_byte_ns_cross);
    std::printf("  per_byte_ns_local %g\n", result.per_byte_ns_local);
    for (std::uint64_t size : targets.sizes) {
      const ff::SimTime t_app =
          ff::predict(result, ff::PlacementKind::AppSide, pipeline, size)
              .total_ns;
      const ff::SimTime t_cen =
          ff::predict(result, ff::PlacementKind::Central, pipeline, size)
              .total_ns;
      const ff::SimTime t_dist =
          ff::predict(result, ff::PlacementKind::Distributed, pipeline, size)
              .total_ns;
      std::printf("  %llu B: vs-app %.6f, vs-central %.6f\n",
                  static_cast<unsigned long long>(size),
                  (static_cast<double>(t_app) - static_cast<double>(t_dist)) /
                      static_cast<double>(t_app),
                  (static_cast<double>(t_cen) - static_cast<double>(t_dist)) /
                      static_cast<double>(t_cen));
    }

    ff::write_file(out_path(co->out, "calibrated.json"),
                   ff::serialize_config(result));
    std::printf("wrote %s\n", out_path(co->out, "calibrated.json").c_str());
  });

  // -- oracle-check --------------------------------------------------------
  auto oo = std::make_shared<CommonOpts>();
  CLI::App* oracle = app.add_subcommand(
      "oracle-check",
      "Cross-check the event simulator against the closed-form model over "
      "the full scenario grid");
  auto of = std::make_shared<OptFlags>(add_common_flags(oracle, *oo));
  oracle->callback([oo, of, &exit_code]() {
    ff::OracleSweepOptions options = ff::default_oracle_sweep();
    if (of->config->count() > 0) {
      options.configs = {{oo->config, resolve_config(oo->config)}};
    }
    if (of->sizes->count() > 0) {
      options.sizes = effective_sizes(oo->sizes);
    }
    if (of->devices->count() > 0) {
      options.device_counts = {oo->devices};
    }
    if (of->ack_mode->count() > 0) {
      options.ack_modes = {ff::ack_mode_from_string(oo->ack_mode)};
    }
    options.compute_ns = oo->compute_ns;

    const ff::OracleCheckReport report = ff::validate_against_sim(options);

    ff::RunManifest manifest;
    std::string all_serialized;
    for (std::size_t i = 0; i < options.configs.size(); ++i) {
      if (i > 0) manifest.config_name += ",";
      manifest.config_name += options.configs[i].first;
      all_serialized += ff::serialize_config(options.configs[i].second);
    }
    manifest.config_hash = ff::fnv1a64(all_serialized);
    for (ff::PlacementKind p : options.placements) {
      manifest.placements.emplace_back(to_string(p));
    }
    manifest.device_counts = options.device_counts;
    manifest.sizes = options.sizes;
    manifest.repetitions = 1;
    manifest.warmups = 0;
    for (std::size_t i = 0; i < options.ack_modes.size(); ++i) {
      if (i > 0) manifest.ack_mode += ",";
      manifest.ack_mode += to_string(options.ack_modes[i]);
    }
    manifest.compute_ns = options.compute_ns;
    manifest.outputs = {"oracle.csv"};

    ff::write_file(out_path(oo->out, "oracle.csv"),
                   ff::oracle_csv(manifest, report));
    std::printf("checked %zu scenarios: %zu mismatches\n",
                report.rows.size(), report.mismatches);
    std::size_t shown = 0;
    for (const ff::OracleCheckRow& row : report.rows) {
      if (row.match || shown == 5) continue;
      std::printf("  %s %llu B N=%zu %s %s: sim %lld ns, model %lld ns (%s)\n",
                  std::string(to_string(row.placement)).c_str(),
                  static_cast<unsigned long long>(row.size), row.n_devices,
                  std::string(to_string(row.ack_mode)).c_str(),
                  row.config_name.c_str(), static_cast<long long>(row.sim_ns),
                  static_cast<long long>(row.oracle_ns), row.detail.c_str());
      ++shown;
    }
    std::printf("wrote %s\n", out_path(oo->out, "oracle.csv").c_str());
    if (report.mismatches > 0) {
      exit_code = 3;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ff::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ff::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ff::CalibrationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ff::ReportError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return exit_code;
}
