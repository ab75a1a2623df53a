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

#include "fabricflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "fabricflow/oracle.hpp"
#include "fabricflow/report.hpp"

namespace fabricflow {

Scenario build_scenario(Fabric& fabric, Kernel& kernel,
                        PlacementKind placement, const PipelineSpec& pipeline,
                        SimTime compute_ns, std::uint64_t buffer_bytes,
                        std::string_view tenant) {
  const FabricConfig& config = fabric.config();
  validate_pipeline(config, pipeline, placement);

  Scenario scenario;
  scenario.placement = placement;
  scenario.pipeline = pipeline;
  scenario.tenant = std::string(tenant);

  std::vector<std::pair<std::string, std::string>> hops;
  const std::string& app = pipeline.app_tile;
  switch (placement) {
    case PlacementKind::AppSide:
      for (const std::string& d : pipeline.devices) {
        hops.emplace_back(app, d);
        hops.emplace_back(d, app);
      }
      break;
    case PlacementKind::Central: {
      const std::string& cpu = pipeline.pool_cpu;
      hops.emplace_back(app, cpu);
      for (const std::string& d : pipeline.devices) {
        hops.emplace_back(cpu, d);
        hops.emplace_back(d, cpu);
      }
      hops.emplace_back(cpu, app);
      break;
    }
    case PlacementKind::Distributed:
      hops.emplace_back(app, pipeline.devices.front());
      for (std::size_t i = 0; i + 1 < pipeline.devices.size(); ++i) {
        hops.emplace_back(pipeline.devices[i], pipeline.devices[i + 1]);
      }
      hops.emplace_back(pipeline.devices.back(), app);
      break;
  }

  auto activity_of = [&](const std::string& tile) {
    auto it = scenario.activities.find(tile);
    if (it != scenario.activities.end()) return it->second;
    const Activity& act = kernel.create_activity(tile, tenant);
    scenario.activities.emplace(tile, act.id);
    return act.id;
  };

  for (const auto& [src, dst] : hops) {
    ChannelHandle handle = kernel.establish_channel(
        activity_of(src), activity_of(dst), /*slots=*/1,
        /*slot_bytes=*/config.control_msg_bytes, buffer_bytes);
    auto channel =
        std::make_unique<DataChannel>(fabric, handle, src + "->" + dst);
    if (config.tile(dst).kind == TileKind::DeviceControl) {
      channel->set_compute_delay(compute_ns);
    }
    scenario.path.push_back(channel.get());
    scenario.channels.push_back(std::move(channel));
  }
  return scenario;
}

ScenarioResult run_scenario(Fabric& fabric, Scenario& scenario,
                            std::uint64_t size, std::size_t repetitions,
                            std::size_t warmups) {
  if (repetitions < 1) {
    throw std::invalid_argument("need at least one repetition");
  }
  Engine& eng = fabric.engine();
  ScenarioResult result;
  result.placement = scenario.placement;
  result.devices = scenario.pipeline.devices.size();
  result.size = size;
  result.warmups_discarded = warmups;

  const std::size_t rounds = warmups + repetitions;
  for (std::size_t round = 0; round < rounds; ++round) {
    const SimTime t0 = eng.now();
    SimTime end_abs = -1;
    eng.note("bench", "round-start");
    start_chain(scenario.path, size, [&end_abs](SimTime t) { end_abs = t; });
    eng.run_until_idle();
    eng.note("bench", "round-done");
    if (end_abs < t0) {
      std::string diag;
      for (const auto& ch : scenario.channels) {
        auto rec = ch->current_record();
        if (rec && !rec->ok) {
          diag += " [" + ch->name() + ": " + rec->error + ", " +
                  std::to_string(rec->packets_done) + "/" +
                  std::to_string(rec->packets_total) + " packets]";
        }
      }
      throw SimError("benchmark round " + std::to_string(round + 1) +
                     " did not complete" + (diag.empty() ? "" : ":" + diag));
    }
    const SimTime sample = end_abs - t0;
    for (auto& ch : scenario.channels) ch->reset();
    if (round >= warmups) result.samples.push_back(sample);
  }
  return result;
}

SummaryStats summarize(const std::vector<SimTime>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("no samples to summarize");
  }
  std::vector<SimTime> s(samples);
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();

  SummaryStats stats;
  stats.min_ns = s.front();
  if (n % 2 == 1) {
    stats.median_ns = static_cast<double>(s[n / 2]);
  } else {
    stats.median_ns =
        (static_cast<double>(s[n / 2 - 1]) + static_cast<double>(s[n / 2])) /
        2.0;
  }
  long double sum = 0.0L;
  for (SimTime v : s) sum += static_cast<long double>(v);
  stats.mean_ns = static_cast<double>(sum / static_cast<long double>(n));
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  stats.p95_ns = s[rank - 1];
  return stats;
}

double speedup(const ScenarioResult& a, const ScenarioResult& b) {
  if (a.size != b.size) {
    throw std::invalid_argument("speedup over different sizes");
  }
  if (a.devices != b.devices) {
    throw std::invalid_argument("speedup over different device counts");
  }
  const double ma = summarize(a.samples).median_ns;
  const double mb = summarize(b.samples).median_ns;
  return (mb - ma) / mb;
}

// -- calibration -----------------------------------------------------------

std::string_view to_string(CalibKnob knob) {
  switch (knob) {
    case CalibKnob::HandlingCycles: return "handling_cycles";
    case CalibKnob::BridgeCrossNs: return "bridge_cross_ns";
    case CalibKnob::PerByteCrossNs: return "per_byte_ns_cross";
    case CalibKnob::PerByteLocalNs: return "per_byte_ns_local";
  }
  return "?";
}

const std::vector<CalibKnob>& default_calibration_knobs() {
  static const std::vector<CalibKnob> kKnobs = {CalibKnob::HandlingCycles,
                                                CalibKnob::BridgeCrossNs};
  return kKnobs;
}

namespace {

/// Fixed search grid per knob. The grids are part of the tool's contract:
/// rerunning the calibration always visits the same points in the same
/// order, so the result is reproducible.
std::vector<double> knob_grid(CalibKnob knob) {
  switch (knob) {
    case CalibKnob::HandlingCycles:
      return {0, 100, 200, 400, 800, 1600, 3200};
    case CalibKnob::BridgeCrossNs: {
      std::vector<double> grid;
      for (int v = 0; v <= 2000; v += 25) grid.push_back(v);
      return grid;
    }
    case CalibKnob::PerByteCrossNs:
    case CalibKnob::PerByteLocalNs:
      return {0.0, 0.0125, 0.025, 0.05, 0.1, 0.2, 0.4};
  }
  return {};
}

void apply_knob(FabricConfig& config, CalibKnob knob, double value) {
  switch (knob) {
    case CalibKnob::HandlingCycles:
      config.handling_cycles = static_cast<std::uint64_t>(value);
      break;
    case CalibKnob::BridgeCrossNs:
      config.bridge_cross_ns = static_cast<SimTime>(value);
      break;
    case CalibKnob::PerByteCrossNs:
      config.per_byte_ns_cross = value;
      break;
    case CalibKnob::PerByteLocalNs:
      config.per_byte_ns_local = value;
      break;
  }
}

double fraction_faster(SimTime fast, SimTime slow) {
  return (static_cast<double>(slow) - static_cast<double>(fast)) /
         static_cast<double>(slow);
}

double band_violation(const Band& band, double v) {
  return std::max(0.0, band.lo - v) + std::max(0.0, v - band.hi);
}

}  // namespace

FabricConfig calibrate(const FabricConfig& base, const PipelineSpec& pipeline,
                       const CalibrationTargets& targets,
                       const std::vector<CalibKnob>& knobs) {
  for (const Band& band : {targets.dist_vs_app, targets.dist_vs_central}) {
    if (!(band.lo <= band.hi) || band.lo < 0.0 || band.hi >= 1.0) {
      std::ostringstream os;
      os << "malformed speedup band [" << band.lo << ", " << band.hi
         << "]: need 0 <= lo <= hi < 1";
      throw CalibrationError(os.str());
    }
  }
  if (targets.dist_vs_app.lo <= targets.dist_vs_central.hi) {
    throw CalibrationError(
        "bands are not orderable: the dist-vs-app-side band must lie above "
        "the dist-vs-central band");
  }
  if (targets.sizes.empty()) {
    throw CalibrationError("calibration needs at least one target size");
  }
  if (knobs.empty()) {
    throw CalibrationError("calibration needs at least one knob to search");
  }
  validate_pipeline(base, pipeline, PlacementKind::Central);

  double best_violation = std::numeric_limits<double>::infinity();
  std::string best_desc;
  std::vector<double> values(knobs.size(), 0.0);
  std::optional<FabricConfig> found;

  std::function<void(std::size_t)> walk = [&](std::size_t k) {
    if (found) return;
    if (k < knobs.size()) {
      for (double v : knob_grid(knobs[k])) {
        values[k] = v;
        walk(k + 1);
        if (found) return;
      }
      return;
    }
    FabricConfig cand = base;
    for (std::size_t i = 0; i < knobs.size(); ++i) {
      apply_knob(cand, knobs[i], values[i]);
    }
    double violation = 0.0;
    bool inside = true;
    std::ostringstream desc;
    for (std::size_t i = 0; i < knobs.size(); ++i) {
      if (i > 0) desc << ", ";
      desc << to_string(knobs[i]) << "=" << values[i];
    }
    for (std::uint64_t size : targets.sizes) {
      const SimTime t_app =
          predict(cand, PlacementKind::AppSide, pipeline, size).total_ns;
      const SimTime t_cen =
          predict(cand, PlacementKind::Central, pipeline, size).total_ns;
      const SimTime t_dist =
          predict(cand, PlacementKind::Distributed, pipeline, size).total_ns;
      const double s_app = fraction_faster(t_dist, t_app);
      const double s_cen = fraction_faster(t_dist, t_cen);
      violation += band_violation(targets.dist_vs_app, s_app) +
                   band_violation(targets.dist_vs_central, s_cen);
      if (!targets.dist_vs_app.contains(s_app) ||
          !targets.dist_vs_central.contains(s_cen)) {
        inside = false;
      }
      desc << " | " << size << " B: vs-app " << s_app << ", vs-central "
           << s_cen;
    }
    if (inside) {
      found = cand;
      return;
    }
    if (violation < best_violation) {
      best_violation = violation;
      best_desc = desc.str();
    }
  };
  walk(0);

  if (!found) {
    throw CalibrationError(
        "no grid point satisfies the speedup bands; nearest miss: " +
        best_desc);
  }
  validate_config(*found);
  return *found;
}

// -- sweeps ----------------------------------------------------------------

std::uint64_t scenario_seed(std::uint64_t sweep_seed, PlacementKind placement,
                            std::uint64_t size, std::size_t devices) {
  std::ostringstream key;
  key << sweep_seed << "|" << to_string(placement) << "|" << size << "|"
      << devices;
  return fnv1a64(key.str());
}

SweepResult run_sweep(const FabricConfig& config, const SweepOptions& options) {
  std::vector<std::uint64_t> sizes =
      options.sizes.empty() ? default_size_ladder() : options.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::uint64_t buffer = kDefaultBufferBytes;
  for (std::uint64_t s : sizes) buffer = std::max(buffer, s);

  const PipelineSpec pipeline = default_pipeline(config, options.devices);

  SweepResult out;
  for (PlacementKind placement : all_placements()) {
    validate_pipeline(config, pipeline, placement);
    for (std::uint64_t size : sizes) {
      Fabric fabric(config,
                    scenario_seed(options.seed, placement, size,
                                  options.devices));
      Kernel kernel(fabric);
      Scenario scenario = build_scenario(fabric, kernel, placement, pipeline,
                                         options.compute_ns, buffer);
      out.results.push_back(run_scenario(fabric, scenario, size,
                                         options.repetitions,
                                         options.warmups));
      if (options.capture_traces) {
        out.traces.emplace_back("trace-" +
                                    std::string(to_string(placement)) + "-" +
                                    std::to_string(size),
                                fabric.engine().export_trace());
      }
    }
  }
  return out;
}

}  // namespace fabricflow
