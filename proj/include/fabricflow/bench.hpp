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

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fabricflow/channel.hpp"
#include "fabricflow/placement.hpp"

namespace fabricflow {

/// Memory window size granted to every benchmark channel; callers pass a
/// larger value when pushing more than 1 MiB per stage.
inline constexpr std::uint64_t kDefaultBufferBytes = 1ull << 20;

/// A fully wired benchmark topology over one fabric: activities on every
/// pipeline tile plus the placement's channels, held in orchestration
/// order. The channel-count law per placement over N devices:
/// app-side 2N, central 2N+2, distributed N+1.
struct Scenario {
  PlacementKind placement = PlacementKind::AppSide;
  PipelineSpec pipeline;
  std::string tenant;
  std::map<std::string, std::uint64_t> activities;  ///< tile -> activity id
  std::vector<std::unique_ptr<DataChannel>> channels;
  std::vector<DataChannel*> path;  ///< channels in orchestration order
};

/// Create activities and establish the placement's channels (slots=1,
/// slot_bytes=control message size, `buffer_bytes` memory window each).
/// Channels whose receiver is a device-control tile charge `compute_ns`
/// between notify handling and forwarding.
Scenario build_scenario(Fabric& fabric, Kernel& kernel,
                        PlacementKind placement, const PipelineSpec& pipeline,
                        SimTime compute_ns = 0,
                        std::uint64_t buffer_bytes = kDefaultBufferBytes,
                        std::string_view tenant = "bench");

/// Latency samples of one (placement, size) measurement.
struct ScenarioResult {
  PlacementKind placement = PlacementKind::AppSide;
  std::size_t devices = 0;
  std::uint64_t size = 0;
  std::vector<SimTime> samples;  ///< length == repetitions, all > 0
  std::size_t warmups_discarded = 0;
};

/// Drive `warmups + repetitions` rounds through the scenario. Each round
/// starts only after the previous one has fully completed (all responses
/// home, engine idle); its sample is the time from the application's first
/// push start until the final inbound notification is handled at the app
/// tile. Warmup samples are discarded. Rounds are marked in the trace with
/// `round-start` / `round-done`.
ScenarioResult run_scenario(Fabric& fabric, Scenario& scenario,
                            std::uint64_t size, std::size_t repetitions,
                            std::size_t warmups);

/// Order statistics over one sample set. Median is the average of the two
/// middle values for even counts; p95 is the nearest-rank 95th percentile.
struct SummaryStats {
  double median_ns = 0.0;
  SimTime min_ns = 0;
  double mean_ns = 0.0;
  SimTime p95_ns = 0;
};

SummaryStats summarize(const std::vector<SimTime>& samples);

/// How much faster `a` is than `b`: (median(b) - median(a)) / median(b).
/// Both results must cover the same size and device count.
double speedup(const ScenarioResult& a, const ScenarioResult& b);

// -- calibration -----------------------------------------------------------

/// Closed target interval for a speedup fraction.
struct Band {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Calibration goal: distributed-vs-app-side and distributed-vs-central
/// speedups inside their bands at every listed size.
struct CalibrationTargets {
  Band dist_vs_app{0.45, 0.67};
  Band dist_vs_central{0.21, 0.28};
  std::vector<std::uint64_t> sizes{4096, 16384};
};

/// Cost knobs the calibration grid search may move.
enum class CalibKnob {
  HandlingCycles,
  BridgeCrossNs,
  PerByteCrossNs,
  PerByteLocalNs,
};

std::string_view to_string(CalibKnob knob);
const std::vector<CalibKnob>& default_calibration_knobs();

/// No grid point satisfied the bands (or the bands themselves are
/// impossible); the message carries the nearest miss.
class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Deterministic grid search: the listed knobs are swept over fixed,
/// documented grids (first knob outermost), every other field stays at
/// `base`'s value, and candidates are scored with the closed-form model
/// over `pipeline`. Returns the first candidate whose speedups sit inside
/// both bands at every target size; throws CalibrationError otherwise.
FabricConfig calibrate(
    const FabricConfig& base, const PipelineSpec& pipeline,
    const CalibrationTargets& targets = CalibrationTargets{},
    const std::vector<CalibKnob>& knobs = default_calibration_knobs());

// -- sweeps ----------------------------------------------------------------

struct SweepOptions {
  std::size_t devices = 2;
  std::vector<std::uint64_t> sizes;  ///< empty = default size ladder
  std::size_t repetitions = 50;
  std::size_t warmups = 4;
  std::uint64_t seed = 0;
  SimTime compute_ns = 0;
  bool capture_traces = false;
};

struct SweepResult {
  std::vector<ScenarioResult> results;  ///< placement-major, sizes ascending
  /// (file stem, trace text) per scenario when capture_traces is set.
  std::vector<std::pair<std::string, std::string>> traces;
};

/// One fresh fabric per (placement, size) cell, seeded deterministically
/// from (config seed, sweep seed, placement, size, devices). Cells are
/// evaluated and merged in deterministic placement-major order.
SweepResult run_sweep(const FabricConfig& config, const SweepOptions& options);

/// The per-scenario engine seed run_sweep uses (exposed for reproduction).
std::uint64_t scenario_seed(std::uint64_t sweep_seed, PlacementKind placement,
                            std::uint64_t size, std::size_t devices);

}  // namespace fabricflow
