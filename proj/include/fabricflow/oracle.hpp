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
#include <string>
#include <utility>
#include <vector>

#include "fabricflow/config.hpp"
#include "fabricflow/placement.hpp"

namespace fabricflow {

/// Closed-form latency model for the push protocol, written independently
/// of the event-driven simulator: it reads only the raw config fields and
/// shares no cost-computation code with the engine, so the exact agreement
/// of the two implementations is a meaningful cross-check of both.

/// Cost of one sender-to-receiver push, decomposed:
///  - packet_ns:   moving the payload into the receiver's buffer,
///  - notify_ns:   the trailing notification message's wire trip,
///  - handling_ns: sender-side issue plus receiver-side pickup.
/// total() is what the simulator measures from push start to the moment
/// the receiving core has handled the notification.
struct LegCost {
  Hop hop;
  std::uint64_t size = 0;
  SimTime packet_ns = 0;
  SimTime notify_ns = 0;
  SimTime handling_ns = 0;

  SimTime total() const { return packet_ns + notify_ns + handling_ns; }
};

LegCost push_leg_cost(const FabricConfig& config, const Hop& hop,
                      std::uint64_t size);

/// Shorthand for push_leg_cost(...).total().
SimTime push_leg(const FabricConfig& config, const Hop& hop,
                 std::uint64_t size);

/// One step of a predicted pipeline timeline: a push leg or a device
/// compute phase. The steps sum exactly to the predicted total.
struct PredictedStep {
  std::string label;
  bool is_compute = false;
  SimTime ns = 0;
};

struct Prediction {
  SimTime total_ns = 0;
  std::vector<PredictedStep> steps;
};

/// End-to-end latency of one pipeline walk under the given placement.
/// Every stage moves `size` bytes; each device charges `compute_ns` after
/// its notification is handled, before forwarding.
Prediction predict(const FabricConfig& config, PlacementKind placement,
                   const PipelineSpec& pipeline, std::uint64_t size,
                   SimTime compute_ns = 0);

/// One simulator-vs-model comparison.
struct OracleCheckRow {
  PlacementKind placement = PlacementKind::AppSide;
  std::uint64_t size = 0;
  std::size_t n_devices = 0;
  AckMode ack_mode = AckMode::SerializedRtt;
  std::string config_name;
  SimTime sim_ns = 0;
  SimTime oracle_ns = 0;
  bool match = false;
  std::string detail;  ///< First divergent leg when !match.
};

struct OracleCheckReport {
  std::vector<OracleCheckRow> rows;
  std::size_t mismatches = 0;
};

/// The cross product validate_against_sim() walks.
struct OracleSweepOptions {
  std::vector<std::pair<std::string, FabricConfig>> configs;
  std::vector<PlacementKind> placements;
  std::vector<std::uint64_t> sizes;
  std::vector<std::size_t> device_counts;
  std::vector<AckMode> ack_modes;
  SimTime compute_ns = 0;
};

/// Both built-in configs x all placements x the default size ladder x
/// N in 1..4 x both ack modes (432 scenarios).
OracleSweepOptions default_oracle_sweep();

/// 256 B .. 64 KiB in powers of two.
std::vector<std::uint64_t> default_size_ladder();

/// Run one scenario through the event simulator (under sim_config) and
/// through the closed-form model (under oracle_config; normally the same
/// config) and compare end-to-end and leg-by-leg. The ack mode overrides
/// whatever the configs carry. Mismatches are reported, not thrown; jitter
/// in either config is refused with ConfigError (the model is jitter-free).
OracleCheckRow check_scenario(const FabricConfig& sim_config,
                              const FabricConfig& oracle_config,
                              const std::string& config_name,
                              PlacementKind placement, std::size_t n_devices,
                              std::uint64_t size, AckMode ack_mode,
                              SimTime compute_ns = 0);

/// check_scenario over the whole cross product.
OracleCheckReport validate_against_sim(const OracleSweepOptions& options);

}  // namespace fabricflow
