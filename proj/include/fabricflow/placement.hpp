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

#include <string>
#include <string_view>
#include <vector>

#include "fabricflow/config.hpp"

namespace fabricflow {

/// Where the pipeline-orchestration logic runs.
///
///  - AppSide:     the application tile drives every stage itself (one
///                 round trip per device stage).
///  - Central:     a pool CPU colocated with the devices orchestrates; the
///                 app pays one cross-machine round trip, the pool pays a
///                 local round trip per stage.
///  - Distributed: each device forwards directly to its successor; only the
///                 first and last legs cross machines for the app.
enum class PlacementKind { AppSide, Central, Distributed };

std::string_view to_string(PlacementKind kind);
PlacementKind placement_from_string(std::string_view name);

/// All placement kinds in canonical presentation order.
const std::vector<PlacementKind>& all_placements();

/// The concrete tiles a benchmark scenario runs on. `pool_cpu` is only
/// consulted by the Central placement (and must then be set).
struct PipelineSpec {
  std::string app_tile;
  std::vector<std::string> devices;
  std::string pool_cpu;  ///< empty = none
};

/// Checks that the tiles exist, have fitting roles and localities:
/// devices are non-empty, distinct device-control tiles on one shared
/// machine; the app tile is an app CPU on a different machine; the pool
/// CPU (when given) is a pool CPU on the device machine. Central requires
/// a pool CPU. Throws ConfigError on violation.
void validate_pipeline(const FabricConfig& config, const PipelineSpec& pipeline,
                       PlacementKind kind);

/// Picks the first app CPU, the first `n_devices` device-control tiles
/// (all on the machine of the first one) and the first pool CPU on that
/// machine. Throws ConfigError if the config cannot supply them.
PipelineSpec default_pipeline(const FabricConfig& config,
                              std::size_t n_devices);

}  // namespace fabricflow
