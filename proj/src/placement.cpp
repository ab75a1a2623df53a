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

#include "fabricflow/placement.hpp"

#include <algorithm>
#include <unordered_set>

namespace fabricflow {

std::string_view to_string(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::AppSide: return "app-side";
    case PlacementKind::Central: return "central";
    case PlacementKind::Distributed: return "distributed";
  }
  return "?";
}

PlacementKind placement_from_string(std::string_view name) {
  if (name == "app-side") return PlacementKind::AppSide;
  if (name == "central") return PlacementKind::Central;
  if (name == "distributed") return PlacementKind::Distributed;
  throw ConfigError("unknown placement '" + std::string(name) +
                    "' (expected app-side, central or distributed)");
}

const std::vector<PlacementKind>& all_placements() {
  static const std::vector<PlacementKind> kAll = {
      PlacementKind::AppSide, PlacementKind::Central,
      PlacementKind::Distributed};
  return kAll;
}

void validate_pipeline(const FabricConfig& config, const PipelineSpec& pipeline,
                       PlacementKind kind) {
  if (pipeline.devices.empty()) {
    throw ConfigError("pipeline needs at least one device");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& id : pipeline.devices) {
    if (!config.has_tile(id)) {
      throw ConfigError("pipeline device '" + id + "' is not a tile");
    }
    const TileSpec& tile = config.tile(id);
    if (tile.kind != TileKind::DeviceControl) {
      throw ConfigError("pipeline device '" + id +
                        "' is not a device-control tile");
    }
    if (!seen.insert(id).second) {
      throw ConfigError("pipeline device '" + id + "' listed twice");
    }
  }
  const std::string& device_machine =
      config.tile(pipeline.devices.front()).machine;
  for (const std::string& id : pipeline.devices) {
    if (config.tile(id).machine != device_machine) {
      throw ConfigError("pipeline devices span machines ('" + id +
                        "' is not on '" + device_machine + "')");
    }
  }

  if (!config.has_tile(pipeline.app_tile)) {
    throw ConfigError("pipeline app tile '" + pipeline.app_tile +
                      "' is not a tile");
  }
  const TileSpec& app = config.tile(pipeline.app_tile);
  if (app.kind != TileKind::AppCpu) {
    throw ConfigError("pipeline app tile '" + pipeline.app_tile +
                      "' is not an app CPU");
  }
  if (app.machine == device_machine) {
    throw ConfigError(
        "pipeline app tile must live on a different machine than the "
        "devices");
  }

  if (kind == PlacementKind::Central && pipeline.pool_cpu.empty()) {
    throw ConfigError("central placement needs a pool CPU in the pipeline");
  }
  if (!pipeline.pool_cpu.empty()) {
    if (!config.has_tile(pipeline.pool_cpu)) {
      throw ConfigError("pipeline pool CPU '" + pipeline.pool_cpu +
                        "' is not a tile");
    }
    const TileSpec& pool = config.tile(pipeline.pool_cpu);
    if (pool.kind != TileKind::PoolCpu) {
      throw ConfigError("pipeline pool CPU '" + pipeline.pool_cpu +
                        "' is not a pool CPU");
    }
    if (pool.machine != device_machine) {
      throw ConfigError(
          "pipeline pool CPU must be colocated with the devices");
    }
  }
}

PipelineSpec default_pipeline(const FabricConfig& config,
                              std::size_t n_devices) {
  if (n_devices == 0) {
    throw ConfigError("pipeline needs at least one device");
  }
  PipelineSpec spec;
  for (const TileSpec& tile : config.tiles) {
    if (tile.kind == TileKind::AppCpu) {
      spec.app_tile = tile.id;
      break;
    }
  }
  if (spec.app_tile.empty()) {
    throw ConfigError("config has no app CPU tile");
  }

  std::string device_machine;
  for (const TileSpec& tile : config.tiles) {
    if (tile.kind != TileKind::DeviceControl) continue;
    if (device_machine.empty()) device_machine = tile.machine;
    if (tile.machine != device_machine) continue;
    spec.devices.push_back(tile.id);
    if (spec.devices.size() == n_devices) break;
  }
  if (spec.devices.size() < n_devices) {
    throw ConfigError("config has only " +
                      std::to_string(spec.devices.size()) +
                      " device-control tiles on machine '" + device_machine +
                      "', need " + std::to_string(n_devices));
  }
  if (config.tile(spec.app_tile).machine == device_machine) {
    throw ConfigError(
        "default pipeline needs the app CPU on a different machine than "
        "the devices");
  }

  for (const TileSpec& tile : config.tiles) {
    if (tile.kind == TileKind::PoolCpu && tile.machine == device_machine) {
      spec.pool_cpu = tile.id;
      break;
    }
  }
  return spec;
}

}  // namespace fabricflow
