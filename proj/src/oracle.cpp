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

#include "fabricflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fabricflow/bench.hpp"
#include "fabricflow/channel.hpp"

namespace fabricflow {

namespace {

/// Wire parameters of one hop, read straight from the raw config fields
/// (deliberately not through the engine's accessors).
struct WireParams {
  SimTime rtt = 0;
  SimTime one_way = 0;
  SimTime bridge = 0;
  double per_byte = 0.0;
};

WireParams wire_params(const FabricConfig& config, const TileSpec& src,
                       const TileSpec& dst) {
  WireParams w;
  const bool cross = src.machine != dst.machine;
  w.rtt = cross ? config.inter_machine_rtt_ns : config.intra_machine_rtt_ns;
  w.one_way = w.rtt / 2;
  w.bridge = cross ? config.bridge_cross_ns : config.bridge_local_ns;
  w.per_byte = cross ? config.per_byte_ns_cross : config.per_byte_ns_local;
  return w;
}

SimTime byte_cost(double per_byte, std::uint64_t bytes) {
  if (per_byte == 0.0) return 0;
  return std::llround(static_cast<double>(bytes) * per_byte);
}

/// round(handling_cycles / clock_hz * 1e9) without floating point.
SimTime pickup_cost(const FabricConfig& config, const TileSpec& tile) {
  if (config.handling_cycles == 0) return 0;
  const unsigned __int128 numerator =
      static_cast<unsigned __int128>(config.handling_cycles) *
      1'000'000'000ull;
  return static_cast<SimTime>((numerator + tile.clock_hz / 2) /
                              tile.clock_hz);
}

/// Time to land `size` bytes in the receiver's buffer.
///
/// Serialized-rtt: one packet outstanding, each pays a full round trip:
///   sum over packets of (RTT + 2*bridge + packet_bytes_i*per_byte).
/// Pipelined-oneway: packets leave back to back, one full-packet
/// serialization apart; the last lands one bridge-delayed trip after all
/// bytes are on the wire:
///   (P-1)*cost(packet_bytes) + one_way + bridge + cost(size).
/// Zero bytes need zero packets and zero time.
SimTime packet_time(const FabricConfig& config, const WireParams& w,
                    std::uint64_t size) {
  if (size == 0) return 0;
  const std::uint64_t pkt = config.packet_bytes;
  const std::uint64_t packets = (size + pkt - 1) / pkt;

  if (config.ack_mode == AckMode::SerializedRtt) {
    SimTime total = 0;
    for (std::uint64_t i = 0; i < packets; ++i) {
      const std::uint64_t bytes = std::min(pkt, size - i * pkt);
      total += w.rtt + 2 * w.bridge + byte_cost(w.per_byte, bytes);
    }
    return total;
  }
  return static_cast<SimTime>(packets - 1) * byte_cost(w.per_byte, pkt) +
         w.one_way + w.bridge + byte_cost(w.per_byte, size);
}

}  // namespace

LegCost push_leg_cost(const FabricConfig& config, const Hop& hop,
                      std::uint64_t size) {
  const TileSpec& src = config.tile(hop.src);
  const TileSpec& dst = config.tile(hop.dst);
  if (hop.src == hop.dst) {
    throw ConfigError("push leg needs two distinct tiles");
  }
  const WireParams w = wire_params(config, src, dst);

  LegCost leg;
  leg.hop = hop;
  leg.size = size;
  leg.packet_ns = packet_time(config, w, size);
  leg.notify_ns =
      w.one_way + w.bridge + byte_cost(w.per_byte, config.control_msg_bytes);
  leg.handling_ns = pickup_cost(config, src) + pickup_cost(config, dst);
  return leg;
}

SimTime push_leg(const FabricConfig& config, const Hop& hop,
                 std::uint64_t size) {
  return push_leg_cost(config, hop, size).total();
}

namespace {

void add_leg(Prediction& p, const FabricConfig& config, const std::string& src,
             const std::string& dst, std::uint64_t size) {
  PredictedStep step;
  step.label = src + "->" + dst;
  step.ns = push_leg(config, Hop{src, dst}, size);
  p.total_ns += step.ns;
  p.steps.push_back(std::move(step));
}

void add_compute(Prediction& p, const std::string& device, SimTime compute_ns) {
  PredictedStep step;
  step.label = "compute@" + device;
  step.is_compute = true;
  step.ns = compute_ns;
  p.total_ns += step.ns;
  p.steps.push_back(std::move(step));
}

}  // namespace

Prediction predict(const FabricConfig& config, PlacementKind placement,
                   const PipelineSpec& pipeline, std::uint64_t size,
                   SimTime compute_ns) {
  validate_pipeline(config, pipeline, placement);
  Prediction p;
  const std::string& app = pipeline.app_tile;
  const auto& devs = pipeline.devices;

  switch (placement) {
    case PlacementKind::AppSide:
      for (const std::string& d : devs) {
        add_leg(p, config, app, d, size);
        add_compute(p, d, compute_ns);
        add_leg(p, config, d, app, size);
      }
      break;
    case PlacementKind::Central: {
      const std::string& cpu = pipeline.pool_cpu;
      add_leg(p, config, app, cpu, size);
      for (const std::string& d : devs) {
        add_leg(p, config, cpu, d, size);
        add_compute(p, d, compute_ns);
        add_leg(p, config, d, cpu, size);
      }
      add_leg(p, config, cpu, app, size);
      break;
    }
    case PlacementKind::Distributed:
      add_leg(p, config, app, devs.front(), size);
      add_compute(p, devs.front(), compute_ns);
      for (std::size_t i = 0; i + 1 < devs.size(); ++i) {
        add_leg(p, config, devs[i], devs[i + 1], size);
        add_compute(p, devs[i + 1], compute_ns);
      }
      add_leg(p, config, devs.back(), app, size);
      break;
  }
  return p;
}

std::vector<std::uint64_t> default_size_ladder() {
  std::vector<std::uint64_t> sizes;
  for (std::uint64_t s = 256; s <= 65536; s *= 2) sizes.push_back(s);
  return sizes;
}

OracleSweepOptions default_oracle_sweep() {
  OracleSweepOptions opt;
  opt.configs.emplace_back("wire-only", wire_only_config());
  opt.configs.emplace_back("calibrated", calibrated_config());
  opt.placements = all_placements();
  opt.sizes = default_size_ladder();
  opt.device_counts = {1, 2, 3, 4};
  opt.ack_modes = {AckMode::SerializedRtt, AckMode::PipelinedOneway};
  return opt;
}

OracleCheckRow check_scenario(const FabricConfig& sim_config,
                              const FabricConfig& oracle_config,
                              const std::string& config_name,
                              PlacementKind placement, std::size_t n_devices,
                              std::uint64_t size, AckMode ack_mode,
                              SimTime compute_ns) {
  if (sim_config.jitter_ppm != 0 || oracle_config.jitter_ppm != 0) {
    throw ConfigError(
        "model validation needs jitter_ppm = 0 (the closed form is "
        "jitter-free)");
  }
  FabricConfig sim_cfg = sim_config;
  sim_cfg.ack_mode = ack_mode;
  FabricConfig model_cfg = oracle_config;
  model_cfg.ack_mode = ack_mode;

  OracleCheckRow row;
  row.placement = placement;
  row.size = size;
  row.n_devices = n_devices;
  row.ack_mode = ack_mode;
  row.config_name = config_name;

  const PipelineSpec pipeline = default_pipeline(sim_cfg, n_devices);
  const Prediction pred =
      predict(model_cfg, placement, pipeline, size, compute_ns);
  row.oracle_ns = pred.total_ns;

  Fabric fabric(sim_cfg, /*run_seed=*/0);
  Kernel kernel(fabric);
  Scenario scenario = build_scenario(
      fabric, kernel, placement, pipeline, compute_ns,
      std::max<std::uint64_t>(kDefaultBufferBytes, size));
  std::vector<std::shared_ptr<TransferRecord>> records;
  row.sim_ns = run_chain(fabric, scenario.path, size, &records);

  row.match = row.sim_ns == row.oracle_ns;

  // Leg-by-leg: record k pairs with the k-th non-compute predicted step.
  std::size_t rec = 0;
  for (const PredictedStep& step : pred.steps) {
    if (step.is_compute) continue;
    if (rec >= records.size()) break;
    const SimTime sim_leg = records[rec]->leg_ns();
    if (sim_leg != step.ns) {
      row.match = false;
      if (row.detail.empty()) {
        std::ostringstream os;
        os << "first divergence at leg " << rec + 1 << " (" << step.label
           << "): sim " << sim_leg << " ns vs model " << step.ns << " ns";
        row.detail = os.str();
      }
    }
    ++rec;
  }
  if (!row.match && row.detail.empty()) {
    std::ostringstream os;
    os << "legs agree but totals differ: sim " << row.sim_ns
       << " ns vs model " << row.oracle_ns << " ns";
    row.detail = os.str();
  }
  return row;
}

OracleCheckReport validate_against_sim(const OracleSweepOptions& options) {
  OracleCheckReport report;
  for (const auto& [name, config] : options.configs) {
    for (PlacementKind placement : options.placements) {
      for (std::size_t n : options.device_counts) {
        for (std::uint64_t size : options.sizes) {
          for (AckMode mode : options.ack_modes) {
            OracleCheckRow row =
                check_scenario(config, config, name, placement, n, size, mode,
                               options.compute_ns);
            if (!row.match) ++report.mismatches;
            report.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return report;
}

}  // namespace fabricflow
