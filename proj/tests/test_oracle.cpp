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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <vector>

#include "fabricflow/oracle.hpp"

using namespace fabricflow;

namespace {

PipelineSpec pipeline_of(const FabricConfig& cfg, std::size_t n) {
  return default_pipeline(cfg, n);
}

SimTime total(const FabricConfig& cfg, PlacementKind p, std::size_t n,
              std::uint64_t size, SimTime compute = 0) {
  return predict(cfg, p, pipeline_of(cfg, n), size, compute).total_ns;
}

}  // namespace

TEST_CASE("single leg costs, wire-only") {
  const FabricConfig cfg = wire_only_config();
  CHECK(push_leg(cfg, {"app", "d0"}, 4096) == 1500);  // RTT + one-way
  CHECK(push_leg(cfg, {"d0", "d1"}, 4096) == 750);
  CHECK(push_leg(cfg, {"pool", "d0"}, 4096) == 750);
  CHECK(push_leg(cfg, {"app", "d0"}, 8192) == 2500);  // second packet RTT
  CHECK(push_leg(cfg, {"app", "d0"}, 0) == 500);      // notify only
  CHECK_THROWS_AS(push_leg_cost(cfg, {"app", "app"}, 64), ConfigError);
}

TEST_CASE("single leg costs, calibrated") {
  const FabricConfig cfg = calibrated_config();
  const LegCost cross = push_leg_cost(cfg, {"app", "d0"}, 4096);
  CHECK(cross.packet_ns == 2500);  // 1000 RTT + 2 x 750 bridge
  CHECK(cross.notify_ns == 1250);  // 500 one-way + 750 bridge
  CHECK(cross.handling_ns == 0);
  CHECK(cross.total() == 3750);
  CHECK(push_leg(cfg, {"d0", "d1"}, 4096) == 750);  // local bridge is zero
  CHECK(push_leg(cfg, {"app", "d0"}, 16384) == 11250);
}

TEST_CASE("handling shows up once per side of a leg") {
  FabricConfig cfg = wire_only_config();
  cfg.handling_cycles = 400;
  // Sender app (4 GHz): 100 ns; receiver d0 (1 GHz): 400 ns.
  CHECK(push_leg_cost(cfg, {"app", "d0"}, 4096).handling_ns == 500);
  CHECK(push_leg(cfg, {"app", "d0"}, 4096) == 2000);
  // Reverse direction swaps the clocks, same sum here.
  CHECK(push_leg(cfg, {"d0", "app"}, 4096) == 2000);
}

TEST_CASE("serialized legs step by a full packet round trip at boundaries") {
  const FabricConfig cfg = calibrated_config();
  CHECK(push_leg(cfg, {"app", "d0"}, 4097) - push_leg(cfg, {"app", "d0"}, 4096)
        == 2500);
  CHECK(push_leg(cfg, {"app", "d0"}, 8192) ==
        push_leg(cfg, {"app", "d0"}, 4097));
}

TEST_CASE("pipelined legs with zero byte cost are flat across packet counts") {
  FabricConfig cfg = calibrated_config();
  cfg.ack_mode = AckMode::PipelinedOneway;
  const SimTime one = push_leg(cfg, {"app", "d0"}, 4096);
  CHECK(one == 2500);  // (500 + 750) data trip + (500 + 750) notify
  CHECK(push_leg(cfg, {"app", "d0"}, 4097) - one == 0);
  CHECK(push_leg(cfg, {"app", "d0"}, 65536) == one);
}

TEST_CASE("pipelined legs serialize on the per-byte wire cost") {
  FabricConfig cfg = wire_only_config();
  cfg.ack_mode = AckMode::PipelinedOneway;
  cfg.per_byte_ns_cross = 0.25;  // 1024 ns per full packet
  // data: (P-1)*1024 + 500 + 8192*0.25; notify: 500 + 16 bytes... the
  // 64 B control message costs 16 ns on this wire.
  CHECK(push_leg(cfg, {"app", "d0"}, 8192) ==
        1024 + 500 + 2048 + 500 + 16);
}

TEST_CASE("end-to-end totals, wire-only, two devices, 4 KiB") {
  const FabricConfig cfg = wire_only_config();
  CHECK(total(cfg, PlacementKind::AppSide, 2, 4096) == 6000);
  CHECK(total(cfg, PlacementKind::Central, 2, 4096) == 6000);
  CHECK(total(cfg, PlacementKind::Distributed, 2, 4096) == 3750);
}

TEST_CASE("end-to-end totals, calibrated, two devices") {
  const FabricConfig cfg = calibrated_config();
  CHECK(total(cfg, PlacementKind::AppSide, 2, 4096) == 15000);
  CHECK(total(cfg, PlacementKind::Central, 2, 4096) == 10500);
  CHECK(total(cfg, PlacementKind::Distributed, 2, 4096) == 8250);
  // The same ratios hold at four packets per stage.
  CHECK(total(cfg, PlacementKind::AppSide, 2, 16384) == 45000);
  CHECK(total(cfg, PlacementKind::Central, 2, 16384) == 31500);
  CHECK(total(cfg, PlacementKind::Distributed, 2, 16384) == 24750);
}

TEST_CASE("degenerate cases") {
  const FabricConfig cfg = wire_only_config();
  // One device: distributed collapses to a single out-and-back.
  CHECK(total(cfg, PlacementKind::Distributed, 1, 4096) == 3000);
  CHECK(total(cfg, PlacementKind::AppSide, 1, 4096) == 3000);
  // Zero bytes: only notifications travel.
  CHECK(total(cfg, PlacementKind::Distributed, 2, 0) == 1250);
}

TEST_CASE("per-device compute is charged once per stage in every placement") {
  const FabricConfig cfg = wire_only_config();
  for (PlacementKind p : all_placements()) {
    const SimTime base = total(cfg, p, 3, 4096, 0);
    CHECK(total(cfg, p, 3, 4096, 200) == base + 3 * 200);
  }
}

TEST_CASE("prediction steps sum to the total and count the placement's legs") {
  const FabricConfig cfg = calibrated_config();
  for (std::size_t n : {1u, 2u, 3u, 4u}) {
    for (PlacementKind p : all_placements()) {
      const Prediction pred = predict(cfg, p, pipeline_of(cfg, n), 4096, 50);
      SimTime sum = 0;
      std::size_t legs = 0;
      for (const PredictedStep& s : pred.steps) {
        sum += s.ns;
        if (!s.is_compute) ++legs;
      }
      CHECK(sum == pred.total_ns);
      const std::size_t expected =
          p == PlacementKind::AppSide ? 2 * n
          : p == PlacementKind::Central ? 2 * n + 2
                                        : n + 1;
      CHECK(legs == expected);
    }
  }
}

TEST_CASE("legs and totals are monotone in transfer size") {
  for (const char* name : {"wire-only", "calibrated"}) {
    const FabricConfig cfg = *builtin_config(name);
    SimTime prev_leg = -1, prev_total = -1;
    for (std::uint64_t size : default_size_ladder()) {
      const SimTime leg = push_leg(cfg, {"app", "d0"}, size);
      const SimTime t = total(cfg, PlacementKind::Distributed, 3, size);
      CHECK(leg >= prev_leg);
      CHECK(t >= prev_total);
      prev_leg = leg;
      prev_total = t;
    }
  }
}

TEST_CASE("property: doubling every time knob doubles every prediction") {
  // Knob values are chosen so that all intermediate roundings are exact
  // (integer byte costs, cycle counts divisible by every clock ratio);
  // under those conditions scaling time by two must scale latency by two.
  std::mt19937 rng(1234);
  auto pick = [&](std::initializer_list<double> xs) {
    std::vector<double> v(xs);
    return v[rng() % v.size()];
  };

  for (int round = 0; round < 200; ++round) {
    FabricConfig cfg = wire_only_config();
    cfg.inter_machine_rtt_ns = 500 + 2 * static_cast<SimTime>(rng() % 1000);
    cfg.intra_machine_rtt_ns =
        2 * static_cast<SimTime>(1 + rng() % (cfg.inter_machine_rtt_ns / 2));
    cfg.bridge_cross_ns = static_cast<SimTime>(rng() % 2000);
    cfg.bridge_local_ns = static_cast<SimTime>(rng() % 500);
    cfg.per_byte_ns_cross = pick({0.0, 0.25, 0.5, 1.0, 2.0});
    cfg.per_byte_ns_local = pick({0.0, 0.25, 0.5});
    cfg.handling_cycles = 4 * (rng() % 500);  // exact on 4 GHz and 1 GHz
    cfg.ack_mode = rng() % 2 ? AckMode::SerializedRtt
                             : AckMode::PipelinedOneway;
    validate_config(cfg);

    FabricConfig doubled = cfg;
    doubled.inter_machine_rtt_ns *= 2;
    doubled.intra_machine_rtt_ns *= 2;
    doubled.bridge_cross_ns *= 2;
    doubled.bridge_local_ns *= 2;
    doubled.per_byte_ns_cross *= 2;
    doubled.per_byte_ns_local *= 2;
    doubled.handling_cycles *= 2;

    const std::uint64_t size = 4 * (rng() % 4096);  // exact byte costs
    const std::size_t n = 1 + rng() % 4;
    const SimTime compute = static_cast<SimTime>(rng() % 1000);
    for (PlacementKind p : all_placements()) {
      CHECK(total(doubled, p, n, size, 2 * compute) ==
            2 * total(cfg, p, n, size, compute));
    }
  }
}

TEST_CASE("property: distributed never loses when local hops are cheaper") {
  // Whenever every local cost parameter is <= its cross counterpart,
  // replacing cross legs by local legs cannot slow the walk down, so
  // distributed <= central and distributed <= app-side.
  std::mt19937 rng(99);
  for (int round = 0; round < 300; ++round) {
    FabricConfig cfg = wire_only_config();
    cfg.intra_machine_rtt_ns = 2 * static_cast<SimTime>(1 + rng() % 1000);
    cfg.inter_machine_rtt_ns =
        cfg.intra_machine_rtt_ns + 2 * static_cast<SimTime>(rng() % 1000);
    cfg.bridge_local_ns = static_cast<SimTime>(rng() % 1000);
    cfg.bridge_cross_ns =
        cfg.bridge_local_ns + static_cast<SimTime>(rng() % 1000);
    cfg.per_byte_ns_local = static_cast<double>(rng() % 100) / 64.0;
    cfg.per_byte_ns_cross =
        cfg.per_byte_ns_local + static_cast<double>(rng() % 100) / 64.0;
    cfg.handling_cycles = rng() % 1000;
    cfg.ack_mode = rng() % 2 ? AckMode::SerializedRtt
                             : AckMode::PipelinedOneway;
    validate_config(cfg);

    const std::uint64_t size = rng() % 100'000;
    const std::size_t n = 2 + rng() % 3;
    const SimTime compute = static_cast<SimTime>(rng() % 2000);
    const SimTime dist = total(cfg, PlacementKind::Distributed, n, size,
                               compute);
    CHECK(dist <= total(cfg, PlacementKind::Central, n, size, compute));
    CHECK(dist <= total(cfg, PlacementKind::AppSide, n, size, compute));
  }
}

TEST_CASE("default grids") {
  CHECK(default_size_ladder() ==
        std::vector<std::uint64_t>{256, 512, 1024, 2048, 4096, 8192, 16384,
                                   32768, 65536});
  const OracleSweepOptions sweep = default_oracle_sweep();
  CHECK(sweep.configs.size() == 2);
  CHECK(sweep.placements.size() == 3);
  CHECK(sweep.sizes.size() == 9);
  CHECK(sweep.device_counts == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(sweep.ack_modes.size() == 2);
}

TEST_CASE("simulator and model agree on every default scenario") {
  const OracleCheckReport report = validate_against_sim(default_oracle_sweep());
  CHECK(report.rows.size() == 432);
  CHECK(report.mismatches == 0);
  for (const OracleCheckRow& row : report.rows) {
    CHECK(row.match);
    CHECK(row.sim_ns == row.oracle_ns);
  }
}

TEST_CASE("simulator and model agree when compute is charged") {
  const FabricConfig cfg = calibrated_config();
  for (PlacementKind p : all_placements()) {
    const OracleCheckRow row = check_scenario(
        cfg, cfg, "calibrated", p, 3, 4096, AckMode::SerializedRtt, 750);
    CHECK(row.match);
  }
}

TEST_CASE("a cooked divergence is reported leg by leg") {
  // Feed the model a different config than the simulator: the report names
  // the first leg where the two disagree instead of just the totals.
  const OracleCheckRow row = check_scenario(
      wire_only_config(), calibrated_config(), "mixed",
      PlacementKind::Distributed, 2, 4096, AckMode::SerializedRtt);
  CHECK_FALSE(row.match);
  CHECK(row.sim_ns == 3750);
  CHECK(row.oracle_ns == 8250);
  CHECK(row.detail.find("leg") != std::string::npos);
}

TEST_CASE("jittered configs are refused by the checker") {
  FabricConfig cfg = wire_only_config();
  cfg.jitter_ppm = 1000;
  CHECK_THROWS_AS(check_scenario(cfg, cfg, "jittery",
                                 PlacementKind::Distributed, 2, 4096,
                                 AckMode::SerializedRtt),
                  ConfigError);
}
