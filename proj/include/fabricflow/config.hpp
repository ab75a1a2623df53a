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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fabricflow {

/// Virtual time in integer nanoseconds. All model timing is exact integer
/// arithmetic; there is no floating-point time anywhere in the simulator.
using SimTime = std::int64_t;

/// Thrown for config syntax errors and for violations of the fabric
/// validation rules. The message names the rule that failed.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Role of a tile. Clock defaults differ by role: general-purpose cores run
/// at 4 GHz, device-control cores are simple in-order cores at 1 GHz.
enum class TileKind { AppCpu, PoolCpu, DeviceControl, Kernel };

std::string_view to_string(TileKind kind);
TileKind tile_kind_from_string(std::string_view s);

/// Acknowledgement discipline for multi-packet memory transfers.
///  - SerializedRtt: each packet waits for the previous packet's ack, so a
///    transfer of P packets pays P full round trips.
///  - PipelinedOneway: packets are injected back to back and the transfer
///    completes one bridge-delayed one-way trip after the last byte.
enum class AckMode { SerializedRtt, PipelinedOneway };

std::string_view to_string(AckMode mode);
AckMode ack_mode_from_string(std::string_view s);

/// Whether a hop stays inside one machine or crosses the fabric bridge
/// between machines.
enum class Locality { Local, Cross };

/// One tile (core + its transfer unit) in the fabric.
struct TileSpec {
  std::string id;
  std::string machine;
  TileKind kind = TileKind::AppCpu;
  std::uint64_t clock_hz = 4'000'000'000ull;

  bool operator==(const TileSpec&) const = default;
};

/// A directed tile pair. Locality is derived from the machines of the two
/// endpoints; src == dst is invalid.
struct Hop {
  std::string src;
  std::string dst;
};

/// Full description of a two-machine fabric and its cost model. Produced by
/// parse_config(); round-trips exactly through serialize_config().
///
/// Latency parameters are round-trip times; per-message and per-packet costs
/// are built from their halves plus the bridge/per-byte/handling knobs.
struct FabricConfig {
  std::vector<std::string> machines;
  std::vector<TileSpec> tiles;

  SimTime inter_machine_rtt_ns = 1000;  ///< RTT between machines.
  SimTime intra_machine_rtt_ns = 500;   ///< RTT inside one machine.

  std::uint64_t packet_bytes = 4096;    ///< Max bytes moved per packet.
  std::uint64_t control_msg_bytes = 64; ///< Notify/response payload size.
  AckMode ack_mode = AckMode::SerializedRtt;

  /// Cycles charged for one protocol step on a tile; converted to ns
  /// through that tile's clock (see handling_ns()).
  std::uint64_t handling_cycles = 0;

  double per_byte_ns_cross = 0.0;  ///< Wire cost per byte on cross hops.
  double per_byte_ns_local = 0.0;  ///< Wire cost per byte on local hops.
  SimTime bridge_cross_ns = 0;     ///< Fixed per-packet/message bridge cost, cross.
  SimTime bridge_local_ns = 0;     ///< Fixed per-packet/message cost, local.

  std::uint64_t jitter_ppm = 0;  ///< Seeded uniform wire-delay perturbation.
  std::uint64_t seed = 0;        ///< Base seed mixed into every scenario RNG.

  bool operator==(const FabricConfig&) const = default;

  // -- queries -------------------------------------------------------------

  bool has_tile(std::string_view id) const;
  const TileSpec& tile(std::string_view id) const;       ///< throws ConfigError
  std::size_t tile_index(std::string_view id) const;     ///< throws ConfigError

  /// Locality of a hop; throws ConfigError for unknown tiles or src == dst.
  Locality locality(const Hop& hop) const;

  SimTime one_way_ns(Locality loc) const;   ///< Half the matching RTT.
  SimTime one_way_latency_ns(const Hop& hop) const;
  SimTime rtt_ns(Locality loc) const;
  SimTime bridge_ns(Locality loc) const;
  double per_byte_ns(Locality loc) const;

  /// round(handling_cycles / clock_hz * 1e9), computed in integer math.
  SimTime handling_ns(const TileSpec& tile) const;
  SimTime handling_ns(std::string_view tile_id) const;
};

/// Parse a config document. Unknown keys at any level are an error; missing
/// optional keys take the defaults above. The result is validated (see
/// validate_config) before being returned.
FabricConfig parse_config(std::string_view json_text);

/// Canonical serialization: fixed key order, every field explicit. Feeding
/// the output back through parse_config() yields an identical FabricConfig.
std::string serialize_config(const FabricConfig& config);

/// Enforce the fabric validation rules; throws ConfigError naming the first
/// violated rule. Called by parse_config; public so hand-built configs can
/// be checked too.
void validate_config(const FabricConfig& config);

/// The all-knobs-zero two-machine fabric: only wire latency is modeled.
/// Machine m0 hosts the app CPU and the kernel tile, machine m1 hosts the
/// pool CPU and six device-control tiles.
FabricConfig wire_only_config();

/// Same fabric as wire_only_config() with the calibrated cost knobs applied
/// (the output of the calibration search over the default knob set).
FabricConfig calibrated_config();

/// Resolve a built-in config by name ("wire-only" or "calibrated").
std::optional<FabricConfig> builtin_config(std::string_view name);

}  // namespace fabricflow
