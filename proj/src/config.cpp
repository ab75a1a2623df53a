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

#include "fabricflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fabricflow {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

/// Reject keys outside `allowed` so typos surface instead of silently
/// falling back to defaults.
void check_keys(const json& obj, std::string_view where,
                const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      fail("unknown key \"" + item.key() + "\" in " + std::string(where));
    }
  }
}

std::uint64_t get_uint(const json& obj, const std::string& key,
                       std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    fail("key \"" + key + "\" must be a non-negative integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    fail("key \"" + key + "\" must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

SimTime get_time(const json& obj, const std::string& key, SimTime fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    fail("key \"" + key + "\" must be an integer nanosecond count");
  }
  return v.get<SimTime>();
}

double get_double(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail("key \"" + key + "\" must be a number");
  return v.get<double>();
}

std::uint64_t default_clock_hz(TileKind kind) {
  // Device-control cores are simple in-order cores an order of magnitude
  // slower than the general-purpose CPUs.
  return kind == TileKind::DeviceControl ? 1'000'000'000ull
                                         : 4'000'000'000ull;
}

TileSpec parse_tile(const json& obj) {
  if (!obj.is_object()) fail("each entry in \"tiles\" must be an object");
  check_keys(obj, "a tiles[] entry", {"id", "machine", "kind", "clock_hz"});
  for (const char* req : {"id", "machine", "kind"}) {
    if (!obj.contains(req)) {
      fail(std::string("tile entry missing required key \"") + req + "\"");
    }
  }
  TileSpec tile;
  tile.id = obj.at("id").get<std::string>();
  tile.machine = obj.at("machine").get<std::string>();
  tile.kind = tile_kind_from_string(obj.at("kind").get<std::string>());
  tile.clock_hz = get_uint(obj, "clock_hz", default_clock_hz(tile.kind));
  return tile;
}

}  // namespace

std::string_view to_string(TileKind kind) {
  switch (kind) {
    case TileKind::AppCpu: return "app-cpu";
    case TileKind::PoolCpu: return "pool-cpu";
    case TileKind::DeviceControl: return "device-control";
    case TileKind::Kernel: return "kernel";
  }
  fail("invalid TileKind");
}

TileKind tile_kind_from_string(std::string_view s) {
  if (s == "app-cpu") return TileKind::AppCpu;
  if (s == "pool-cpu") return TileKind::PoolCpu;
  if (s == "device-control") return TileKind::DeviceControl;
  if (s == "kernel") return TileKind::Kernel;
  fail("unknown tile kind \"" + std::string(s) +
       "\" (expected app-cpu, pool-cpu, device-control, or kernel)");
}

std::string_view to_string(AckMode mode) {
  return mode == AckMode::SerializedRtt ? "serialized-rtt" : "pipelined-oneway";
}

AckMode ack_mode_from_string(std::string_view s) {
  if (s == "serialized-rtt") return AckMode::SerializedRtt;
  if (s == "pipelined-oneway") return AckMode::PipelinedOneway;
  fail("unknown ack mode \"" + std::string(s) +
       "\" (expected serialized-rtt or pipelined-oneway)");
}

bool FabricConfig::has_tile(std::string_view id) const {
  return std::any_of(tiles.begin(), tiles.end(),
                     [&](const TileSpec& t) { return t.id == id; });
}

const TileSpec& FabricConfig::tile(std::string_view id) const {
  return tiles[tile_index(id)];
}

std::size_t FabricConfig::tile_index(std::string_view id) const {
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i].id == id) return i;
  }
  fail("unknown tile id \"" + std::string(id) + "\"");
}

Locality FabricConfig::locality(const Hop& hop) const {
  const TileSpec& src = tile(hop.src);
  const TileSpec& dst = tile(hop.dst);
  if (hop.src == hop.dst) fail("hop src and dst must differ");
  return src.machine == dst.machine ? Locality::Local : Locality::Cross;
}

SimTime FabricConfig::rtt_ns(Locality loc) const {
  return loc == Locality::Cross ? inter_machine_rtt_ns : intra_machine_rtt_ns;
}

SimTime FabricConfig::one_way_ns(Locality loc) const { return rtt_ns(loc) / 2; }

SimTime FabricConfig::one_way_latency_ns(const Hop& hop) const {
  return one_way_ns(locality(hop));
}

SimTime FabricConfig::bridge_ns(Locality loc) const {
  return loc == Locality::Cross ? bridge_cross_ns : bridge_local_ns;
}

double FabricConfig::per_byte_ns(Locality loc) const {
  return loc == Locality::Cross ? per_byte_ns_cross : per_byte_ns_local;
}

SimTime FabricConfig::handling_ns(const TileSpec& t) const {
  if (handling_cycles == 0) return 0;
  // round(cycles / clock * 1e9) without going through floating point.
  const unsigned __int128 num =
      static_cast<unsigned __int128>(handling_cycles) * 1'000'000'000ull;
  return static_cast<SimTime>((num + t.clock_hz / 2) / t.clock_hz);
}

SimTime FabricConfig::handling_ns(std::string_view tile_id) const {
  return handling_ns(tile(tile_id));
}

FabricConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("config syntax error at byte " + std::to_string(e.byte) + ": " +
         e.what());
  }
  if (!doc.is_object()) fail("config document must be a JSON object");
  check_keys(doc, "the top-level object",
             {"machines", "tiles", "latency", "protocol", "jitter_ppm",
              "seed"});
  for (const char* req : {"machines", "tiles"}) {
    if (!doc.contains(req)) {
      fail(std::string("config missing required key \"") + req + "\"");
    }
  }

  FabricConfig cfg;
  if (!doc.at("machines").is_array()) fail("\"machines\" must be an array");
  for (const auto& m : doc.at("machines")) {
    cfg.machines.push_back(m.get<std::string>());
  }
  if (!doc.at("tiles").is_array()) fail("\"tiles\" must be an array");
  for (const auto& t : doc.at("tiles")) {
    cfg.tiles.push_back(parse_tile(t));
  }

  if (doc.contains("latency")) {
    const json& lat = doc.at("latency");
    if (!lat.is_object()) fail("\"latency\" must be an object");
    check_keys(lat, "\"latency\"", {"inter_rtt_ns", "intra_rtt_ns"});
    cfg.inter_machine_rtt_ns =
        get_time(lat, "inter_rtt_ns", cfg.inter_machine_rtt_ns);
    cfg.intra_machine_rtt_ns =
        get_time(lat, "intra_rtt_ns", cfg.intra_machine_rtt_ns);
  }

  if (doc.contains("protocol")) {
    const json& proto = doc.at("protocol");
    if (!proto.is_object()) fail("\"protocol\" must be an object");
    check_keys(proto, "\"protocol\"",
               {"packet_bytes", "control_msg_bytes", "ack_mode",
                "handling_cycles", "per_byte_ns_cross", "per_byte_ns_local",
                "bridge_cross_ns", "bridge_local_ns"});
    cfg.packet_bytes = get_uint(proto, "packet_bytes", cfg.packet_bytes);
    cfg.control_msg_bytes =
        get_uint(proto, "control_msg_bytes", cfg.control_msg_bytes);
    if (proto.contains("ack_mode")) {
      cfg.ack_mode =
          ack_mode_from_string(proto.at("ack_mode").get<std::string>());
    }
    cfg.handling_cycles =
        get_uint(proto, "handling_cycles", cfg.handling_cycles);
    cfg.per_byte_ns_cross =
        get_double(proto, "per_byte_ns_cross", cfg.per_byte_ns_cross);
    cfg.per_byte_ns_local =
        get_double(proto, "per_byte_ns_local", cfg.per_byte_ns_local);
    cfg.bridge_cross_ns = get_time(proto, "bridge_cross_ns", cfg.bridge_cross_ns);
    cfg.bridge_local_ns = get_time(proto, "bridge_local_ns", cfg.bridge_local_ns);
  }

  cfg.jitter_ppm = get_uint(doc, "jitter_ppm", cfg.jitter_ppm);
  cfg.seed = get_uint(doc, "seed", cfg.seed);

  validate_config(cfg);
  return cfg;
}

void validate_config(const FabricConfig& cfg) {
  if (cfg.machines.empty()) fail("at least one machine is required");
  {
    std::set<std::string> seen;
    for (const auto& m : cfg.machines) {
      if (!seen.insert(m).second) fail("duplicate machine id \"" + m + "\"");
    }
  }
  if (cfg.tiles.empty()) fail("at least one tile is required");
  {
    std::set<std::string> ids;
    std::size_t kernel_tiles = 0;
    for (const TileSpec& t : cfg.tiles) {
      if (!ids.insert(t.id).second) fail("duplicate tile id \"" + t.id + "\"");
      if (std::find(cfg.machines.begin(), cfg.machines.end(), t.machine) ==
          cfg.machines.end()) {
        fail("tile \"" + t.id + "\" names unknown machine \"" + t.machine +
             "\"");
      }
      if (t.clock_hz == 0) {
        fail("tile \"" + t.id + "\" must have a positive clock_hz");
      }
      if (t.kind == TileKind::Kernel) ++kernel_tiles;
    }
    if (kernel_tiles != 1) {
      fail("exactly one tile of kind kernel is required, found " +
           std::to_string(kernel_tiles));
    }
  }
  if (cfg.intra_machine_rtt_ns <= 0) {
    fail("intra-machine RTT must be positive");
  }
  if (cfg.inter_machine_rtt_ns < cfg.intra_machine_rtt_ns) {
    fail("inter-machine RTT must be >= intra-machine RTT");
  }
  if (cfg.inter_machine_rtt_ns % 2 != 0 || cfg.intra_machine_rtt_ns % 2 != 0) {
    fail("RTT values must be even so one-way latency is an integer");
  }
  if (cfg.packet_bytes == 0) fail("packet_bytes must be positive");
  if (cfg.per_byte_ns_cross < 0 || cfg.per_byte_ns_local < 0) {
    fail("per-byte costs must be >= 0");
  }
  if (cfg.bridge_cross_ns < 0 || cfg.bridge_local_ns < 0) {
    fail("bridge overheads must be >= 0");
  }
  if (cfg.jitter_ppm > 1'000'000) {
    fail("jitter_ppm must be <= 1000000 (delays must stay non-negative)");
  }
}

std::string serialize_config(const FabricConfig& cfg) {
  ordered_json doc;
  doc["machines"] = cfg.machines;
  doc["tiles"] = ordered_json::array();
  for (const TileSpec& t : cfg.tiles) {
    ordered_json tile;
    tile["id"] = t.id;
    tile["machine"] = t.machine;
    tile["kind"] = to_string(t.kind);
    tile["clock_hz"] = t.clock_hz;
    doc["tiles"].push_back(tile);
  }
  doc["latency"] = {{"inter_rtt_ns", cfg.inter_machine_rtt_ns},
                    {"intra_rtt_ns", cfg.intra_machine_rtt_ns}};
  doc["protocol"] = {{"packet_bytes", cfg.packet_bytes},
                     {"control_msg_bytes", cfg.control_msg_bytes},
                     {"ack_mode", to_string(cfg.ack_mode)},
                     {"handling_cycles", cfg.handling_cycles},
                     {"per_byte_ns_cross", cfg.per_byte_ns_cross},
                     {"per_byte_ns_local", cfg.per_byte_ns_local},
                     {"bridge_cross_ns", cfg.bridge_cross_ns},
                     {"bridge_local_ns", cfg.bridge_local_ns}};
  doc["jitter_ppm"] = cfg.jitter_ppm;
  doc["seed"] = cfg.seed;
  return doc.dump(2) + "\n";
}

FabricConfig wire_only_config() {
  FabricConfig cfg;
  cfg.machines = {"m0", "m1"};
  cfg.tiles = {
      {"app", "m0", TileKind::AppCpu, 4'000'000'000ull},
      {"kernel", "m0", TileKind::Kernel, 4'000'000'000ull},
      {"pool", "m1", TileKind::PoolCpu, 4'000'000'000ull},
      {"d0", "m1", TileKind::DeviceControl, 1'000'000'000ull},
      {"d1", "m1", TileKind::DeviceControl, 1'000'000'000ull},
      {"d2", "m1", TileKind::DeviceControl, 1'000'000'000ull},
      {"d3", "m1", TileKind::DeviceControl, 1'000'000'000ull},
      {"d4", "m1", TileKind::DeviceControl, 1'000'000'000ull},
      {"d5", "m1", TileKind::DeviceControl, 1'000'000'000ull},
  };
  return cfg;
}

FabricConfig calibrated_config() {
  FabricConfig cfg = wire_only_config();
  // First point of the default calibration grid that lands inside both
  // speedup bands; see the calibrate() search in bench.cpp.
  cfg.bridge_cross_ns = 750;
  return cfg;
}

std::optional<FabricConfig> builtin_config(std::string_view name) {
  if (name == "wire-only") return wire_only_config();
  if (name == "calibrated") return calibrated_config();
  return std::nullopt;
}

}  // namespace fabricflow
