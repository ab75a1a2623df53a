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
#include <set>
#include <string>
#include <vector>

#include "fabricflow/dtu.hpp"

namespace fabricflow {

class KernelError : public std::runtime_error {
 public:
  explicit KernelError(const std::string& what) : std::runtime_error(what) {}
};

/// An execution context pinned to one tile. At most one activity per tile;
/// the kernel tile hosts none.
struct Activity {
  std::uint64_t id = 0;
  std::string tile;
  std::string tenant;
  bool live = true;
};

enum class CapKind { SendTo, ReceiveOn, MemoryRange };

std::string_view to_string(CapKind kind);

/// Authority over one or more endpoints on the holder's tile. Channel
/// establishment issues a send-to capability backing the sender's send and
/// memory endpoints together, and a receive-on capability backing the
/// receive endpoint; grant_memory issues a standalone memory-range
/// capability. Revocation deconfigures every backed endpoint at once.
struct Capability {
  std::uint64_t id = 0;
  std::uint64_t holder = 0;  ///< Owning activity.
  CapKind kind = CapKind::SendTo;
  std::string tile;                ///< Tile whose endpoints it backs.
  std::vector<EpIndex> endpoints;  ///< Backed endpoint indices on `tile`.
  std::string target_tile;         ///< Remote side (reach edges point here).
  bool revoked = false;
};

/// Everything a user of an established channel needs to drive it: the three
/// endpoint indices and the two issued capabilities.
struct ChannelHandle {
  std::uint64_t sender_activity = 0;
  std::uint64_t receiver_activity = 0;
  std::string sender_tile;
  std::string receiver_tile;
  EpIndex send_ep = 0;
  EpIndex memory_ep = 0;  ///< On the sender tile, windowing receiver memory.
  EpIndex recv_ep = 0;    ///< On the receiver tile.
  std::uint64_t sender_cap = 0;
  std::uint64_t receiver_cap = 0;
  std::uint32_t slots = 0;
  std::uint64_t slot_bytes = 0;
  std::uint64_t buffer_bytes = 0;
};

/// Result of granting a standalone memory window.
struct MemoryGrant {
  std::uint64_t cap = 0;
  EpIndex ep = 0;
};

/// The control plane: creates activities, wires up channels by configuring
/// endpoints with kernel authority, and tracks the capability graph.
/// Channel establishment runs at virtual time zero and costs nothing; only
/// the data plane consumes virtual time.
class Kernel {
 public:
  explicit Kernel(Fabric& fabric);

  /// One activity per tile, never on the kernel tile.
  const Activity& create_activity(std::string_view tile,
                                  std::string_view tenant);

  /// Revokes the activity's capabilities and frees its tile.
  void destroy_activity(std::uint64_t activity);

  /// Wire a sender->receiver data channel: a receive endpoint (slots x
  /// slot_bytes) on the receiver, plus a send endpoint and a memory window
  /// of buffer_bytes on the sender. Three endpoints, two capabilities.
  ChannelHandle establish_channel(std::uint64_t sender, std::uint64_t receiver,
                                  std::uint32_t slots, std::uint64_t slot_bytes,
                                  std::uint64_t buffer_bytes);

  /// Standalone memory window into target_tile's memory for `activity`.
  MemoryGrant grant_memory(std::uint64_t activity, std::string_view target_tile,
                           std::uint64_t base, std::uint64_t len, bool can_read,
                           bool can_write);

  /// Immediate revocation: the capability is dead and every endpoint it
  /// backs is deconfigured before revoke() returns. Packets already
  /// injected still land; nothing new can be injected.
  void revoke(std::uint64_t cap);

  /// All tiles a tenant can reach by following live send/memory
  /// capabilities transitively, starting from (and including) the tiles of
  /// its own activities.
  std::set<std::string> check_transitive_reach(std::string_view tenant) const;

  /// Check that every configured endpoint on the fabric is backed by
  /// exactly one live capability and vice versa; throws KernelError on any
  /// violation. Called by tests after every kernel operation.
  void verify_integrity() const;

  const Activity& activity(std::uint64_t id) const;
  const Capability& capability(std::uint64_t id) const;
  std::vector<std::uint64_t> capabilities_of(std::uint64_t activity) const;

 private:
  EpIndex allocate_ep(const std::string& tile);
  Activity& live_activity(std::uint64_t id);
  std::uint64_t issue_cap(std::uint64_t holder, CapKind kind,
                          const std::string& tile,
                          std::vector<EpIndex> endpoints,
                          const std::string& target_tile);

  Fabric& fabric_;
  Authority authority_{Authority::Level::Kernel};
  std::uint64_t next_activity_id_ = 1;
  std::uint64_t next_cap_id_ = 1;
  std::map<std::uint64_t, Activity> activities_;
  std::map<std::uint64_t, Capability> caps_;
  std::map<std::string, std::uint64_t> tile_owner_;  ///< tile -> activity
};

}  // namespace fabricflow
