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

#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fabricflow/kernel.hpp"

using namespace fabricflow;

namespace {

/// Reference reachability: breadth-first search over the live capability
/// edges, written independently of Kernel::check_transitive_reach.
std::set<std::string> bfs_reach(const Kernel& kernel,
                                const std::vector<std::uint64_t>& activities,
                                const std::vector<std::uint64_t>& caps,
                                std::string_view tenant) {
  std::set<std::string> reached;
  std::deque<std::string> frontier;
  for (std::uint64_t id : activities) {
    const Activity& act = kernel.activity(id);
    if (act.live && act.tenant == tenant) {
      if (reached.insert(act.tile).second) frontier.push_back(act.tile);
    }
  }
  while (!frontier.empty()) {
    const std::string tile = frontier.front();
    frontier.pop_front();
    for (std::uint64_t id : caps) {
      const Capability& cap = kernel.capability(id);
      if (cap.revoked || cap.tile != tile) continue;
      if (cap.kind == CapKind::ReceiveOn) continue;
      if (reached.insert(cap.target_tile).second) {
        frontier.push_back(cap.target_tile);
      }
    }
  }
  return reached;
}

}  // namespace

TEST_CASE("one activity per tile, never on the kernel tile") {
  Fabric f(wire_only_config());
  Kernel k(f);

  const Activity& a = k.create_activity("app", "t0");
  CHECK(a.tile == "app");
  CHECK(a.tenant == "t0");
  CHECK(a.live);

  CHECK_THROWS_AS(k.create_activity("app", "t1"), KernelError);
  CHECK_THROWS_AS(k.create_activity("kernel", "t0"), KernelError);
  CHECK_THROWS_AS(k.create_activity("ghost", "t0"), ConfigError);

  k.destroy_activity(a.id);
  CHECK_FALSE(k.activity(a.id).live);
  // The tile is free again.
  const Activity& b = k.create_activity("app", "t1");
  CHECK(b.id != a.id);
  k.verify_integrity();
}

TEST_CASE("establish_channel wires three endpoints under two capabilities") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto& sender = k.create_activity("app", "t0");
  const auto& receiver = k.create_activity("d0", "t0");

  const ChannelHandle ch = k.establish_channel(sender.id, receiver.id,
                                               /*slots=*/1, /*slot_bytes=*/64,
                                               /*buffer_bytes=*/1 << 20);
  CHECK(ch.sender_tile == "app");
  CHECK(ch.receiver_tile == "d0");
  CHECK(ch.slots == 1);
  CHECK(ch.slot_bytes == 64);
  CHECK(ch.buffer_bytes == 1 << 20);

  const TileId app = f.tile_id("app"), d0 = f.tile_id("d0");
  CHECK(f.endpoint_configured(app, ch.send_ep));
  CHECK(f.endpoint_configured(app, ch.memory_ep));
  CHECK(f.endpoint_configured(d0, ch.recv_ep));
  CHECK(f.endpoint_target(app, ch.send_ep) == d0);
  CHECK(f.endpoint_target(app, ch.memory_ep) == d0);

  // Sender capability backs both sender-side endpoints; receiver capability
  // backs the receive endpoint.
  const Capability& scap = k.capability(ch.sender_cap);
  CHECK(scap.kind == CapKind::SendTo);
  CHECK(scap.holder == sender.id);
  CHECK(scap.tile == "app");
  CHECK(scap.target_tile == "d0");
  CHECK(scap.endpoints == std::vector<EpIndex>{ch.send_ep, ch.memory_ep});
  const Capability& rcap = k.capability(ch.receiver_cap);
  CHECK(rcap.kind == CapKind::ReceiveOn);
  CHECK(rcap.holder == receiver.id);
  CHECK(rcap.endpoints == std::vector<EpIndex>{ch.recv_ep});

  CHECK(f.endpoint_cap(app, ch.send_ep) == ch.sender_cap);
  CHECK(f.endpoint_cap(app, ch.memory_ep) == ch.sender_cap);
  CHECK(f.endpoint_cap(d0, ch.recv_ep) == ch.receiver_cap);

  k.verify_integrity();
}

TEST_CASE("channels between two activities on one tile are refused") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto a = k.create_activity("app", "t0").id;
  CHECK_THROWS_AS(k.establish_channel(a, a, 1, 64, 4096), KernelError);
}

TEST_CASE("revoking the sender capability strips both sender endpoints") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto s = k.create_activity("app", "t0").id;
  const auto r = k.create_activity("d0", "t0").id;
  const ChannelHandle ch = k.establish_channel(s, r, 1, 64, 4096);

  k.revoke(ch.sender_cap);
  const TileId app = f.tile_id("app"), d0 = f.tile_id("d0");
  CHECK_FALSE(f.endpoint_configured(app, ch.send_ep));
  CHECK_FALSE(f.endpoint_configured(app, ch.memory_ep));
  CHECK(f.endpoint_configured(d0, ch.recv_ep));  // receiver side untouched
  CHECK(k.capability(ch.sender_cap).revoked);
  CHECK_THROWS_AS(k.revoke(ch.sender_cap), KernelError);  // double revoke
  k.verify_integrity();
}

TEST_CASE("destroying an activity revokes everything it holds") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto s = k.create_activity("app", "t0").id;
  const auto r = k.create_activity("d0", "t0").id;
  const ChannelHandle ch = k.establish_channel(s, r, 1, 64, 4096);
  const MemoryGrant g = k.grant_memory(s, "d1", 0, 4096, true, true);

  CHECK(k.capabilities_of(s) ==
        std::vector<std::uint64_t>{ch.sender_cap, g.cap});
  k.destroy_activity(s);

  const TileId app = f.tile_id("app");
  CHECK_FALSE(f.endpoint_configured(app, ch.send_ep));
  CHECK_FALSE(f.endpoint_configured(app, ch.memory_ep));
  CHECK_FALSE(f.endpoint_configured(app, g.ep));
  CHECK(k.capability(ch.sender_cap).revoked);
  CHECK(k.capability(g.cap).revoked);
  CHECK(k.capabilities_of(s).empty());
  k.verify_integrity();
}

TEST_CASE("grant_memory issues a standalone memory-range capability") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto a = k.create_activity("pool", "t0").id;
  const MemoryGrant g = k.grant_memory(a, "d2", 4096, 8192, true, false);

  const Capability& cap = k.capability(g.cap);
  CHECK(cap.kind == CapKind::MemoryRange);
  CHECK(cap.tile == "pool");
  CHECK(cap.target_tile == "d2");
  CHECK(f.endpoint_configured(f.tile_id("pool"), g.ep));
  k.verify_integrity();
}

TEST_CASE("transitive reach follows live send/memory capabilities only") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto app = k.create_activity("app", "blue").id;
  const auto d0 = k.create_activity("d0", "blue").id;
  const auto d1 = k.create_activity("d1", "blue").id;
  const auto pool = k.create_activity("pool", "red").id;

  CHECK(k.check_transitive_reach("blue") ==
        std::set<std::string>{"app", "d0", "d1"});
  CHECK(k.check_transitive_reach("red") == std::set<std::string>{"pool"});
  CHECK(k.check_transitive_reach("green").empty());

  // blue: app -> d0 -> d1; red: pool -> d2 (no activity needed on d2's side
  // for a memory grant).
  const ChannelHandle c1 = k.establish_channel(app, d0, 1, 64, 4096);
  const ChannelHandle c2 = k.establish_channel(d0, d1, 1, 64, 4096);
  const MemoryGrant g = k.grant_memory(pool, "d2", 0, 4096, false, true);

  CHECK(k.check_transitive_reach("blue") ==
        std::set<std::string>{"app", "d0", "d1"});
  CHECK(k.check_transitive_reach("red") ==
        std::set<std::string>{"pool", "d2"});

  // Revoking the middle hop cuts transitive reach beyond it... for a
  // tenant whose only path ran through it.
  k.revoke(c2.sender_cap);
  CHECK(k.check_transitive_reach("blue") ==
        std::set<std::string>{"app", "d0", "d1"});  // d1 hosts an activity
  k.revoke(g.cap);
  CHECK(k.check_transitive_reach("red") == std::set<std::string>{"pool"});
  (void)c1;
  k.verify_integrity();
}

TEST_CASE("reach agrees with an independent BFS over random graphs") {
  std::mt19937 rng(20260824);
  const std::vector<std::string> tiles{"app", "pool", "d0", "d1",
                                       "d2",  "d3",   "d4", "d5"};
  const std::vector<std::string> tenants{"a", "b", "c"};

  for (int round = 0; round < 50; ++round) {
    Fabric f(wire_only_config());
    Kernel k(f);

    std::vector<std::uint64_t> acts;
    std::map<std::string, std::uint64_t> act_on;
    for (const auto& tile : tiles) {
      if (rng() % 4 == 0) continue;  // leave some tiles empty
      const auto id =
          k.create_activity(tile, tenants[rng() % tenants.size()]).id;
      acts.push_back(id);
      act_on[tile] = id;
    }

    std::vector<std::uint64_t> caps;
    const int edges = static_cast<int>(rng() % 8);
    for (int e = 0; e < edges; ++e) {
      const auto& from = tiles[rng() % tiles.size()];
      const auto& to = tiles[rng() % tiles.size()];
      if (from == to || act_on.find(from) == act_on.end()) continue;
      if (rng() % 2 == 0 && act_on.find(to) != act_on.end()) {
        try {
          const ChannelHandle ch =
              k.establish_channel(act_on[from], act_on[to], 1, 64, 4096);
          caps.push_back(ch.sender_cap);
          caps.push_back(ch.receiver_cap);
        } catch (const KernelError&) {
          // Endpoint exhaustion on a busy tile: fine, skip the edge.
        }
      } else {
        const MemoryGrant g =
            k.grant_memory(act_on[from], to, 0, 4096, false, true);
        caps.push_back(g.cap);
      }
    }
    // Randomly revoke a few.
    for (std::uint64_t cap : caps) {
      if (rng() % 3 == 0 && !k.capability(cap).revoked) k.revoke(cap);
    }

    for (const auto& tenant : tenants) {
      CHECK(k.check_transitive_reach(tenant) ==
            bfs_reach(k, acts, caps, tenant));
    }
    k.verify_integrity();
  }
}

TEST_CASE("operations on dead or unknown activities fail") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto a = k.create_activity("app", "t0").id;
  const auto b = k.create_activity("d0", "t0").id;
  k.destroy_activity(a);

  CHECK_THROWS_AS(k.establish_channel(a, b, 1, 64, 4096), KernelError);
  CHECK_THROWS_AS(k.grant_memory(a, "d1", 0, 64, true, true), KernelError);
  CHECK_THROWS_AS(k.destroy_activity(a), KernelError);
  CHECK_THROWS_AS(k.activity(9999), KernelError);
  CHECK_THROWS_AS(k.capability(9999), KernelError);
  CHECK_THROWS_AS(k.revoke(9999), KernelError);
}

TEST_CASE("endpoint allocation exhausts at the per-tile limit") {
  Fabric f(wire_only_config());
  Kernel k(f);
  const auto a = k.create_activity("app", "t0").id;
  // Each grant consumes one endpoint on "app"; 32 fit, the 33rd fails.
  for (int i = 0; i < 32; ++i) {
    k.grant_memory(a, "d0", 0, 64, false, true);
  }
  CHECK_THROWS_WITH_AS(k.grant_memory(a, "d0", 0, 64, false, true),
                       doctest::Contains("exhaustion"), KernelError);
  k.verify_integrity();
}
