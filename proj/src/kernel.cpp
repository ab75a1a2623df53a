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

#include "fabricflow/kernel.hpp"

#include <algorithm>
#include <deque>

namespace fabricflow {

std::string_view to_string(CapKind kind) {
  switch (kind) {
    case CapKind::SendTo: return "send-to";
    case CapKind::ReceiveOn: return "receive-on";
    case CapKind::MemoryRange: return "memory-range";
  }
  return "capability";
}

Kernel::Kernel(Fabric& fabric) : fabric_(fabric) {}

const Activity& Kernel::create_activity(std::string_view tile,
                                        std::string_view tenant) {
  const TileSpec& spec = fabric_.config().tile(tile);  // throws if unknown
  if (spec.kind == TileKind::Kernel) {
    throw KernelError("cannot create an activity on the kernel tile");
  }
  if (tile_owner_.count(spec.id)) {
    throw KernelError("tile \"" + spec.id + "\" already hosts an activity");
  }
  const std::uint64_t id = next_activity_id_++;
  Activity act{id, spec.id, std::string(tenant), true};
  tile_owner_[spec.id] = id;
  return activities_.emplace(id, std::move(act)).first->second;
}

Activity& Kernel::live_activity(std::uint64_t id) {
  auto it = activities_.find(id);
  if (it == activities_.end() || !it->second.live) {
    throw KernelError("activity " + std::to_string(id) + " is not live");
  }
  return it->second;
}

void Kernel::destroy_activity(std::uint64_t id) {
  Activity& act = live_activity(id);
  for (auto& [cap_id, cap] : caps_) {
    if (cap.holder == id && !cap.revoked) revoke(cap_id);
  }
  tile_owner_.erase(act.tile);
  act.live = false;
}

EpIndex Kernel::allocate_ep(const std::string& tile) {
  const TileId id = fabric_.tile_id(tile);
  for (EpIndex e = 0; e < Fabric::kEndpointsPerTile; ++e) {
    if (!fabric_.endpoint_configured(id, e)) return e;
  }
  throw KernelError("endpoint exhaustion on tile \"" + tile + "\"");
}

std::uint64_t Kernel::issue_cap(std::uint64_t holder, CapKind kind,
                                const std::string& tile,
                                std::vector<EpIndex> endpoints,
                                const std::string& target_tile) {
  const std::uint64_t id = next_cap_id_++;
  caps_.emplace(id, Capability{id, holder, kind, tile, std::move(endpoints),
                               target_tile, false});
  return id;
}

ChannelHandle Kernel::establish_channel(std::uint64_t sender,
                                        std::uint64_t receiver,
                                        std::uint32_t slots,
                                        std::uint64_t slot_bytes,
                                        std::uint64_t buffer_bytes) {
  Activity& snd = live_activity(sender);
  Activity& rcv = live_activity(receiver);
  if (snd.tile == rcv.tile) {
    throw KernelError("channel endpoints must live on different tiles");
  }

  const TileId snd_tile = fabric_.tile_id(snd.tile);
  const TileId rcv_tile = fabric_.tile_id(rcv.tile);

  ChannelHandle ch;
  ch.sender_activity = sender;
  ch.receiver_activity = receiver;
  ch.sender_tile = snd.tile;
  ch.receiver_tile = rcv.tile;
  ch.slots = slots;
  ch.slot_bytes = slot_bytes;
  ch.buffer_bytes = buffer_bytes;

  // Receive endpoint first: the send endpoint snapshots it for credits.
  ch.recv_ep = allocate_ep(rcv.tile);
  ch.send_ep = allocate_ep(snd.tile);
  ch.memory_ep = ch.send_ep;  // placeholder until allocated below

  ch.receiver_cap = issue_cap(receiver, CapKind::ReceiveOn, rcv.tile,
                              {ch.recv_ep}, snd.tile);
  fabric_.configure_endpoint(authority_, rcv_tile, ch.recv_ep,
                             ReceiveEpConfig{slots, slot_bytes,
                                             ch.receiver_cap});

  // The sender's single channel capability backs both the notify path and
  // the data path, so one revocation kills the whole outbound half.
  fabric_.configure_endpoint(
      authority_, snd_tile, ch.send_ep,
      SendEpConfig{rcv_tile, ch.recv_ep, /*cap_id=*/next_cap_id_});
  ch.memory_ep = allocate_ep(snd.tile);
  fabric_.configure_endpoint(
      authority_, snd_tile, ch.memory_ep,
      MemoryEpConfig{rcv_tile, 0, buffer_bytes, /*can_read=*/false,
                     /*can_write=*/true, /*cap_id=*/next_cap_id_});
  ch.sender_cap = issue_cap(sender, CapKind::SendTo, snd.tile,
                            {ch.send_ep, ch.memory_ep}, rcv.tile);

  return ch;
}

MemoryGrant Kernel::grant_memory(std::uint64_t activity,
                                 std::string_view target_tile,
                                 std::uint64_t base, std::uint64_t len,
                                 bool can_read, bool can_write) {
  Activity& act = live_activity(activity);
  const TileSpec& target = fabric_.config().tile(target_tile);
  MemoryGrant grant;
  grant.ep = allocate_ep(act.tile);
  fabric_.configure_endpoint(
      authority_, fabric_.tile_id(act.tile), grant.ep,
      MemoryEpConfig{fabric_.tile_id(target.id), base, len, can_read,
                     can_write, /*cap_id=*/next_cap_id_});
  grant.cap = issue_cap(activity, CapKind::MemoryRange, act.tile, {grant.ep},
                        target.id);
  return grant;
}

void Kernel::revoke(std::uint64_t cap_id) {
  auto it = caps_.find(cap_id);
  if (it == caps_.end()) {
    throw KernelError("unknown capability " + std::to_string(cap_id));
  }
  Capability& cap = it->second;
  if (cap.revoked) {
    throw KernelError("capability " + std::to_string(cap_id) +
                      " is already revoked");
  }
  cap.revoked = true;
  const TileId tile = fabric_.tile_id(cap.tile);
  for (const EpIndex e : cap.endpoints) {
    fabric_.clear_endpoint(authority_, tile, e);
  }
}

std::set<std::string> Kernel::check_transitive_reach(
    std::string_view tenant) const {
  std::set<std::string> reached;
  std::deque<std::string> frontier;
  for (const auto& [id, act] : activities_) {
    if (act.live && act.tenant == tenant && reached.insert(act.tile).second) {
      frontier.push_back(act.tile);
    }
  }
  while (!frontier.empty()) {
    const std::string tile = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& [id, cap] : caps_) {
      if (cap.revoked || cap.tile != tile) continue;
      if (cap.kind != CapKind::SendTo && cap.kind != CapKind::MemoryRange) {
        continue;
      }
      if (reached.insert(cap.target_tile).second) {
        frontier.push_back(cap.target_tile);
      }
    }
  }
  return reached;
}

void Kernel::verify_integrity() const {
  // Direction 1: every endpoint a live capability claims must exist and
  // carry that capability's id.
  for (const auto& [id, cap] : caps_) {
    if (cap.revoked) continue;
    const TileId tile = fabric_.tile_id(cap.tile);
    for (const EpIndex e : cap.endpoints) {
      const auto ep_cap = fabric_.endpoint_cap(tile, e);
      if (!ep_cap || *ep_cap != id) {
        throw KernelError("capability " + std::to_string(id) +
                          " backs endpoint " + std::to_string(e) + " on \"" +
                          cap.tile + "\" which is gone or re-owned");
      }
    }
  }
  // Direction 2: every configured endpoint must name a live capability
  // that claims it.
  for (TileId t = 0; t < fabric_.tile_count(); ++t) {
    for (EpIndex e = 0; e < Fabric::kEndpointsPerTile; ++e) {
      if (!fabric_.endpoint_configured(t, e)) continue;
      const auto ep_cap = fabric_.endpoint_cap(t, e);
      if (!ep_cap || *ep_cap == 0) {
        throw KernelError("endpoint without an issuing capability on \"" +
                          fabric_.tile(t).id + "\"");
      }
      const auto it = caps_.find(*ep_cap);
      if (it == caps_.end() || it->second.revoked ||
          it->second.tile != fabric_.tile(t).id ||
          std::find(it->second.endpoints.begin(), it->second.endpoints.end(),
                    e) == it->second.endpoints.end()) {
        throw KernelError("endpoint " + std::to_string(e) + " on \"" +
                          fabric_.tile(t).id +
                          "\" is not backed by a live capability");
      }
    }
  }
}

const Activity& Kernel::activity(std::uint64_t id) const {
  const auto it = activities_.find(id);
  if (it == activities_.end()) {
    throw KernelError("unknown activity " + std::to_string(id));
  }
  return it->second;
}

const Capability& Kernel::capability(std::uint64_t id) const {
  const auto it = caps_.find(id);
  if (it == caps_.end()) {
    throw KernelError("unknown capability " + std::to_string(id));
  }
  return it->second;
}

std::vector<std::uint64_t> Kernel::capabilities_of(
    std::uint64_t activity) const {
  std::vector<std::uint64_t> out;
  for (const auto& [id, cap] : caps_) {
    if (cap.holder == activity && !cap.revoked) out.push_back(id);
  }
  return out;
}

}  // namespace fabricflow
