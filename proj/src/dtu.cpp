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

#include "fabricflow/dtu.hpp"

#include <cassert>
#include <cmath>
#include <memory>

namespace fabricflow {

namespace {

/// Erase an event handle from a registration list (linear scan; the lists
/// hold at most a few in-flight entries).
void drop_handle(std::vector<Engine::EventHandle>& handles,
                 std::uint64_t seq) {
  for (auto it = handles.begin(); it != handles.end(); ++it) {
    if (it->seq == seq) {
      handles.erase(it);
      return;
    }
  }
}

}  // namespace

std::string_view to_string(DtuErrorCode code) {
  switch (code) {
    case DtuErrorCode::AccessDenied: return "AccessDenied";
    case DtuErrorCode::MessageTooLarge: return "MessageTooLarge";
    case DtuErrorCode::InvalidHandle: return "InvalidHandle";
  }
  return "DtuError";
}

std::string_view to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::Notify: return "notify";
    case MsgKind::Response: return "response";
    case MsgKind::Generic: return "generic";
  }
  return "message";
}

Fabric::Fabric(FabricConfig config, std::uint64_t run_seed)
    : config_(std::move(config)) {
  validate_config(config_);
  endpoints_.resize(config_.tiles.size());
  for (auto& tile_eps : endpoints_) tile_eps.resize(kEndpointsPerTile);
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                    static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(run_seed),
                    static_cast<std::uint32_t>(run_seed >> 32)};
  jitter_rng_.seed(seq);
}

TileId Fabric::tile_id(std::string_view tile) const {
  return static_cast<TileId>(config_.tile_index(tile));
}

Fabric::Endpoint& Fabric::ep(TileId tile, EpIndex index) {
  if (tile >= endpoints_.size() || index >= kEndpointsPerTile) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "tile or endpoint index out of range");
  }
  return endpoints_[tile][index];
}

const Fabric::Endpoint& Fabric::ep(TileId tile, EpIndex index) const {
  return const_cast<Fabric*>(this)->ep(tile, index);
}

Fabric::HopCost Fabric::hop_cost(TileId src, TileId dst) const {
  const Locality loc = tile(src).machine == tile(dst).machine
                           ? Locality::Local
                           : Locality::Cross;
  return HopCost{loc, config_.one_way_ns(loc), config_.bridge_ns(loc),
                 config_.per_byte_ns(loc)};
}

SimTime Fabric::byte_ns(std::uint64_t bytes, const HopCost& hop) const {
  if (hop.per_byte == 0.0) return 0;
  return std::llround(static_cast<double>(bytes) * hop.per_byte);
}

SimTime Fabric::perturb(SimTime wire_delay) {
  if (config_.jitter_ppm == 0 || wire_delay == 0) return wire_delay;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double scale =
      static_cast<double>(config_.jitter_ppm) / 1'000'000.0 * unit(jitter_rng_);
  const SimTime jittered =
      wire_delay + std::llround(static_cast<double>(wire_delay) * scale);
  return jittered < 0 ? 0 : jittered;
}

// -- control plane ---------------------------------------------------------

void Fabric::configure_endpoint(const Authority& auth, TileId tile_idx,
                                EpIndex index, const EndpointConfig& config) {
  if (auth.level != Authority::Level::Kernel) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "endpoint configuration requires kernel authority");
  }
  Endpoint& slot = ep(tile_idx, index);
  const bool in_use = !std::holds_alternative<std::monostate>(slot.state);
  if (in_use) {
    // Replacing a live endpoint discards queued and in-flight state.
    clear_endpoint(auth, tile_idx, index);
  }

  if (const auto* rx = std::get_if<ReceiveEpConfig>(&config)) {
    if (rx->slots == 0) {
      throw std::invalid_argument("receive endpoint needs at least one slot");
    }
    ReceiveEp state;
    state.cfg = *rx;
    slot.state = std::move(state);
  } else if (const auto* tx = std::get_if<SendEpConfig>(&config)) {
    const Endpoint& target = ep(tx->target_tile, tx->target_ep);
    const auto* target_rx = std::get_if<ReceiveEp>(&target.state);
    if (target_rx == nullptr) {
      throw std::invalid_argument(
          "send endpoint target must be a configured receive endpoint");
    }
    SendEp state;
    state.cfg = *tx;
    state.target_generation = target.generation;
    state.target_slot_bytes = target_rx->cfg.slot_bytes;
    state.initial_credits = target_rx->cfg.slots;
    state.credits = target_rx->cfg.slots;
    slot.state = std::move(state);
  } else {
    const auto& mem = std::get<MemoryEpConfig>(config);
    if (mem.target_tile >= endpoints_.size()) {
      throw std::invalid_argument("memory endpoint target tile out of range");
    }
    slot.state = MemoryEp{mem};
  }
  ++slot.generation;
  engine_.note(tile(tile_idx).id, in_use ? "ep-reconfig" : "ep-config");
}

void Fabric::clear_endpoint(const Authority& auth, TileId tile_idx,
                            EpIndex index) {
  if (auth.level != Authority::Level::Kernel) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "endpoint configuration requires kernel authority");
  }
  Endpoint& slot = ep(tile_idx, index);
  if (std::holds_alternative<std::monostate>(slot.state)) return;

  if (auto* rx = std::get_if<ReceiveEp>(&slot.state)) {
    // Undelivered messages vanish without any event at this tile; their
    // credits are gone for good (the channel is dead anyway).
    for (const auto& handle : rx->inbound) {
      if (engine_.cancel(handle)) ++dropped_messages_;
    }
    for (const QueuedMessage& msg : rx->queue) {
      Endpoint& origin = ep(msg.src_tile, msg.src_ep);
      if (auto* tx = std::get_if<SendEp>(&origin.state);
          tx != nullptr && origin.generation == msg.src_generation) {
        --tx->queued_at_receiver;
      }
      ++dropped_messages_;
    }
  } else if (auto* tx = std::get_if<SendEp>(&slot.state)) {
    for (const auto& handle : tx->inbound_replies) {
      if (engine_.cancel(handle)) ++dropped_messages_;
    }
  }

  slot.state = std::monostate{};
  ++slot.generation;
  engine_.note(tile(tile_idx).id, "ep-clear");
}

bool Fabric::endpoint_configured(TileId tile_idx, EpIndex index) const {
  return !std::holds_alternative<std::monostate>(ep(tile_idx, index).state);
}

std::optional<std::uint64_t> Fabric::endpoint_cap(TileId tile_idx,
                                                  EpIndex index) const {
  const Endpoint& slot = ep(tile_idx, index);
  if (const auto* rx = std::get_if<ReceiveEp>(&slot.state)) {
    return rx->cfg.cap_id;
  }
  if (const auto* tx = std::get_if<SendEp>(&slot.state)) return tx->cfg.cap_id;
  if (const auto* mem = std::get_if<MemoryEp>(&slot.state)) {
    return mem->cfg.cap_id;
  }
  return std::nullopt;
}

std::optional<TileId> Fabric::endpoint_target(TileId tile_idx,
                                              EpIndex index) const {
  const Endpoint& slot = ep(tile_idx, index);
  if (const auto* tx = std::get_if<SendEp>(&slot.state)) {
    return tx->cfg.target_tile;
  }
  if (const auto* mem = std::get_if<MemoryEp>(&slot.state)) {
    return mem->cfg.target_tile;
  }
  return std::nullopt;
}

// -- data plane ------------------------------------------------------------

void Fabric::set_receive_handler(TileId tile_idx, EpIndex index,
                                 ReceiveHandler handler) {
  auto* rx = std::get_if<ReceiveEp>(&ep(tile_idx, index).state);
  if (rx == nullptr) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "no receive endpoint configured at this index");
  }
  rx->handler = std::move(handler);
}

void Fabric::set_response_handler(TileId tile_idx, EpIndex index,
                                  ResponseHandler handler) {
  auto* tx = std::get_if<SendEp>(&ep(tile_idx, index).state);
  if (tx == nullptr) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "no send endpoint configured at this index");
  }
  tx->response_handler = std::move(handler);
}

void Fabric::send_message(TileId tile_idx, EpIndex index,
                          std::uint64_t payload_bytes, MsgKind kind) {
  Endpoint& slot = ep(tile_idx, index);
  auto* tx = std::get_if<SendEp>(&slot.state);
  if (tx == nullptr) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "send endpoint not configured");
  }
  const Endpoint& target = ep(tx->cfg.target_tile, tx->cfg.target_ep);
  if (!std::holds_alternative<ReceiveEp>(target.state) ||
      target.generation != tx->target_generation) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "target receive endpoint no longer exists");
  }
  if (payload_bytes > tx->target_slot_bytes) {
    throw DtuError(DtuErrorCode::MessageTooLarge,
                   "payload of " + std::to_string(payload_bytes) +
                       " bytes exceeds receiver slot size of " +
                       std::to_string(tx->target_slot_bytes));
  }
  if (tx->credits == 0) {
    // Queued, not lost: transmits as soon as a credit returns.
    tx->blocked.emplace_back(payload_bytes, kind);
    return;
  }
  transmit(tile_idx, index, *tx, payload_bytes, kind);
}

void Fabric::transmit(TileId tile_idx, EpIndex index, SendEp& tx,
                      std::uint64_t payload_bytes, MsgKind kind) {
  const TileId dst_tile = tx.cfg.target_tile;
  const EpIndex dst_ep = tx.cfg.target_ep;
  Endpoint& target = ep(dst_tile, dst_ep);
  auto* target_rx = std::get_if<ReceiveEp>(&target.state);
  if (target_rx == nullptr || target.generation != tx.target_generation) {
    // Can only happen for queued sends released after the receiver died.
    ++dropped_messages_;
    return;
  }

  assert(tx.credits > 0);
  --tx.credits;
  ++tx.in_flight_msgs;
  engine_.note(tile(tile_idx).id, "send");

  const HopCost hop = hop_cost(tile_idx, dst_tile);
  const SimTime delay = config_.handling_ns(tile(tile_idx)) +
                        perturb(hop.one_way + hop.bridge +
                                byte_ns(payload_bytes, hop));

  const std::uint64_t src_generation = ep(tile_idx, index).generation;
  const std::uint64_t dst_generation = target.generation;
  auto handle = std::make_shared<Engine::EventHandle>();
  *handle = engine_.schedule(
      delay, tile(dst_tile).id, "recv",
      [this, tile_idx, index, src_generation, dst_tile, dst_ep,
       dst_generation, payload_bytes, kind, handle]() {
        Endpoint& dst = ep(dst_tile, dst_ep);
        auto* rx = std::get_if<ReceiveEp>(&dst.state);
        // clear_endpoint cancels inbound events, so arrival implies a live
        // endpoint of the expected generation.
        assert(rx != nullptr && dst.generation == dst_generation);
        (void)dst_generation;
        drop_handle(rx->inbound, handle->seq);
        assert(rx->queue.size() < rx->cfg.slots);

        QueuedMessage msg;
        msg.msg_id = rx->next_msg_id++;
        msg.src_tile = tile_idx;
        msg.src_ep = index;
        msg.src_generation = src_generation;
        msg.payload_bytes = payload_bytes;
        msg.kind = kind;
        rx->queue.push_back(msg);

        Endpoint& origin = ep(tile_idx, index);
        if (auto* origin_tx = std::get_if<SendEp>(&origin.state);
            origin_tx != nullptr && origin.generation == src_generation) {
          --origin_tx->in_flight_msgs;
          ++origin_tx->queued_at_receiver;
        }

        if (rx->handler) {
          MessageView view{tile_idx, index, msg.msg_id, payload_bytes, kind};
          rx->handler(view);
        }
      });
  target_rx->inbound.push_back(*handle);
}

void Fabric::reply(TileId tile_idx, EpIndex index, std::uint64_t msg_id,
                   std::uint64_t payload_bytes) {
  Endpoint& slot = ep(tile_idx, index);
  auto* rx = std::get_if<ReceiveEp>(&slot.state);
  if (rx == nullptr) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "receive endpoint not configured");
  }
  auto it = rx->queue.begin();
  for (; it != rx->queue.end(); ++it) {
    if (it->msg_id == msg_id) break;
  }
  if (it == rx->queue.end()) {
    throw DtuError(DtuErrorCode::InvalidHandle,
                   "message " + std::to_string(msg_id) +
                       " is not queued (already replied?)");
  }
  const QueuedMessage msg = *it;
  rx->queue.erase(it);  // slot freed

  Endpoint& origin = ep(msg.src_tile, msg.src_ep);
  auto* origin_tx = std::get_if<SendEp>(&origin.state);
  if (origin_tx == nullptr || origin.generation != msg.src_generation) {
    // Originating endpoint revoked; the response has nowhere to go.
    ++dropped_messages_;
    return;
  }
  --origin_tx->queued_at_receiver;
  ++origin_tx->in_flight_replies;
  engine_.note(tile(tile_idx).id, "reply");

  const HopCost hop = hop_cost(tile_idx, msg.src_tile);
  const SimTime delay =
      config_.handling_ns(tile(tile_idx)) +
      perturb(hop.one_way + hop.bridge + byte_ns(payload_bytes, hop));

  const TileId origin_tile = msg.src_tile;
  const EpIndex origin_ep = msg.src_ep;
  const std::uint64_t origin_generation = msg.src_generation;
  auto handle = std::make_shared<Engine::EventHandle>();
  *handle = engine_.schedule(
      delay, tile(origin_tile).id, "recv",
      [this, tile_idx, index, origin_tile, origin_ep, origin_generation,
       payload_bytes, handle]() {
        Endpoint& origin_slot = ep(origin_tile, origin_ep);
        auto* tx = std::get_if<SendEp>(&origin_slot.state);
        assert(tx != nullptr && origin_slot.generation == origin_generation);
        (void)origin_generation;
        drop_handle(tx->inbound_replies, handle->seq);

        // Credit returns with the response; a blocked send goes out now.
        --tx->in_flight_replies;
        ++tx->credits;
        assert(tx->credits <= tx->initial_credits);
        while (tx->credits > 0 && !tx->blocked.empty()) {
          const auto [bytes, kind] = tx->blocked.front();
          tx->blocked.pop_front();
          transmit(origin_tile, origin_ep, *tx, bytes, kind);
        }

        if (tx->response_handler) {
          MessageView view{tile_idx, index, 0, payload_bytes,
                           MsgKind::Response};
          tx->response_handler(view);
        }
      });
  origin_tx->inbound_replies.push_back(*handle);
}

// -- memory transfers ------------------------------------------------------

void Fabric::write_memory(TileId tile_idx, EpIndex index, std::uint64_t offset,
                          std::uint64_t size, TransferHandler on_done) {
  run_memory_transfer(tile_idx, index, offset, size, /*is_write=*/true,
                      std::move(on_done));
}

void Fabric::read_memory(TileId tile_idx, EpIndex index, std::uint64_t offset,
                         std::uint64_t size, TransferHandler on_done) {
  run_memory_transfer(tile_idx, index, offset, size, /*is_write=*/false,
                      std::move(on_done));
}

/// All state shared by the packet events of one memory transfer.
struct Fabric::MemXfer {
  TileId tile = 0;
  EpIndex index = 0;
  std::uint64_t generation = 0;
  std::uint64_t size = 0;
  std::uint64_t packet_bytes = 0;
  HopCost hop{};
  std::string src_name;
  std::string pkt_actor;
  std::string ack_actor;
  const char* done_label = "";
  const char* abort_label = "";
  std::uint32_t total = 0;
  std::uint32_t injected = 0;
  std::uint32_t arrived = 0;
  bool aborted = false;
  TransferHandler on_done;
};

bool Fabric::xfer_endpoint_alive(const MemXfer& xfer) const {
  const Endpoint& slot = ep(xfer.tile, xfer.index);
  return std::holds_alternative<MemoryEp>(slot.state) &&
         slot.generation == xfer.generation;
}

void Fabric::xfer_abort(const std::shared_ptr<MemXfer>& xfer) {
  xfer->aborted = true;
  engine_.note(xfer->src_name, xfer->abort_label);
  xfer->on_done(
      TransferOutcome{false, xfer->injected, xfer->total, engine_.now()});
}

/// Serialized-rtt: one packet in flight at a time; packet k+1 is injected
/// when packet k's ack returns, so each packet costs a full
/// RTT + 2*bridge + bytes*per_byte.
void Fabric::serialized_inject(const std::shared_ptr<MemXfer>& xfer) {
  if (!xfer_endpoint_alive(*xfer)) {
    xfer_abort(xfer);
    return;
  }
  const std::uint64_t done =
      static_cast<std::uint64_t>(xfer->injected) * xfer->packet_bytes;
  const std::uint64_t bytes =
      std::min<std::uint64_t>(xfer->packet_bytes, xfer->size - done);
  ++xfer->injected;
  const SimTime data_leg =
      perturb(xfer->hop.one_way + xfer->hop.bridge + byte_ns(bytes, xfer->hop));
  engine_.schedule(data_leg, xfer->pkt_actor, "pkt", [this, xfer]() {
    const SimTime ack_leg = perturb(xfer->hop.one_way + xfer->hop.bridge);
    engine_.schedule(ack_leg, xfer->ack_actor, "ack", [this, xfer]() {
      ++xfer->arrived;
      if (xfer->arrived == xfer->total) {
        engine_.note(xfer->src_name, xfer->done_label);
        xfer->on_done(
            TransferOutcome{true, xfer->total, xfer->total, engine_.now()});
      } else {
        serialized_inject(xfer);
      }
    });
  });
}

void Fabric::run_memory_transfer(TileId tile_idx, EpIndex index,
                                 std::uint64_t offset, std::uint64_t size,
                                 bool is_write, TransferHandler on_done) {
  Endpoint& slot = ep(tile_idx, index);
  auto* mem = std::get_if<MemoryEp>(&slot.state);
  if (mem == nullptr) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "memory endpoint not configured");
  }
  if (is_write ? !mem->cfg.can_write : !mem->cfg.can_read) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   is_write ? "memory endpoint lacks write permission"
                            : "memory endpoint lacks read permission");
  }
  if (offset + size > mem->cfg.len || offset + size < offset) {
    throw DtuError(DtuErrorCode::AccessDenied,
                   "transfer range exceeds the endpoint's window");
  }

  auto xfer = std::make_shared<MemXfer>();
  xfer->tile = tile_idx;
  xfer->index = index;
  xfer->generation = slot.generation;
  xfer->size = size;
  xfer->packet_bytes = config_.packet_bytes;
  xfer->src_name = tile(tile_idx).id;
  xfer->done_label = is_write ? "wmem-done" : "rmem-done";
  xfer->abort_label = is_write ? "wmem-abort" : "rmem-abort";
  xfer->total = static_cast<std::uint32_t>(
      (size + config_.packet_bytes - 1) / config_.packet_bytes);
  xfer->on_done = std::move(on_done);

  if (xfer->total == 0) {
    // Zero-length transfers complete at once, with zero packets.
    engine_.schedule(0, xfer->src_name, xfer->done_label, [this, xfer]() {
      xfer->on_done(TransferOutcome{true, 0, 0, engine_.now()});
    });
    return;
  }

  const TileId far_tile = mem->cfg.target_tile;
  xfer->hop = hop_cost(tile_idx, far_tile);
  // Data packets land at the far tile for writes and at the reading tile
  // for reads; the ack/request leg touches the opposite side.
  xfer->pkt_actor = is_write ? tile(far_tile).id : xfer->src_name;
  xfer->ack_actor = is_write ? xfer->src_name : tile(far_tile).id;

  if (config_.ack_mode == AckMode::SerializedRtt) {
    serialized_inject(xfer);
    return;
  }

  // Pipelined one-way: packet k is injected k*byte_ns(packet_bytes) after
  // the start and arrives after a bridge-delayed one-way trip plus the
  // serialization of every byte injected so far. The last packet's arrival
  // is the completion point:
  //   one_way + bridge + byte_ns(size) + (P-1)*byte_ns(packet_bytes).
  const SimTime full_pkt_ns = byte_ns(xfer->packet_bytes, xfer->hop);
  for (std::uint32_t i = 0; i < xfer->total; ++i) {
    const std::uint64_t prefix = std::min<std::uint64_t>(
        size, (static_cast<std::uint64_t>(i) + 1) * xfer->packet_bytes);
    engine_.schedule(
        static_cast<SimTime>(i) * full_pkt_ns, xfer->src_name, "inject",
        [this, xfer, prefix]() {
          if (xfer->aborted) return;
          if (!xfer_endpoint_alive(*xfer)) {
            xfer_abort(xfer);
            return;
          }
          ++xfer->injected;
          const SimTime arrival = perturb(xfer->hop.one_way + xfer->hop.bridge +
                                          byte_ns(prefix, xfer->hop));
          engine_.schedule(arrival, xfer->pkt_actor, "pkt", [this, xfer]() {
            ++xfer->arrived;
            if (xfer->arrived == xfer->total && !xfer->aborted) {
              engine_.note(xfer->src_name, xfer->done_label);
              xfer->on_done(TransferOutcome{true, xfer->total, xfer->total,
                                            engine_.now()});
            }
          });
        });
  }
}

// -- instrumentation -------------------------------------------------------

std::vector<CreditAudit> Fabric::credit_audit() const {
  std::vector<CreditAudit> out;
  for (TileId t = 0; t < endpoints_.size(); ++t) {
    for (EpIndex e = 0; e < kEndpointsPerTile; ++e) {
      const auto* tx = std::get_if<SendEp>(&endpoints_[t][e].state);
      if (tx == nullptr) continue;
      CreditAudit audit;
      audit.tile = t;
      audit.ep = e;
      audit.initial_credits = tx->initial_credits;
      audit.credits = tx->credits;
      audit.blocked_sends = static_cast<std::uint32_t>(tx->blocked.size());
      audit.in_flight_msgs = tx->in_flight_msgs;
      audit.queued_at_receiver = tx->queued_at_receiver;
      audit.in_flight_replies = tx->in_flight_replies;
      out.push_back(audit);
    }
  }
  return out;
}

}  // namespace fabricflow
