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
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fabricflow/config.hpp"
#include "fabricflow/engine.hpp"

namespace fabricflow {

using TileId = std::uint32_t;
using EpIndex = std::uint32_t;

enum class DtuErrorCode { AccessDenied, MessageTooLarge, InvalidHandle };

std::string_view to_string(DtuErrorCode code);

/// Raised synchronously when a data-plane operation is rejected at the
/// issuing tile. Rejected operations never generate events at other tiles.
class DtuError : public std::runtime_error {
 public:
  DtuError(DtuErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  DtuErrorCode code() const { return code_; }

 private:
  DtuErrorCode code_;
};

/// Control-plane authority. Endpoint configuration is reserved to the
/// kernel; a user-level authority attempting it gets AccessDenied. The
/// kernel module owns the single kernel-level instance.
struct Authority {
  enum class Level { User, Kernel };
  Level level = Level::User;

  static Authority user() { return Authority{Level::User}; }
};

enum class MsgKind { Notify, Response, Generic };

std::string_view to_string(MsgKind kind);

/// A delivered message as seen by a receive handler. `msg_id` is the reply
/// handle: pass it to Fabric::reply() exactly once.
struct MessageView {
  TileId src_tile = 0;
  EpIndex src_ep = 0;
  std::uint64_t msg_id = 0;
  std::uint64_t payload_bytes = 0;
  MsgKind kind = MsgKind::Generic;
};

// -- endpoint configuration records (control plane) ------------------------

struct ReceiveEpConfig {
  std::uint32_t slots = 1;
  std::uint64_t slot_bytes = 64;
  std::uint64_t cap_id = 0;  ///< Issuing capability; 0 = none recorded.
};

struct SendEpConfig {
  TileId target_tile = 0;
  EpIndex target_ep = 0;
  std::uint64_t cap_id = 0;
};

struct MemoryEpConfig {
  TileId target_tile = 0;
  std::uint64_t base = 0;
  std::uint64_t len = 0;
  bool can_read = false;
  bool can_write = true;
  std::uint64_t cap_id = 0;
};

using EndpointConfig =
    std::variant<ReceiveEpConfig, SendEpConfig, MemoryEpConfig>;

/// Completion report for an asynchronous memory transfer. On an abort
/// (endpoint revoked mid-transfer) `ok` is false and `packets_done` counts
/// the packets that were injected before the revocation.
struct TransferOutcome {
  bool ok = true;
  std::uint32_t packets_done = 0;
  std::uint32_t packets_total = 0;
  SimTime completed_at = 0;
};

/// Snapshot of one send endpoint's credit accounting, for invariant checks:
/// credits + in_flight_msgs + queued_at_receiver + in_flight_replies +
/// blocked_sends-not-yet-charged stays glued to the initial slot count.
struct CreditAudit {
  TileId tile = 0;
  EpIndex ep = 0;
  std::uint32_t initial_credits = 0;
  std::uint32_t credits = 0;
  std::uint32_t blocked_sends = 0;      ///< queued at the sender, no credit yet
  std::uint32_t in_flight_msgs = 0;     ///< sent, not yet in the receive queue
  std::uint32_t queued_at_receiver = 0; ///< occupying a slot, not yet replied
  std::uint32_t in_flight_replies = 0;  ///< reply sent, credit still in flight
};

/// The simulated fabric: one transfer unit per tile, each with a fixed
/// array of configurable endpoints, driven by the shared event engine.
///
/// Ownership of *configuration* is the kernel's (Authority::Level::Kernel);
/// data-plane operations (send/reply/read/write) are available to the tiles
/// themselves and are validated against the configured endpoints, so a tile
/// without kernel-established endpoints cannot reach any other tile.
class Fabric {
 public:
  static constexpr EpIndex kEndpointsPerTile = 32;

  explicit Fabric(FabricConfig config, std::uint64_t run_seed = 0);

  Engine& engine() { return engine_; }
  const Engine& engine() const { return engine_; }
  const FabricConfig& config() const { return config_; }

  TileId tile_id(std::string_view tile) const;
  const TileSpec& tile(TileId id) const { return config_.tiles.at(id); }
  std::size_t tile_count() const { return config_.tiles.size(); }

  // -- control plane (kernel authority required) ---------------------------

  /// Install or replace an endpoint. Replacing an in-use endpoint discards
  /// its queued/pending state and leaves an `ep-reconfig` trace entry.
  void configure_endpoint(const Authority& auth, TileId tile, EpIndex ep,
                          const EndpointConfig& config);

  /// Return an endpoint to the unconfigured state (trace: `ep-clear`).
  /// In-flight messages towards a cleared receive endpoint are dropped
  /// without any event at the target tile.
  void clear_endpoint(const Authority& auth, TileId tile, EpIndex ep);

  bool endpoint_configured(TileId tile, EpIndex ep) const;
  std::optional<std::uint64_t> endpoint_cap(TileId tile, EpIndex ep) const;
  /// Target tile of a send/memory endpoint, if it has one.
  std::optional<TileId> endpoint_target(TileId tile, EpIndex ep) const;

  // -- data plane ----------------------------------------------------------

  using ReceiveHandler = std::function<void(const MessageView&)>;
  using ResponseHandler = std::function<void(const MessageView&)>;
  using TransferHandler = std::function<void(const TransferOutcome&)>;

  /// Invoked at message arrival time (the message is already queued in a
  /// slot). Protocol handling cost on the receiving core is the caller's
  /// business: schedule follow-up work at +handling_ns.
  void set_receive_handler(TileId tile, EpIndex ep, ReceiveHandler handler);

  /// Invoked at response arrival time at the original sender, after the
  /// piggybacked credit has been returned.
  void set_response_handler(TileId tile, EpIndex ep, ResponseHandler handler);

  /// Transmit a message through a send endpoint. Cost to delivery:
  /// handling(sender) + one_way + bridge + payload*per_byte. With no
  /// credits left the message queues at the sender and transmits as soon as
  /// a credit returns. Throws DtuError for unconfigured endpoints, dead
  /// targets, or payloads over the receiver's slot size.
  void send_message(TileId tile, EpIndex ep, std::uint64_t payload_bytes,
                    MsgKind kind);

  /// Consume a queued message: free its slot, return one credit to the
  /// originating send endpoint (piggybacked, so it lands at response
  /// delivery time) and deliver a response of `payload_bytes` with the
  /// send_message cost model. `msg_id` comes from the MessageView; replying
  /// twice throws InvalidHandle.
  void reply(TileId tile, EpIndex ep, std::uint64_t msg_id,
             std::uint64_t payload_bytes);

  /// Asynchronously push `size` bytes through a memory endpoint in packets
  /// of at most packet_bytes. Serialized-rtt pays a full round trip per
  /// packet; pipelined-oneway injects back to back and completes one
  /// one-way trip after the last byte. size 0 completes immediately with
  /// zero packets.
  void write_memory(TileId tile, EpIndex ep, std::uint64_t offset,
                    std::uint64_t size, TransferHandler on_done);

  /// Same timing as write_memory, opposite direction; requires read
  /// permission on the endpoint.
  void read_memory(TileId tile, EpIndex ep, std::uint64_t offset,
                   std::uint64_t size, TransferHandler on_done);

  // -- instrumentation -----------------------------------------------------

  /// Credit accounting for every configured send endpoint, for the
  /// conservation invariant.
  std::vector<CreditAudit> credit_audit() const;

  std::uint64_t dropped_messages() const { return dropped_messages_; }

 private:
  struct QueuedMessage {
    std::uint64_t msg_id = 0;
    TileId src_tile = 0;
    EpIndex src_ep = 0;
    std::uint64_t src_generation = 0;
    std::uint64_t payload_bytes = 0;
    MsgKind kind = MsgKind::Generic;
  };

  struct ReceiveEp {
    ReceiveEpConfig cfg;
    std::uint64_t next_msg_id = 1;
    std::deque<QueuedMessage> queue;
    std::vector<Engine::EventHandle> inbound;  ///< undelivered messages
    ReceiveHandler handler;
  };

  struct SendEp {
    SendEpConfig cfg;
    std::uint64_t target_generation = 0;  ///< receive EP generation at setup
    std::uint64_t target_slot_bytes = 0;
    std::uint32_t initial_credits = 0;
    std::uint32_t credits = 0;
    std::deque<std::pair<std::uint64_t, MsgKind>> blocked;  ///< payload, kind
    std::uint32_t in_flight_msgs = 0;
    std::uint32_t in_flight_replies = 0;
    std::uint32_t queued_at_receiver = 0;
    std::vector<Engine::EventHandle> inbound_replies;  ///< undelivered replies
    ResponseHandler response_handler;
  };

  struct MemoryEp {
    MemoryEpConfig cfg;
  };

  /// `generation` bumps on every configure/clear so stale references
  /// (in-flight traffic, revoked channels) can be told apart from a slot
  /// that was reused.
  struct Endpoint {
    std::variant<std::monostate, ReceiveEp, SendEp, MemoryEp> state;
    std::uint64_t generation = 0;
  };

  struct HopCost {
    Locality locality;
    SimTime one_way;
    SimTime bridge;
    double per_byte;
  };

  struct MemXfer;

  Endpoint& ep(TileId tile, EpIndex index);
  const Endpoint& ep(TileId tile, EpIndex index) const;
  HopCost hop_cost(TileId src, TileId dst) const;
  SimTime byte_ns(std::uint64_t bytes, const HopCost& hop) const;
  /// Apply the seeded jitter perturbation to one wire delay.
  SimTime perturb(SimTime wire_delay);
  void transmit(TileId tile, EpIndex index, SendEp& send,
                std::uint64_t payload_bytes, MsgKind kind);
  void run_memory_transfer(TileId tile, EpIndex index, std::uint64_t offset,
                           std::uint64_t size, bool is_write,
                           TransferHandler on_done);
  bool xfer_endpoint_alive(const MemXfer& xfer) const;
  void xfer_abort(const std::shared_ptr<MemXfer>& xfer);
  void serialized_inject(const std::shared_ptr<MemXfer>& xfer);

  FabricConfig config_;
  Engine engine_;
  std::vector<std::vector<Endpoint>> endpoints_;  // [tile][ep]
  std::mt19937_64 jitter_rng_;
  std::uint64_t dropped_messages_ = 0;
};

}  // namespace fabricflow
