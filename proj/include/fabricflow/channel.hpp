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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fabricflow/kernel.hpp"

namespace fabricflow {

enum class SenderPhase { Idle, Pushing, Notifying, AwaitResponse, Done };
enum class ReceiverPhase { Waiting, DataReady, Processing, Responded };

std::string_view to_string(SenderPhase phase);
std::string_view to_string(ReceiverPhase phase);

/// Timeline of one push through a data channel. Times are absolute virtual
/// ns; -1 means the phase was never reached. `notify_handled` is where the
/// receiver's protocol handling ends and its compute/forwarding begins —
/// the sender-to-receiver leg cost is notify_handled - push_start.
struct TransferRecord {
  std::string channel;
  std::uint64_t size = 0;
  SimTime push_start = -1;
  SimTime push_done = -1;
  SimTime notify_arrival = -1;
  SimTime notify_handled = -1;
  SimTime proc_done = -1;
  SimTime response_arrival = -1;
  bool ok = true;
  std::string error;
  std::uint32_t packets_done = 0;
  std::uint32_t packets_total = 0;

  SimTime leg_ns() const { return notify_handled - push_start; }
};

/// Both halves of the push protocol over one established channel:
///
///   sender:  write buffer -> send notify ------------> await response
///   receiver: ......... notify arrives -> handle -> compute -> on_data
///             ................................ then reply (response)
///
/// The response returns the credit and closes the sender's state machine
/// but is off the latency-critical path: downstream work hangs off
/// on_data, which fires at notify-handled + compute.
class DataChannel {
 public:
  DataChannel(Fabric& fabric, const ChannelHandle& handle, std::string name);

  DataChannel(const DataChannel&) = delete;
  DataChannel& operator=(const DataChannel&) = delete;

  /// Extra receiver-side delay between notify handling and on_data/reply
  /// (models the device's per-stage compute).
  void set_compute_delay(SimTime ns) { compute_delay_ = ns; }
  SimTime compute_delay() const { return compute_delay_; }

  /// Called at notify-handled + compute time on the receiver side; chains
  /// start the next stage's transfer from here.
  void set_on_data(std::function<void()> fn) { on_data_ = std::move(fn); }

  /// Begin a push of `size` bytes. The channel must be Idle (one transfer
  /// at a time per channel). Failures (revoked endpoints) surface in the
  /// returned record, not as delivered data.
  std::shared_ptr<TransferRecord> start_transfer(std::uint64_t size);

  /// Return both state machines to Idle/Waiting for the next repetition.
  /// The previous transfer must have fully finished (or failed).
  void reset();

  SenderPhase sender_phase() const { return sender_phase_; }
  ReceiverPhase receiver_phase() const { return receiver_phase_; }
  const ChannelHandle& handle() const { return handle_; }
  const std::string& name() const { return name_; }
  std::shared_ptr<TransferRecord> current_record() const { return record_; }
  Fabric& fabric() { return fabric_; }

 private:
  void fail(const std::string& why);

  Fabric& fabric_;
  ChannelHandle handle_;
  std::string name_;
  TileId sender_tile_;
  TileId receiver_tile_;
  SimTime handled_delay_;  ///< handling_ns of the receiver tile
  SimTime compute_delay_ = 0;
  std::function<void()> on_data_;
  SenderPhase sender_phase_ = SenderPhase::Idle;
  ReceiverPhase receiver_phase_ = ReceiverPhase::Waiting;
  std::shared_ptr<TransferRecord> record_;
};

/// Wire consecutive channels of `path` together (stage k's on_data starts
/// stage k+1) and push `size` bytes through, returning the time from the
/// first push start until the final channel's notify has been handled at
/// the terminal tile. Runs the engine to idle; an empty path costs 0 ns.
/// Records for each stage land in `records` if given.
SimTime run_chain(Fabric& fabric, const std::vector<DataChannel*>& path,
                  std::uint64_t size,
                  std::vector<std::shared_ptr<TransferRecord>>* records =
                      nullptr);

/// Non-blocking variant: starts the chain and invokes `on_complete` with
/// the absolute virtual time at which the final channel's notify has been
/// handled. The caller drives the engine.
void start_chain(const std::vector<DataChannel*>& path, std::uint64_t size,
                 std::function<void(SimTime)> on_complete);

}  // namespace fabricflow
