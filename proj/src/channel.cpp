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

#include "fabricflow/channel.hpp"

#include <cassert>
#include <stdexcept>

namespace fabricflow {

std::string_view to_string(SenderPhase phase) {
  switch (phase) {
    case SenderPhase::Idle: return "Idle";
    case SenderPhase::Pushing: return "Pushing";
    case SenderPhase::Notifying: return "Notifying";
    case SenderPhase::AwaitResponse: return "AwaitResponse";
    case SenderPhase::Done: return "Done";
  }
  return "?";
}

std::string_view to_string(ReceiverPhase phase) {
  switch (phase) {
    case ReceiverPhase::Waiting: return "Waiting";
    case ReceiverPhase::DataReady: return "DataReady";
    case ReceiverPhase::Processing: return "Processing";
    case ReceiverPhase::Responded: return "Responded";
  }
  return "?";
}

DataChannel::DataChannel(Fabric& fabric, const ChannelHandle& handle,
                         std::string name)
    : fabric_(fabric),
      handle_(handle),
      name_(std::move(name)),
      sender_tile_(fabric.tile_id(handle.sender_tile)),
      receiver_tile_(fabric.tile_id(handle.receiver_tile)),
      handled_delay_(fabric.config().handling_ns(
          fabric.config().tile(handle.receiver_tile))) {
  fabric_.set_receive_handler(
      receiver_tile_, handle_.recv_ep, [this](const MessageView& msg) {
        // Notify arrival: the data sits in the receiver's buffer, but the
        // receiving core still has to pick the message up (handling) and
        // run its per-stage compute before downstream work may begin.
        assert(record_ != nullptr);
        Engine& eng = fabric_.engine();
        record_->notify_arrival = eng.now();
        receiver_phase_ = ReceiverPhase::DataReady;
        eng.note(name_, "notify");
        const std::uint64_t msg_id = msg.msg_id;
        eng.schedule(handled_delay_ + compute_delay_, name_, "proc-done",
                     [this, msg_id]() {
                       record_->notify_handled =
                           record_->notify_arrival + handled_delay_;
                       record_->proc_done = fabric_.engine().now();
                       receiver_phase_ = ReceiverPhase::Processing;
                       if (on_data_) on_data_();
                       fabric_.reply(receiver_tile_, handle_.recv_ep, msg_id,
                                     fabric_.config().control_msg_bytes);
                       receiver_phase_ = ReceiverPhase::Responded;
                     });
      });

  fabric_.set_response_handler(
      sender_tile_, handle_.send_ep, [this](const MessageView&) {
        record_->response_arrival = fabric_.engine().now();
        sender_phase_ = SenderPhase::Done;
        fabric_.engine().note(name_, "resp");
      });
}

void DataChannel::fail(const std::string& why) {
  record_->ok = false;
  record_->error = why;
  sender_phase_ = SenderPhase::Done;
}

std::shared_ptr<TransferRecord> DataChannel::start_transfer(
    std::uint64_t size) {
  if (sender_phase_ != SenderPhase::Idle) {
    throw std::logic_error("channel " + name_ +
                           " already has a transfer in flight");
  }
  Engine& eng = fabric_.engine();
  record_ = std::make_shared<TransferRecord>();
  record_->channel = name_;
  record_->size = size;
  record_->push_start = eng.now();
  sender_phase_ = SenderPhase::Pushing;
  eng.note(name_, "push-start");

  auto record = record_;
  try {
    fabric_.write_memory(
        sender_tile_, handle_.memory_ep, 0, size,
        [this](const TransferOutcome& outcome) {
          record_->packets_done = outcome.packets_done;
          record_->packets_total = outcome.packets_total;
          if (!outcome.ok) {
            fail("AccessDenied");
            return;
          }
          record_->push_done = fabric_.engine().now();
          fabric_.engine().note(name_, "push-done");
          sender_phase_ = SenderPhase::Notifying;
          try {
            fabric_.send_message(sender_tile_, handle_.send_ep,
                                 fabric_.config().control_msg_bytes,
                                 MsgKind::Notify);
          } catch (const DtuError& e) {
            fail(e.what());
            return;
          }
          sender_phase_ = SenderPhase::AwaitResponse;
        });
  } catch (const DtuError& e) {
    fail(e.what());
  }
  return record;
}

void DataChannel::reset() {
  const bool sender_settled =
      sender_phase_ == SenderPhase::Done || sender_phase_ == SenderPhase::Idle;
  const bool receiver_settled = receiver_phase_ == ReceiverPhase::Responded ||
                                receiver_phase_ == ReceiverPhase::Waiting;
  if (!sender_settled || !receiver_settled) {
    throw std::logic_error(
        "cannot reset channel " + name_ + " mid-transfer (sender " +
        std::string(to_string(sender_phase_)) + ", receiver " +
        std::string(to_string(receiver_phase_)) + ")");
  }
  sender_phase_ = SenderPhase::Idle;
  receiver_phase_ = ReceiverPhase::Waiting;
  record_.reset();
}

namespace {

/// Stage k's on_data starts stage k+1; the terminal stage's on_data is left
/// for the caller to decide (completion hook or nothing).
void wire_forward(const std::vector<DataChannel*>& path, std::uint64_t size) {
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    DataChannel* next = path[k + 1];
    path[k]->set_on_data([next, size]() { next->start_transfer(size); });
  }
}

}  // namespace

void start_chain(const std::vector<DataChannel*>& path, std::uint64_t size,
                 std::function<void(SimTime)> on_complete) {
  if (path.empty()) {
    if (on_complete) on_complete(0);
    return;
  }
  wire_forward(path, size);
  DataChannel* last = path.back();
  last->set_on_data([last, on_complete = std::move(on_complete)]() {
    if (on_complete) on_complete(last->current_record()->notify_handled);
  });
  path.front()->start_transfer(size);
}

SimTime run_chain(Fabric& fabric, const std::vector<DataChannel*>& path,
                  std::uint64_t size,
                  std::vector<std::shared_ptr<TransferRecord>>* records) {
  if (path.empty()) return 0;
  wire_forward(path, size);
  path.back()->set_on_data(nullptr);

  const SimTime start = fabric.engine().now();
  path.front()->start_transfer(size);
  fabric.engine().run_until_idle();

  for (DataChannel* ch : path) {
    auto rec = ch->current_record();
    if (rec == nullptr || !rec->ok) {
      throw DtuError(DtuErrorCode::AccessDenied,
                     "chain stage " + ch->name() + " failed" +
                         (rec ? (": " + rec->error) : ""));
    }
    if (records != nullptr) records->push_back(rec);
  }
  const SimTime end = path.back()->current_record()->notify_handled;
  if (end < start) throw SimError("chain never completed");
  return end - start;
}

}  // namespace fabricflow
