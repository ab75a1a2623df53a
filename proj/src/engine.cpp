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

#include "fabricflow/engine.hpp"

#include <sstream>

namespace fabricflow {

Engine::EventHandle Engine::schedule(SimTime delay, std::string actor,
                                     std::string label, Action action) {
  if (delay < 0) {
    throw SimError("cannot schedule an event with negative delay " +
                   std::to_string(delay));
  }
  const Key key{now_ + delay, next_seq_++};
  queue_.emplace(key, Pending{std::move(actor), std::move(label),
                              std::move(action)});
  ++scheduled_;
  return EventHandle{key.first, key.second};
}

bool Engine::cancel(const EventHandle& handle) {
  const auto it = queue_.find(Key{handle.fire_at, handle.seq});
  if (it == queue_.end()) return false;
  queue_.erase(it);
  ++cancelled_;
  return true;
}

bool Engine::step() {
  if (queue_.empty()) return false;
  auto it = queue_.begin();
  const SimTime fire_at = it->first.first;
  // Keys are ordered, so time can only move forward.
  now_ = fire_at;
  Pending pending = std::move(it->second);
  queue_.erase(it);
  ++processed_;
  if (processed_ > event_limit_) {
    throw SimError("event limit of " + std::to_string(event_limit_) +
                   " exceeded; the protocol appears to be livelocked");
  }
  trace_.push_back({fire_at, pending.actor, pending.label});
  pending.action();
  return true;
}

SimTime Engine::run_until_idle() {
  while (step()) {
  }
  return now_;
}

void Engine::note(std::string actor, std::string label) {
  trace_.push_back({now_, std::move(actor), std::move(label)});
}

std::string Engine::export_trace() const {
  std::ostringstream out;
  for (const TraceEntry& e : trace_) {
    out << e.time << ' ' << e.actor << ' ' << e.label << '\n';
  }
  return out.str();
}

}  // namespace fabricflow
