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
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fabricflow/config.hpp"

namespace fabricflow {

/// Thrown for engine misuse (negative delay) and for runaway simulations
/// that exceed the event-count safety limit.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

/// One line of the simulation trace. Every processed event contributes an
/// entry; modules can add extra entries at the current time via
/// Engine::note().
struct TraceEntry {
  SimTime time = 0;
  std::string actor;
  std::string label;

  bool operator==(const TraceEntry&) const = default;
};

/// Deterministic single-threaded discrete-event engine.
///
/// Events fire in (fire_at, seq) order where seq is the global insertion
/// counter, so two events scheduled for the same instant fire in the order
/// they were scheduled. Virtual time only moves when an event fires; the
/// clock is monotone non-decreasing by construction.
class Engine {
 public:
  using Action = std::function<void()>;

  /// Identifies a pending event for cancellation.
  struct EventHandle {
    SimTime fire_at = -1;
    std::uint64_t seq = 0;
  };

  static constexpr std::uint64_t kDefaultEventLimit = 10'000'000;

  SimTime now() const { return now_; }

  /// Schedule `action` to fire `delay` ns from now. Zero delay fires at the
  /// current time, after already-queued events for the same instant.
  /// Negative delays throw SimError.
  EventHandle schedule(SimTime delay, std::string actor, std::string label,
                       Action action);

  /// Remove a pending event. Returns false if it already fired or was
  /// already cancelled. Cancelled events leave no trace entry.
  bool cancel(const EventHandle& handle);

  /// Fire the single earliest pending event. Returns false when idle.
  bool step();

  /// Fire events until the queue drains; returns the final virtual time.
  /// Throws SimError once more than the event limit have been processed
  /// (a livelocked protocol would otherwise spin forever).
  SimTime run_until_idle();

  /// Append a trace entry at the current time without scheduling anything.
  void note(std::string actor, std::string label);

  const std::vector<TraceEntry>& trace() const { return trace_; }

  /// Render the trace as "<time_ns> <actor> <label>" lines.
  std::string export_trace() const;

  void clear_trace() { trace_.clear(); }

  std::uint64_t scheduled_count() const { return scheduled_; }
  std::uint64_t processed_count() const { return processed_; }
  std::uint64_t cancelled_count() const { return cancelled_; }
  std::size_t pending_count() const { return queue_.size(); }

  void set_event_limit(std::uint64_t limit) { event_limit_ = limit; }

 private:
  struct Pending {
    std::string actor;
    std::string label;
    Action action;
  };

  using Key = std::pair<SimTime, std::uint64_t>;

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t scheduled_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t cancelled_ = 0;
  std::uint64_t event_limit_ = kDefaultEventLimit;
  std::map<Key, Pending> queue_;
  std::vector<TraceEntry> trace_;
};

}  // namespace fabricflow
