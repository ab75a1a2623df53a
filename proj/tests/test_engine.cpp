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

#include <string>
#include <vector>

#include "fabricflow/engine.hpp"

using namespace fabricflow;

TEST_CASE("events fire in time order regardless of scheduling order") {
  Engine eng;
  std::vector<int> order;
  eng.schedule(30, "a", "third", [&] { order.push_back(3); });
  eng.schedule(10, "a", "first", [&] { order.push_back(1); });
  eng.schedule(20, "a", "second", [&] { order.push_back(2); });
  CHECK(eng.run_until_idle() == 30);
  CHECK(order == std::vector<int>{1, 2, 3});
  CHECK(eng.now() == 30);
}

TEST_CASE("same-instant events fire in scheduling order") {
  Engine eng;
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) {
    eng.schedule(7, "a", "tie", [&order, i] { order.push_back(i); });
  }
  eng.run_until_idle();
  CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("zero delay fires at the current instant, after queued peers") {
  Engine eng;
  std::vector<std::string> order;
  eng.schedule(5, "a", "outer", [&] {
    order.push_back("outer");
    eng.schedule(0, "a", "inner", [&] {
      order.push_back("inner");
      CHECK(eng.now() == 5);
    });
  });
  eng.schedule(5, "a", "peer", [&] { order.push_back("peer"); });
  eng.run_until_idle();
  CHECK(order == std::vector<std::string>{"outer", "peer", "inner"});
}

TEST_CASE("negative delay is refused") {
  Engine eng;
  CHECK_THROWS_AS(eng.schedule(-1, "a", "bad", [] {}), SimError);
}

TEST_CASE("cancel removes a pending event and suppresses its trace entry") {
  Engine eng;
  bool fired = false;
  auto h = eng.schedule(10, "a", "doomed", [&] { fired = true; });
  CHECK(eng.cancel(h));
  CHECK_FALSE(eng.cancel(h));  // second cancel is a no-op
  eng.run_until_idle();
  CHECK_FALSE(fired);
  CHECK(eng.trace().empty());
  CHECK(eng.cancelled_count() == 1);
  CHECK(eng.processed_count() == 0);
}

TEST_CASE("cancel after firing returns false") {
  Engine eng;
  auto h = eng.schedule(1, "a", "x", [] {});
  eng.run_until_idle();
  CHECK_FALSE(eng.cancel(h));
}

TEST_CASE("step fires exactly one event") {
  Engine eng;
  int fired = 0;
  eng.schedule(1, "a", "x", [&] { ++fired; });
  eng.schedule(2, "a", "y", [&] { ++fired; });
  CHECK(eng.step());
  CHECK(fired == 1);
  CHECK(eng.now() == 1);
  CHECK(eng.step());
  CHECK_FALSE(eng.step());  // idle
  CHECK(fired == 2);
}

TEST_CASE("time never moves backwards") {
  Engine eng;
  SimTime last = 0;
  for (int i = 0; i < 100; ++i) {
    eng.schedule((i * 37) % 50, "a", "x", [&] {
      CHECK(eng.now() >= last);
      last = eng.now();
    });
  }
  eng.run_until_idle();
}

TEST_CASE("trace records every fired event plus explicit notes") {
  Engine eng;
  eng.schedule(4, "tile0", "ping", [&] { eng.note("tile0", "mark"); });
  eng.schedule(9, "tile1", "pong", [] {});
  eng.run_until_idle();

  const std::vector<TraceEntry> expect{
      {4, "tile0", "ping"}, {4, "tile0", "mark"}, {9, "tile1", "pong"}};
  CHECK(eng.trace() == expect);
  CHECK(eng.export_trace() == "4 tile0 ping\n4 tile0 mark\n9 tile1 pong\n");

  eng.clear_trace();
  CHECK(eng.trace().empty());
}

TEST_CASE("event limit stops runaway simulations") {
  Engine eng;
  eng.set_event_limit(100);
  std::function<void()> respawn = [&] {
    eng.schedule(1, "a", "loop", respawn);
  };
  eng.schedule(1, "a", "loop", respawn);
  CHECK_THROWS_AS(eng.run_until_idle(), SimError);
}

TEST_CASE("default event limit is ten million") {
  CHECK(Engine::kDefaultEventLimit == 10'000'000);
}

TEST_CASE("counters track scheduled/processed/cancelled/pending") {
  Engine eng;
  auto h1 = eng.schedule(1, "a", "x", [] {});
  eng.schedule(2, "a", "y", [] {});
  CHECK(eng.scheduled_count() == 2);
  CHECK(eng.pending_count() == 2);
  eng.cancel(h1);
  CHECK(eng.pending_count() == 1);
  eng.run_until_idle();
  CHECK(eng.processed_count() == 1);
  CHECK(eng.cancelled_count() == 1);
  CHECK(eng.pending_count() == 0);
}
