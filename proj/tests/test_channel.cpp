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

#include <memory>
#include <string>
#include <vector>

#include "fabricflow/channel.hpp"
#include "fabricflow/kernel.hpp"

using namespace fabricflow;

namespace {

struct Rig {
  Fabric fabric;
  Kernel kernel;
  std::vector<std::unique_ptr<DataChannel>> channels;

  explicit Rig(FabricConfig cfg = wire_only_config())
      : fabric(std::move(cfg)), kernel(fabric) {}

  std::uint64_t activity(const std::string& tile) {
    try {
      return kernel.create_activity(tile, "test").id;
    } catch (const KernelError&) {
      // Already created in an earlier call.
      for (std::uint64_t id = 1;; ++id) {
        const Activity& a = kernel.activity(id);
        if (a.live && a.tile == tile) return id;
      }
    }
  }

  DataChannel* channel(const std::string& from, const std::string& to,
                       std::uint64_t buffer = 1 << 20) {
    const ChannelHandle h = kernel.establish_channel(
        activity(from), activity(to), 1,
        fabric.config().control_msg_bytes, buffer);
    channels.push_back(
        std::make_unique<DataChannel>(fabric, h, from + "->" + to));
    return channels.back().get();
  }
};

}  // namespace

TEST_CASE("one cross-machine push of 4 KiB costs 1500 ns wire-only") {
  Rig rig;
  DataChannel* ch = rig.channel("app", "d0");

  auto rec = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();

  CHECK(rec->ok);
  CHECK(rec->push_start == 0);
  CHECK(rec->push_done == 1000);       // one serialized packet round trip
  CHECK(rec->notify_arrival == 1500);  // + one-way notify
  CHECK(rec->notify_handled == 1500);  // zero handling cycles
  CHECK(rec->proc_done == 1500);
  CHECK(rec->response_arrival == 2000);  // response off the critical path
  CHECK(rec->leg_ns() == 1500);
  CHECK(rec->packets_total == 1);
  CHECK(ch->sender_phase() == SenderPhase::Done);
  CHECK(ch->receiver_phase() == ReceiverPhase::Responded);
}

TEST_CASE("one local push of 4 KiB costs 750 ns wire-only") {
  Rig rig;
  DataChannel* ch = rig.channel("d0", "d1");
  auto rec = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();
  CHECK(rec->leg_ns() == 750);  // 500 packet RTT + 250 notify
}

TEST_CASE("one cross-machine push of 4 KiB costs 3750 ns calibrated") {
  Rig rig(calibrated_config());
  DataChannel* ch = rig.channel("app", "d0");
  auto rec = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();
  // Packet: 1000 RTT + 2*750 bridge; notify: 500 + 750.
  CHECK(rec->push_done == 2500);
  CHECK(rec->leg_ns() == 3750);
}

TEST_CASE("compute delay postpones on_data and the reply, not the leg") {
  Rig rig;
  DataChannel* ch = rig.channel("app", "d0");
  ch->set_compute_delay(100);

  SimTime on_data_at = -1;
  ch->set_on_data([&] { on_data_at = rig.fabric.engine().now(); });
  auto rec = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();

  CHECK(rec->notify_handled == 1500);
  CHECK(rec->leg_ns() == 1500);
  CHECK(on_data_at == 1600);
  CHECK(rec->proc_done == 1600);
  CHECK(rec->response_arrival == 2100);
}

TEST_CASE("handling cycles add the receiver pickup to the leg") {
  FabricConfig cfg = wire_only_config();
  cfg.handling_cycles = 400;  // 100 ns on the 4 GHz app, 400 ns on devices
  Rig rig(cfg);
  DataChannel* ch = rig.channel("app", "d0");
  auto rec = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();
  // Sender handling delays the notify by 100; receiver pickup adds 400.
  CHECK(rec->notify_arrival == 1600);
  CHECK(rec->notify_handled == 2000);
  CHECK(rec->leg_ns() == 2000);
}

TEST_CASE("zero-byte pushes only pay the notification trip") {
  Rig rig;
  DataChannel* ch = rig.channel("app", "d0");
  auto rec = ch->start_transfer(0);
  rig.fabric.engine().run_until_idle();
  CHECK(rec->ok);
  CHECK(rec->packets_total == 0);
  CHECK(rec->push_done == 0);
  CHECK(rec->leg_ns() == 500);
}

TEST_CASE("a channel carries one transfer at a time, reset rearms it") {
  Rig rig;
  DataChannel* ch = rig.channel("app", "d0");

  auto rec1 = ch->start_transfer(4096);
  CHECK_THROWS_AS(ch->start_transfer(4096), std::logic_error);
  CHECK_THROWS_AS(ch->reset(), std::logic_error);  // still in flight
  rig.fabric.engine().run_until_idle();

  ch->reset();
  CHECK(ch->sender_phase() == SenderPhase::Idle);
  CHECK(ch->receiver_phase() == ReceiverPhase::Waiting);

  auto rec2 = ch->start_transfer(4096);
  rig.fabric.engine().run_until_idle();
  CHECK(rec2->ok);
  CHECK(rec2->leg_ns() == rec1->leg_ns());
  CHECK(rec2->push_start == 2000);  // virtual time keeps running
}

TEST_CASE("run_chain sums the stage legs and per-stage computes") {
  SUBCASE("distributed two-device walk, wire-only: 3750 ns") {
    Rig rig;
    std::vector<DataChannel*> path{rig.channel("app", "d0"),
                                   rig.channel("d0", "d1"),
                                   rig.channel("d1", "app")};
    std::vector<std::shared_ptr<TransferRecord>> records;
    const SimTime total = run_chain(rig.fabric, path, 4096, &records);
    CHECK(total == 3750);  // 1500 + 750 + 1500
    REQUIRE(records.size() == 3);
    CHECK(records[0]->leg_ns() == 1500);
    CHECK(records[1]->leg_ns() == 750);
    CHECK(records[2]->leg_ns() == 1500);
    // Stage k+1 starts exactly when stage k's data is ready.
    CHECK(records[1]->push_start == records[0]->notify_handled);
    CHECK(records[2]->push_start == records[1]->notify_handled);
  }
  SUBCASE("device computes stretch the chain but not the legs") {
    Rig rig;
    std::vector<DataChannel*> path{rig.channel("app", "d0"),
                                   rig.channel("d0", "d1"),
                                   rig.channel("d1", "app")};
    path[0]->set_compute_delay(100);
    path[1]->set_compute_delay(100);
    const SimTime total = run_chain(rig.fabric, path, 4096);
    CHECK(total == 3950);  // 1500 + 100 + 750 + 100 + 1500
  }
  SUBCASE("empty path costs nothing") {
    Rig rig;
    CHECK(run_chain(rig.fabric, {}, 4096) == 0);
  }
}

TEST_CASE("start_chain reports the absolute completion time") {
  Rig rig;
  std::vector<DataChannel*> path{rig.channel("app", "d0"),
                                 rig.channel("d0", "app")};
  // Consume some virtual time first.
  rig.fabric.engine().schedule(100, "test", "tick", [] {});
  rig.fabric.engine().run_until_idle();

  SimTime end = -1;
  start_chain(path, 4096, [&](SimTime t) { end = t; });
  rig.fabric.engine().run_until_idle();
  CHECK(end == 100 + 1500 + 1500);
}

TEST_CASE("a revoked sender capability fails the transfer, not the process") {
  Rig rig;
  DataChannel* ch = rig.channel("app", "d0");
  const std::uint64_t cap = ch->handle().sender_cap;

  SUBCASE("revoked before the push starts") {
    rig.kernel.revoke(cap);
    auto rec = ch->start_transfer(4096);
    rig.fabric.engine().run_until_idle();
    CHECK_FALSE(rec->ok);
    CHECK(rec->error == "AccessDenied: memory endpoint not configured");
    CHECK(ch->sender_phase() == SenderPhase::Done);
  }
  SUBCASE("revoked mid-push aborts with partial packets") {
    auto rec = ch->start_transfer(16384);  // 4 packets, acks at 1000..4000
    rig.fabric.engine().schedule(1500, "test", "revoke-now",
                                 [&] { rig.kernel.revoke(cap); });
    rig.fabric.engine().run_until_idle();
    CHECK_FALSE(rec->ok);
    CHECK(rec->error == "AccessDenied");
    CHECK(rec->packets_done == 2);
    CHECK(rec->packets_total == 4);
    CHECK(rec->notify_arrival == -1);  // the receiver never heard a thing
  }
}

TEST_CASE("run_chain surfaces a failed stage as an access error") {
  Rig rig;
  std::vector<DataChannel*> path{rig.channel("app", "d0"),
                                 rig.channel("d0", "d1")};
  rig.kernel.revoke(path[1]->handle().sender_cap);
  CHECK_THROWS_WITH_AS(run_chain(rig.fabric, path, 4096),
                       doctest::Contains("d0->d1"), DtuError);
}

TEST_CASE("chain legs are observable in the trace") {
  Rig rig;
  std::vector<DataChannel*> path{rig.channel("app", "d0"),
                                 rig.channel("d0", "app")};
  run_chain(rig.fabric, path, 4096);
  const std::string trace = rig.fabric.engine().export_trace();
  CHECK(trace.find("app->d0 push-start") != std::string::npos);
  CHECK(trace.find("app->d0 notify") != std::string::npos);
  CHECK(trace.find("app->d0 proc-done") != std::string::npos);
  CHECK(trace.find("d0->app push-start") != std::string::npos);
  CHECK(trace.find("app->d0 resp") != std::string::npos);
}
