// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>
#include <cstring>

#include "harness.hpp"
#include "support.hpp"

namespace lcomm
{
namespace
{
using namespace lcomm::testing;

errorcode_t code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const fatal_error& e) {
    return e.code();
  }
  return errorcode_t::ok;
}

void drain_all()
{
  while (progress_all()) {
  }
}

class Ops : public ::testing::Test
{
 protected:
  void SetUp() override
  {
    rt = runtime_init_x().nranks(2)();
    d0 = rt.get_default_device(0);
    d1 = rt.get_default_device(1);
  }
  void TearDown() override
  {
    if (!get_runtime().is_empty()) runtime_finalize_x().force(true)();
  }
  runtime_t rt;
  device_t d0, d1;
};

TEST_F(Ops, EagerSendIsDoneAndDoesNotSignal)
{
  auto cq = alloc_cq();
  uint64_t v = 42, in = 0;
  auto r = post_send_x(1, &v, sizeof v, 3).comp(cq).user_context(&v)();
  ASSERT_TRUE(r.is_done());
  EXPECT_EQ(r.status.op, op_kind_t::send);
  EXPECT_EQ(r.status.user_context, &v);
  EXPECT_EQ(r.status.error, errorcode_t::ok);
  // The message waits at the target as unexpected; a later recv is done.
  drain_all();
  auto rr = post_recv_x(0, &in, sizeof in, 3).device(d1).comp(cq)();
  ASSERT_TRUE(rr.is_done());
  EXPECT_EQ(in, 42u);
  EXPECT_EQ(rr.status.rank, 0u);
  EXPECT_EQ(rr.status.tag, 3u);
  drain_all();
  EXPECT_FALSE(cq_pop(cq));
}

TEST_F(Ops, PostedRecvSignalsOnce)
{
  auto cq = alloc_cq();
  uint64_t v = 7, in = 0;
  auto rr = post_recv_x(0, &in, sizeof in, 5).device(d1).comp(cq)();
  ASSERT_TRUE(rr.is_posted());
  EXPECT_EQ(get_census().pending_ops, 1u);
  post_send_x(1, &v, sizeof v, 5)();
  drain_all();
  auto st = cq_pop(cq);
  ASSERT_TRUE(st);
  EXPECT_EQ(st->op, op_kind_t::recv);
  EXPECT_EQ(in, 7u);
  EXPECT_FALSE(cq_pop(cq));
  EXPECT_EQ(get_census().pending_ops, 0u);
}

TEST_F(Ops, WideTagsAndLargeRcompsTakeThePayloadPath)
{
  // Immediate-path and header-path metadata deliver identical records.
  auto cq = alloc_cq();
  auto target = alloc_cq();
  rcomp_t narrow = register_rcomp(target);
  rcomp_t wide = register_rcomp_x(target).path(rcomp_path_t::payload)();
  for (tag_t tag : {tag_t{0x1234}, tag_t{0x123456789ABCull}}) {
    uint64_t v = tag, in = 0;
    post_send_x(1, &v, sizeof v, tag)();
    auto st = run_op(post_recv_x(0, &in, sizeof in, tag).device(d1), d1);
    EXPECT_EQ(st.tag, tag);
    EXPECT_EQ(in, tag);
  }
  for (rcomp_t rc : {narrow, wide}) {
    for (tag_t tag : {tag_t{9}, tag_t{1} << 40}) {
      uint64_t v = rc;
      auto r = post_am_x(1, &v, sizeof v, rc).tag(tag).comp(cq)();
      ASSERT_FALSE(r.is_retry());
      drain_all();
      auto st = cq_pop(target);
      ASSERT_TRUE(st);
      EXPECT_EQ(st->op, op_kind_t::am_recv);
      EXPECT_EQ(st->rcomp, rc);
      EXPECT_EQ(st->tag, tag);
      EXPECT_EQ(st->rank, 0u);
      ASSERT_EQ(st->buffer.length, sizeof v);
      uint64_t got;
      std::memcpy(&got, st->buffer.base, sizeof got);
      EXPECT_EQ(got, rc);
    }
  }
}

TEST_F(Ops, RendezvousBothDirections)
{
  for (size_t n : {size_t{9000}, size_t{100000}, size_t{1} << 20}) {
    auto out = make_pattern(n, n);
    std::vector<std::byte> in(n);
    auto rs = alloc_sync(1);
    auto rr = post_recv_x(0, in.data(), n, 11).device(d1).comp(rs)();
    auto ss = alloc_sync(1);
    auto sr = post_send_x(1, out.data(), n, 11).comp(ss)();
    ASSERT_TRUE(sr.is_posted());
    spin_until([&] { return sync_test(rs) && sync_test(ss); },
               [] { return progress_all(); });
    EXPECT_TRUE(check_pattern(in.data(), n, n));
    EXPECT_TRUE(rr.is_posted());
    free_comp(rs);
    free_comp(ss);
  }
}

TEST_F(Ops, TruncationIsFatal)
{
  uint64_t v[4] = {1, 2, 3, 4};
  uint64_t in = 0;
  post_send_x(1, v, sizeof v, 2)();
  drain_all();
  EXPECT_EQ(code_of([&] { post_recv_x(0, &in, sizeof in, 2).device(d1)(); }),
            errorcode_t::fatal_truncate);
}

TEST_F(Ops, RemoteAccessChecks)
{
  std::vector<std::byte> region(128);
  auto mr = register_memory_x(region.data(), region.size()).device(d1)();
  std::vector<std::byte> buf(64);
  EXPECT_EQ(code_of([&] {
              run_op(post_put_x(1, buf.data(), 64, mr.get_rkey() + 100, 0));
            }),
            errorcode_t::fatal_bad_rkey);
  runtime_finalize_x().force(true)();
  SetUp();
  std::vector<std::byte> region2(128);
  auto mr2 = register_memory_x(region2.data(), region2.size()).device(d1)();
  EXPECT_EQ(code_of([&] {
              run_op(post_put_x(1, buf.data(), 64, mr2.get_rkey(), 65));
            }),
            errorcode_t::fatal_oob);
  runtime_finalize_x().force(true)();
  SetUp();
  std::vector<std::byte> region3(128);
  auto mr3 = register_memory_x(region3.data(), region3.size()).device(d1)();
  EXPECT_EQ(code_of([&] {
              run_op(post_get_x(1, buf.data(), 64, mr3.get_rkey(), 100));
            }),
            errorcode_t::fatal_oob);
}

TEST_F(Ops, PutGetRoundTrip)
{
  for (size_t n : {size_t{0}, size_t{1}, size_t{100}, size_t{50000}}) {
    std::vector<std::byte> region(n + 32);
    auto mr = register_memory_x(region.data(), region.size()).device(d1)();
    auto out = make_pattern(n + 1, n);
    auto st = run_op(post_put_x(1, out.data(), n, mr.get_rkey(), 16));
    EXPECT_EQ(st.op, op_kind_t::put);
    drain_all();
    EXPECT_TRUE(check_pattern(region.data() + 16, n + 1, n));
    std::vector<std::byte> back(n);
    auto gs = run_op(post_get_x(1, back.data(), n, mr.get_rkey(), 16));
    drain_all();
    EXPECT_EQ(gs.op, op_kind_t::get);
    EXPECT_EQ(gs.buffer.length, n);
    EXPECT_TRUE(check_pattern(back.data(), n + 1, n));
    deregister_memory(mr);
  }
}

TEST_F(Ops, PutSignalsTargetAfterData)
{
  auto target = alloc_cq();
  rcomp_t rc = register_rcomp(target);
  size_t n = 30000;  // several chunks
  std::vector<std::byte> region(n);
  auto mr = register_memory_x(region.data(), n).device(d1)();
  auto out = make_pattern(5, n);
  run_op(post_put_x(1, out.data(), n, mr.get_rkey(), 0).remote_comp(rc).tag(3));
  drain_all();
  auto st = cq_pop(target);
  ASSERT_TRUE(st);
  EXPECT_EQ(st->op, op_kind_t::put_signal);
  EXPECT_EQ(st->tag, 3u);
  EXPECT_EQ(st->rcomp, rc);
  EXPECT_TRUE(check_pattern(region.data(), 5, n));
  EXPECT_FALSE(cq_pop(target));
}

TEST_F(Ops, WildcardsNeedAQueueEngine)
{
  uint64_t in;
  EXPECT_EQ(code_of([&] { post_recv_x(ANY_RANK, &in, 8, 1).device(d1)(); }),
            errorcode_t::fatal_bad_arg);
  EXPECT_EQ(code_of([&] { post_recv_x(0, &in, 8, ANY_TAG).device(d1)(); }),
            errorcode_t::fatal_bad_arg);
  uint64_t v = 1;
  EXPECT_EQ(code_of([&] { post_send_x(1, &v, 8, ANY_TAG)(); }),
            errorcode_t::fatal_bad_arg);
  auto q = alloc_matching_engine_x().kind(matching_engine_kind_t::queue)();
  post_send_x(1, &v, 8, 77).matching_engine(q)();
  drain_all();
  auto r = post_recv_x(ANY_RANK, &in, 8, ANY_TAG).device(d1).matching_engine(q)();
  ASSERT_TRUE(r.is_done());
  EXPECT_EQ(r.status.tag, 77u);
  EXPECT_EQ(r.status.rank, 0u);
}

TEST_F(Ops, BadArgumentsAreFatal)
{
  uint64_t v = 0;
  EXPECT_EQ(code_of([&] { post_send_x(2, &v, 8, 1)(); }),
            errorcode_t::fatal_bad_arg);
  EXPECT_EQ(code_of([&] { post_am_x(1, &v, 8, RCOMP_NULL)(); }),
            errorcode_t::fatal_bad_arg);
  EXPECT_EQ(code_of([&] { post_send_x(1, nullptr, 8, 1)(); }),
            errorcode_t::fatal_bad_arg);
  EXPECT_EQ(code_of([&] { post_am_x(1, &v, 8, 999)(); drain_all(); }),
            errorcode_t::fatal_bad_rcomp);
}

// A receive posted through one device completes when another device of the
// same rank, sharing the engine, takes the message.
TEST_F(Ops, CrossDeviceMatching)
{
  auto e1 = alloc_device_x().rank(1)();
  auto e0 = alloc_device();  // pairs with e1 (second device of each rank)
  uint64_t v = 99, in = 0;
  auto rs = alloc_sync(1);
  auto r = post_recv_x(0, &in, sizeof in, 4).device(d1).comp(rs)();
  ASSERT_TRUE(r.is_posted());
  ASSERT_TRUE(post_send_x(1, &v, sizeof v, 4).device(e0)().is_done());
  spin_until([&] { return sync_test(rs); }, [&] {
    return progress(e1) || progress(e0);
  });
  EXPECT_EQ(in, 99u);
  EXPECT_EQ(sync_wait(rs).at(0).rank, 0u);
  free_device(e0);
  free_device(e1);
}

TEST_F(Ops, HandlerRunsOnDeliveringThread)
{
  std::thread::id where;
  int calls = 0;
  auto h = alloc_handler([&](const status_t&) {
    where = std::this_thread::get_id();
    ++calls;
  });
  uint64_t v = 1, in = 0;
  post_recv_x(0, &in, 8, 6).device(d1).comp(h)();
  post_send_x(1, &v, 8, 6)();
  drain_all();
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(where, std::this_thread::get_id());
}

TEST_F(Ops, UserDefinedCompletion)
{
  struct counter_t : comp_impl_t {
    std::atomic<int> n{0};
    void signal(status_t) override { ++n; }
  };
  auto owned = std::make_unique<counter_t>();
  auto* raw = owned.get();
  auto c = alloc_user_comp(std::move(owned));
  EXPECT_EQ(c.kind(), comp_kind_t::user);
  uint64_t v = 1, in = 0;
  post_recv_x(0, &in, 8, 8).device(d1).comp(c)();
  post_send_x(1, &v, 8, 8)();
  drain_all();
  EXPECT_EQ(raw->n.load(), 1);
}

TEST(OpsHarness, DescriptorPermutations)
{
  for (const auto& op : descriptor_ops()) {
    auto rep = check_descriptor_permutations(op, 10);
    EXPECT_GE(rep.permutations, 24u) << op;
    EXPECT_EQ(rep.distinct_outcomes, 1u) << op << ": " << rep.outcome;
    EXPECT_EQ(rep.reuse_completions, 10u) << op;
    EXPECT_EQ(rep.stray_completions, 0u) << op;
  }
}

TEST(OpsHarness, Backpressure)
{
  auto rep = run_backpressure(4, 64);
  EXPECT_GT(rep.retries_in_burst, 0u);
  EXPECT_EQ(rep.delivered, 64u);
  EXPECT_EQ(rep.send_completions, 64u);
  EXPECT_EQ(rep.duplicates, 0u);
  EXPECT_EQ(rep.corrupted, 0u);
  EXPECT_LT(rep.slowest_post_seconds, 0.5);
}

TEST(OpsHarness, ExactlyOnceSmall)
{
  for (uint64_t seed : {1, 2}) {
    auto rep = run_exactly_once(seed, 4, 2000);
    EXPECT_GT(rep.posts, 0u);
    EXPECT_EQ(rep.duplicates, 0u);
    EXPECT_EQ(rep.losses, 0u);
    EXPECT_EQ(rep.corrupted, 0u);
    EXPECT_TRUE(rep.clean_finalize);
  }
}

TEST(OpsHarness, SynchronizerThresholds)
{
  for (size_t k : {1, 2, 16, 1024}) {
    auto rep = run_sync_semantics(k, 8, 10);
    EXPECT_EQ(rep.epochs, 10u);
    EXPECT_EQ(rep.early_ready, 0u) << k;
    EXPECT_EQ(rep.late_ready, 0u) << k;
    EXPECT_EQ(rep.bad_records, 0u) << k;
  }
}

TEST(OpsHarness, InOrderWithPolicyNone)
{
  auto rep = run_in_order(2000);
  EXPECT_EQ(rep.completed, 2000u);
  EXPECT_EQ(rep.out_of_order, 0u);
}

TEST(Tcp, AbsentPeerTimesOut)
{
  auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([] {
              runtime_init_x()
                  .transport("tcp")
                  .rank(0)
                  .nranks(2)
                  .tcp_port_base(pick_port_base())
                  .connect_timeout_ms(300)();
            }),
            errorcode_t::fatal_transport);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(10));
  EXPECT_TRUE(get_runtime().is_empty());
}

}  // namespace
}  // namespace lcomm
