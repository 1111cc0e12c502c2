// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <set>
#include <thread>
#include <vector>

#include "lcomm/mpmc_queue.hpp"
#include "lcomm/packet_pool.hpp"

namespace lcomm
{
namespace
{
errorcode_t code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const fatal_error& e) {
    return e.code();
  }
  return errorcode_t::ok;
}

TEST(PacketPool, ExhaustsThenRecovers)
{
  packet_pool_impl_t pool(4, 256);
  std::vector<packet_t> held;
  for (int i = 0; i < 4; ++i) {
    auto p = pool.alloc();
    ASSERT_TRUE(p);
    held.push_back(p);
  }
  EXPECT_FALSE(pool.alloc());
  EXPECT_EQ(pool.in_use(), 4u);
  pool.free(held.back());
  held.pop_back();
  EXPECT_TRUE(pool.alloc());
}

TEST(PacketPool, PacketsAreDistinctAlignedAndInsideTheSlab)
{
  packet_pool_impl_t pool(16, 192);
  std::set<std::byte*> seen;
  for (int i = 0; i < 16; ++i) {
    auto p = pool.alloc();
    ASSERT_TRUE(seen.insert(p.data).second);
    EXPECT_TRUE(pool.region().contains(p.data, 192));
    EXPECT_TRUE(pool.owns(p));
  }
  EXPECT_EQ(reinterpret_cast<uintptr_t>(pool.region().base) % CACHE_LINE, 0u);
}

TEST(PacketPool, MisuseIsFatal)
{
  packet_pool_impl_t a(2, 128), b(2, 128);
  auto p = a.alloc();
  EXPECT_EQ(code_of([&] { b.free(p); }), errorcode_t::fatal_bad_arg);
  a.free(p);
  EXPECT_EQ(code_of([&] { a.free(p); }), errorcode_t::fatal_double_free);
  EXPECT_EQ(code_of([] { packet_pool_impl_t bad(0, 128); }),
            errorcode_t::fatal_bad_arg);
}

// Every holder stamps its packet with its own id and checks it is still
// there before freeing: two holders of one packet would clobber each other.
TEST(PacketPool, ConcurrentOwnershipIsExclusive)
{
  constexpr int threads = 8;
  constexpr int rounds = 20000;
  packet_pool_impl_t pool(16, 128);
  std::atomic<int> violations{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < threads; ++t)
    ts.emplace_back([&, t] {
      std::vector<packet_t> mine;
      for (int i = 0; i < rounds; ++i) {
        if (auto p = pool.alloc()) {
          uint64_t stamp = (uint64_t(t) << 32) | uint32_t(i);
          std::memcpy(p.data, &stamp, 8);
          mine.push_back(p);
        }
        if (mine.size() > 2 || (!mine.empty() && i % 3 == 0)) {
          auto p = mine.front();
          mine.erase(mine.begin());
          uint64_t got;
          std::memcpy(&got, p.data, 8);
          if ((got >> 32) != uint64_t(t)) ++violations;
          pool.free(p);
        }
        if (i % 64 == 0) std::this_thread::yield();
      }
      for (auto p : mine) pool.free(p);
    });
  for (auto& th : ts) th.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(pool.in_use(), 0u);
  EXPECT_EQ(pool.free_count(), 16u);
}

TEST(MpmcQueue, BoundedFifo)
{
  mpmc_queue_t<int> q(3);
  EXPECT_TRUE(q.try_push(1));
  EXPECT_TRUE(q.try_push(2));
  EXPECT_TRUE(q.try_push(3));
  EXPECT_FALSE(q.try_push(4));
  EXPECT_EQ(q.try_pop(), 1);
  EXPECT_TRUE(q.try_push(4));
  EXPECT_EQ(q.try_pop(), 2);
  EXPECT_EQ(q.try_pop(), 3);
  EXPECT_EQ(q.try_pop(), 4);
  EXPECT_FALSE(q.try_pop());
}

TEST(MpmcQueue, FailedPushLeavesValueIntact)
{
  mpmc_queue_t<std::unique_ptr<int>> q(1);
  EXPECT_EQ(q.capacity(), 2u);
  ASSERT_TRUE(q.try_push(std::make_unique<int>(1)));
  ASSERT_TRUE(q.try_push(std::make_unique<int>(1)));
  auto v = std::make_unique<int>(2);
  EXPECT_FALSE(q.try_push(std::move(v)));
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, 2);
}

TEST(MpmcQueue, ConcurrentProducersConsumersLoseNothing)
{
  constexpr int producers = 4, consumers = 4, per = 20000;
  mpmc_queue_t<uint64_t> q(64);
  std::vector<std::atomic<int>> seen(producers * per);
  std::atomic<int> popped{0};
  std::vector<std::thread> ts;
  for (int p = 0; p < producers; ++p)
    ts.emplace_back([&, p] {
      for (int i = 0; i < per; ++i)
        while (!q.try_push(uint64_t(p) * per + i)) std::this_thread::yield();
    });
  for (int c = 0; c < consumers; ++c)
    ts.emplace_back([&] {
      while (popped.load() < producers * per) {
        if (auto v = q.try_pop()) {
          seen[*v]++;
          popped++;
        } else {
          std::this_thread::yield();
        }
      }
    });
  for (auto& t : ts) t.join();
  for (auto& s : seen) ASSERT_EQ(s.load(), 1);
}

}  // namespace
}  // namespace lcomm
