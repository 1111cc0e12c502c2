// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "oracles.hpp"

namespace lcomm
{
namespace
{
using namespace lcomm::testing;

void* as_value(uint64_t v) { return reinterpret_cast<void*>(uintptr_t(v)); }
uint64_t as_id(void* p) { return uint64_t(reinterpret_cast<uintptr_t>(p)); }

class MatchingKinds
    : public ::testing::TestWithParam<matching_engine_kind_t>
{
};

TEST_P(MatchingKinds, InsertMatchesOrStores)
{
  auto store = make_matching_store(GetParam());
  EXPECT_FALSE(store->insert({1, 2}, match_side_t::recv, as_value(10)));
  EXPECT_FALSE(store->insert({1, 3}, match_side_t::send, as_value(11)));
  EXPECT_EQ(store->census(), (match_census_t{1, 1}));
  auto hit = store->insert({1, 2}, match_side_t::send, as_value(12));
  ASSERT_TRUE(hit);
  EXPECT_EQ(as_id(hit->value), 10u);
  EXPECT_EQ(hit->side, match_side_t::recv);
  EXPECT_EQ(store->census(), (match_census_t{1, 0}));
}

TEST_P(MatchingKinds, FifoWithinKey)
{
  auto store = make_matching_store(GetParam());
  for (uint64_t i = 1; i <= 50; ++i)
    ASSERT_FALSE(store->insert({0, 7}, match_side_t::send, as_value(i)));
  for (uint64_t i = 1; i <= 50; ++i) {
    auto hit = store->insert({0, 7}, match_side_t::recv, nullptr);
    ASSERT_TRUE(hit);
    EXPECT_EQ(as_id(hit->value), i);
  }
}

TEST_P(MatchingKinds, SeqStrictlyIncreases)
{
  auto store = make_matching_store(GetParam());
  for (uint64_t i = 0; i < 20; ++i)
    store->insert({uint32_t(i % 3), i}, match_side_t::recv, as_value(i));
  std::vector<uint64_t> seqs;
  store->drain([&](const match_entry_t& e) { seqs.push_back(e.seq); });
  std::sort(seqs.begin(), seqs.end());
  EXPECT_EQ(std::adjacent_find(seqs.begin(), seqs.end()), seqs.end());
  EXPECT_EQ(store->census(), (match_census_t{0, 0}));
}

TEST_P(MatchingKinds, AgreesWithOracleOnExactKeys)
{
  std::mt19937_64 rng(42);
  for (auto policy : ORACLE_POLICIES) {
    for (int run = 0; run < 20; ++run) {
      workload_params_t p;
      p.inserts = 1 + rng() % 3000;
      p.policy = policy;
      auto ops = make_workload(p, rng);
      auto want = oracle_match(ops);
      auto store = make_matching_store(GetParam());
      auto got = run_store(*store, ops);
      ASSERT_EQ(got.pairs, want.pairs) << match_policy_str(policy);
      ASSERT_EQ(got.stored, want.stored);
      ASSERT_EQ(got.census, want.census);
      ASSERT_TRUE(conserved(ops, got));
      ASSERT_TRUE(no_compatible_leftovers(ops, got.stored));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, MatchingKinds,
                         ::testing::Values(matching_engine_kind_t::queue,
                                           matching_engine_kind_t::map),
                         [](const auto& info) {
                           return std::string(
                               matching_engine_kind_str(info.param));
                         });

TEST(QueueEngine, WildcardsAgreeWithOracle)
{
  std::mt19937_64 rng(9);
  for (auto policy : ORACLE_POLICIES) {
    for (int run = 0; run < 20; ++run) {
      workload_params_t p;
      p.inserts = 1 + rng() % 3000;
      p.policy = policy;
      p.wildcards = true;
      auto ops = make_workload(p, rng);
      auto want = oracle_match(ops);
      auto store = make_matching_store(matching_engine_kind_t::queue);
      auto got = run_store(*store, ops);
      ASSERT_EQ(got.pairs, want.pairs);
      ASSERT_EQ(got.stored, want.stored);
      ASSERT_TRUE(conserved(ops, got));
      ASSERT_TRUE(no_compatible_leftovers(ops, got.stored));
    }
  }
}

TEST(QueueEngine, WildcardRecvTakesOldestCompatibleSend)
{
  auto store = make_matching_store(matching_engine_kind_t::queue);
  store->insert({2, 5}, match_side_t::send, as_value(1));
  store->insert({1, 6}, match_side_t::send, as_value(2));
  store->insert({1, 5}, match_side_t::send, as_value(3));
  auto hit = store->insert({1, ANY_TAG}, match_side_t::recv, nullptr);
  ASSERT_TRUE(hit);
  EXPECT_EQ(as_id(hit->value), 2u);
  hit = store->insert({ANY_RANK, 5}, match_side_t::recv, nullptr);
  ASSERT_TRUE(hit);
  EXPECT_EQ(as_id(hit->value), 1u);
}

TEST(QueueEngine, PolicyNoneIsStrictlyInOrder)
{
  auto store = make_matching_store(matching_engine_kind_t::queue);
  auto key = make_match_key(0, 0, match_policy_kind_t::none);
  constexpr uint64_t n = 2000;
  for (uint64_t i = 0; i < n; ++i)
    store->insert(key, match_side_t::recv, as_value(i));
  for (uint64_t i = 0; i < n; ++i) {
    auto k = make_match_key(rank_t(i % 5), i * 7, match_policy_kind_t::none);
    auto hit = store->insert(k, match_side_t::send, nullptr);
    ASSERT_TRUE(hit);
    ASSERT_EQ(as_id(hit->value), i);
  }
}

TEST(MatchingStore, ConcurrentInsertsConserveEntries)
{
  for (auto kind : {matching_engine_kind_t::queue, matching_engine_kind_t::map}) {
    auto store = make_matching_store(kind);
    constexpr int threads = 8, per = 5000;
    std::atomic<int> matches{0};
    std::vector<std::thread> ts;
    for (int t = 0; t < threads; ++t)
      ts.emplace_back([&, t] {
        auto side = t % 2 ? match_side_t::send : match_side_t::recv;
        for (int i = 0; i < per; ++i)
          if (store->insert({uint32_t(i % 4), uint64_t(i % 8)}, side,
                            as_value(uint64_t(t) * per + i + 1)))
            matches++;
      });
    for (auto& th : ts) th.join();
    auto c = store->census();
    EXPECT_EQ(2 * matches.load() + int(c.pending_sends + c.pending_recvs),
              threads * per);
    // Equal numbers of each side per key: everything pairs off.
    EXPECT_EQ(c, (match_census_t{0, 0}));
  }
}

}  // namespace
}  // namespace lcomm
