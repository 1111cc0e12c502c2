// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

// Reference models shared by the unit and acceptance tests. They are
// deliberately naive so that they can be trusted by inspection.

#ifndef LCOMM_TESTS_ORACLES_HPP
#define LCOMM_TESTS_ORACLES_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "lcomm/core.hpp"
#include "lcomm/matching.hpp"

namespace lcomm::testing
{
struct insert_op_t {
  match_key_t key;
  match_side_t side;
  uint64_t id;  // unique per workload, starts at 1
};

using match_pair_t = std::pair<uint64_t, uint64_t>;  // (send id, recv id)

struct match_outcome_t {
  std::vector<match_pair_t> pairs;  // in the order they were formed
  std::vector<uint64_t> stored;     // ids left over, sorted
  match_census_t census;
};

// List scan: an insert matches the oldest stored opposite-side entry whose
// key is compatible, otherwise it is appended.
inline match_outcome_t oracle_match(const std::vector<insert_op_t>& ops)
{
  std::vector<insert_op_t> stored;
  match_outcome_t out;
  for (const auto& op : ops) {
    auto it = std::find_if(stored.begin(), stored.end(), [&](auto& s) {
      return s.side != op.side && keys_compatible(s.key, op.key);
    });
    if (it == stored.end()) {
      stored.push_back(op);
      continue;
    }
    out.pairs.push_back(op.side == match_side_t::send
                            ? match_pair_t{op.id, it->id}
                            : match_pair_t{it->id, op.id});
    stored.erase(it);
  }
  for (auto& s : stored) {
    out.stored.push_back(s.id);
    (s.side == match_side_t::send ? out.census.pending_sends
                                  : out.census.pending_recvs)++;
  }
  std::sort(out.stored.begin(), out.stored.end());
  return out;
}

inline match_outcome_t run_store(matching_store_t& store,
                                 const std::vector<insert_op_t>& ops)
{
  match_outcome_t out;
  for (const auto& op : ops) {
    auto hit = store.insert(op.key, op.side,
                            reinterpret_cast<void*>(uintptr_t(op.id)));
    if (!hit) continue;
    auto other = uint64_t(reinterpret_cast<uintptr_t>(hit->value));
    out.pairs.push_back(op.side == match_side_t::send
                            ? match_pair_t{op.id, other}
                            : match_pair_t{other, op.id});
  }
  out.census = store.census();
  store.drain([&](const match_entry_t& e) {
    out.stored.push_back(uint64_t(reinterpret_cast<uintptr_t>(e.value)));
  });
  std::sort(out.stored.begin(), out.stored.end());
  return out;
}

// True when no stored send is compatible with a stored recv.
inline bool no_compatible_leftovers(const std::vector<insert_op_t>& ops,
                                    const std::vector<uint64_t>& stored)
{
  std::vector<match_key_t> sends, recvs;
  for (auto id : stored) {
    const auto& op = ops[id - 1];
    (op.side == match_side_t::send ? sends : recvs).push_back(op.key);
  }
  // Collapse duplicates first; leftovers are few distinct keys.
  auto uniq = [](std::vector<match_key_t>& v) {
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) {
      return std::pair(a.rank, a.tag) < std::pair(b.rank, b.tag);
    });
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(sends);
  uniq(recvs);
  for (auto& s : sends)
    for (auto& r : recvs)
      if (keys_compatible(s, r)) return false;
  return true;
}

struct workload_params_t {
  size_t inserts = 1000;
  match_policy_kind_t policy = match_policy_kind_t::rank_tag;
  bool wildcards = false;  // recvs may use ANY_RANK / ANY_TAG
  uint32_t ranks = 4;
  uint64_t tags = 16;
};

// Mostly matching pairs shuffled within a small window so stored lists stay
// short, plus unpaired strays on both sides.
inline std::vector<insert_op_t> make_workload(const workload_params_t& p,
                                              std::mt19937_64& rng)
{
  std::vector<insert_op_t> ops;
  ops.reserve(p.inserts);
  std::uniform_int_distribution<uint32_t> rank_d(0, p.ranks - 1);
  std::uniform_int_distribution<uint64_t> tag_d(0, p.tags - 1);
  std::uniform_int_distribution<int> pct(0, 99);
  auto key_of = [&](rank_t r, tag_t t) {
    return make_match_key(r, t, p.policy);
  };
  while (ops.size() < p.inserts) {
    rank_t r = rank_d(rng);
    tag_t t = tag_d(rng);
    int roll = pct(rng);
    if (roll < 10 || ops.size() + 1 == p.inserts) {
      auto side = roll % 2 ? match_side_t::send : match_side_t::recv;
      ops.push_back({key_of(r, t), side, 0});
      continue;
    }
    match_key_t rk = key_of(r, t);
    if (p.wildcards && roll >= 80) {
      rank_t wr = roll >= 90 ? ANY_RANK : r;
      tag_t wt = roll % 2 ? ANY_TAG : t;
      if (p.policy == match_policy_kind_t::rank_tag ||
          p.policy == match_policy_kind_t::rank_only)
        rk.rank = wr;
      if (p.policy == match_policy_kind_t::rank_tag ||
          p.policy == match_policy_kind_t::tag_only)
        rk.tag = wt;
    }
    ops.push_back({key_of(r, t), match_side_t::send, 0});
    ops.push_back({rk, match_side_t::recv, 0});
  }
  ops.resize(p.inserts);
  constexpr size_t WINDOW = 32;
  for (size_t i = 0; i < ops.size(); i += WINDOW) {
    size_t end = std::min(ops.size(), i + WINDOW);
    std::shuffle(ops.begin() + i, ops.begin() + end, rng);
  }
  for (size_t i = 0; i < ops.size(); ++i) ops[i].id = i + 1;
  return ops;
}

// Conservation: every insert is either one half of a pair or stored.
inline bool conserved(const std::vector<insert_op_t>& ops,
                      const match_outcome_t& out)
{
  std::vector<uint64_t> all = out.stored;
  for (auto& [s, r] : out.pairs) {
    if (ops[s - 1].side != match_side_t::send) return false;
    if (ops[r - 1].side != match_side_t::recv) return false;
    all.push_back(s);
    all.push_back(r);
  }
  std::sort(all.begin(), all.end());
  if (all.size() != ops.size()) return false;
  for (size_t i = 0; i < all.size(); ++i)
    if (all[i] != i + 1) return false;
  return true;
}

inline const match_policy_kind_t ORACLE_POLICIES[] = {
    match_policy_kind_t::rank_tag, match_policy_kind_t::tag_only,
    match_policy_kind_t::rank_only, match_policy_kind_t::none};

}  // namespace lcomm::testing

#endif  // LCOMM_TESTS_ORACLES_HPP
