// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/matching.hpp"

#include <array>
#include <deque>
#include <mutex>
#include <unordered_map>

#include <fmt/format.h>

namespace lcomm
{
const char* matching_engine_kind_str(matching_engine_kind_t kind)
{
  return kind == matching_engine_kind_t::queue ? "queue" : "map";
}

matching_engine_kind_t parse_matching_engine_kind(const std::string& name)
{
  if (name == "queue") return matching_engine_kind_t::queue;
  if (name == "map") return matching_engine_kind_t::map;
  throw_fatal(errorcode_t::fatal_bad_arg,
              fmt::format("unknown matching engine kind '{}'", name));
}

namespace
{
inline match_side_t opposite(match_side_t side)
{
  return side == match_side_t::send ? match_side_t::recv : match_side_t::send;
}

// Two seq-ordered lists behind one lock. The first compatible entry of the
// opposite list is the globally lowest-seq candidate, which gives in-order
// semantics and supports wildcard keys on either side.
class queue_store_t final : public matching_store_t
{
 public:
  matching_engine_kind_t kind() const noexcept override
  {
    return matching_engine_kind_t::queue;
  }

  std::optional<match_entry_t> insert(const match_key_t& key,
                                      match_side_t side, void* value) override
  {
    std::lock_guard<std::mutex> guard(mu_);
    auto& other = list(opposite(side));
    for (auto it = other.begin(); it != other.end(); ++it) {
      if (keys_compatible(it->key, key)) {
        match_entry_t found = *it;
        other.erase(it);
        count_stored(found.side, -1);
        return found;
      }
    }
    list(side).push_back({key, side, next_seq(), value});
    count_stored(side, 1);
    return std::nullopt;
  }

  void drain(const std::function<void(const match_entry_t&)>& fn) override
  {
    std::lock_guard<std::mutex> guard(mu_);
    for (auto* l : {&sends_, &recvs_}) {
      for (auto& e : *l) {
        count_stored(e.side, -1);
        fn(e);
      }
      l->clear();
    }
  }

 private:
  std::deque<match_entry_t>& list(match_side_t side)
  {
    return side == match_side_t::send ? sends_ : recvs_;
  }

  std::mutex mu_;
  std::deque<match_entry_t> sends_;
  std::deque<match_entry_t> recvs_;
};

// Exact-key buckets spread over independently locked shards. A bucket only
// ever holds entries of one side; FIFO within the bucket.
class map_store_t final : public matching_store_t
{
 public:
  matching_engine_kind_t kind() const noexcept override
  {
    return matching_engine_kind_t::map;
  }

  std::optional<match_entry_t> insert(const match_key_t& key,
                                      match_side_t side, void* value) override
  {
    shard_t& shard = shards_[match_key_hash_t{}(key) % NSHARDS];
    std::lock_guard<std::mutex> guard(shard.mu);
    auto [it, inserted] = shard.buckets.try_emplace(key);
    bucket_t& bucket = it->second;
    if (!inserted && !bucket.entries.empty() && bucket.side != side) {
      match_entry_t found = bucket.entries.front();
      bucket.entries.pop_front();
      count_stored(found.side, -1);
      if (bucket.entries.empty()) shard.buckets.erase(it);
      return found;
    }
    bucket.side = side;
    bucket.entries.push_back({key, side, next_seq(), value});
    count_stored(side, 1);
    return std::nullopt;
  }

  void drain(const std::function<void(const match_entry_t&)>& fn) override
  {
    for (auto& shard : shards_) {
      std::lock_guard<std::mutex> guard(shard.mu);
      for (auto& [key, bucket] : shard.buckets) {
        for (auto& e : bucket.entries) {
          count_stored(e.side, -1);
          fn(e);
        }
      }
      shard.buckets.clear();
    }
  }

 private:
  static constexpr size_t NSHARDS = 64;
  static constexpr size_t CACHE_LINE_SIZE = 64;
  struct bucket_t {
    match_side_t side = match_side_t::send;
    std::deque<match_entry_t> entries;
  };
  struct alignas(CACHE_LINE_SIZE) shard_t {
    std::mutex mu;
    std::unordered_map<match_key_t, bucket_t, match_key_hash_t> buckets;
  };
  std::array<shard_t, NSHARDS> shards_;
};

}  // namespace

std::unique_ptr<matching_store_t> make_matching_store(
    matching_engine_kind_t kind)
{
  if (kind == matching_engine_kind_t::queue)
    return std::make_unique<queue_store_t>();
  return std::make_unique<map_store_t>();
}

}  // namespace lcomm
