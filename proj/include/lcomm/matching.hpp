// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_MATCHING_HPP
#define LCOMM_MATCHING_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "lcomm/core.hpp"

namespace lcomm
{
enum class match_side_t : uint8_t { send, recv };

enum class matching_engine_kind_t : uint8_t { queue, map };

const char* matching_engine_kind_str(matching_engine_kind_t kind);
matching_engine_kind_t parse_matching_engine_kind(const std::string& name);

struct match_entry_t {
  match_key_t key;
  match_side_t side = match_side_t::send;
  uint64_t seq = 0;
  void* value = nullptr;
};

struct match_census_t {
  size_t pending_sends = 0;
  size_t pending_recvs = 0;
  friend bool operator==(const match_census_t&, const match_census_t&) =
      default;
};

// One two-sided store. insert() is a single linearizable step: it either
// removes and returns a compatible opposite-side entry, or stores the new
// one, never both.
class matching_store_t
{
 public:
  virtual ~matching_store_t() = default;
  virtual matching_engine_kind_t kind() const noexcept = 0;
  virtual std::optional<match_entry_t> insert(const match_key_t& key,
                                              match_side_t side,
                                              void* value) = 0;
  // Exact only at quiescence.
  match_census_t census() const noexcept
  {
    return {pending_sends_.load(std::memory_order_relaxed),
            pending_recvs_.load(std::memory_order_relaxed)};
  }
  // Removes every stored entry, handing each to fn. Teardown only.
  virtual void drain(const std::function<void(const match_entry_t&)>& fn) = 0;

 protected:
  void count_stored(match_side_t side, int delta) noexcept
  {
    auto& c = side == match_side_t::send ? pending_sends_ : pending_recvs_;
    c.fetch_add(static_cast<size_t>(delta), std::memory_order_relaxed);
  }
  uint64_t next_seq() noexcept
  {
    return seq_.fetch_add(1, std::memory_order_relaxed);
  }

 private:
  std::atomic<size_t> pending_sends_{0};
  std::atomic<size_t> pending_recvs_{0};
  std::atomic<uint64_t> seq_{0};
};

std::unique_ptr<matching_store_t> make_matching_store(
    matching_engine_kind_t kind);

}  // namespace lcomm

#endif  // LCOMM_MATCHING_HPP
