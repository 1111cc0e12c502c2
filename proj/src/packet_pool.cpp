// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/packet_pool.hpp"

#include <fmt/format.h>

namespace lcomm
{
packet_pool_impl_t::packet_pool_impl_t(size_t packet_count, size_t packet_size)
    : count_(packet_count), size_(packet_size)
{
  if (packet_count == 0 || packet_size == 0 || packet_count >= NIL)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("invalid packet pool shape ({} x {} bytes)",
                            packet_count, packet_size));
  slab_.reset(static_cast<std::byte*>(::operator new[](
      count_ * size_, std::align_val_t{CACHE_LINE})));
  next_.reset(new std::atomic<uint32_t>[count_]);
  state_.reset(new std::atomic<uint8_t>[count_]);
  for (size_t i = 0; i < count_; ++i) {
    next_[i].store(i + 1 < count_ ? static_cast<uint32_t>(i + 1) : NIL,
                   std::memory_order_relaxed);
    state_[i].store(STATE_FREE, std::memory_order_relaxed);
  }
  head_.store(pack(0, 0), std::memory_order_relaxed);
  free_count_.store(count_, std::memory_order_relaxed);
}

packet_t packet_pool_impl_t::alloc() noexcept
{
  uint64_t head = head_.load(std::memory_order_acquire);
  for (;;) {
    auto index = static_cast<uint32_t>(head);
    if (index == NIL) return {};
    // May read a stale link if index was recycled meanwhile; the ABA
    // counter makes the CAS below fail in that case.
    uint32_t next = next_[index].load(std::memory_order_relaxed);
    uint64_t desired = pack(static_cast<uint32_t>(head >> 32) + 1, next);
    if (head_.compare_exchange_weak(head, desired, std::memory_order_acq_rel,
                                    std::memory_order_acquire)) {
      state_[index].store(STATE_HELD, std::memory_order_relaxed);
      free_count_.fetch_sub(1, std::memory_order_relaxed);
      return packet_t{slab_.get() + index * size_, this, index};
    }
  }
}

void packet_pool_impl_t::free(packet_t packet)
{
  if (!owns(packet))
    throw_fatal(errorcode_t::fatal_bad_arg,
                "packet returned to a pool that does not own it");
  uint8_t prev = state_[packet.index].exchange(STATE_FREE,
                                               std::memory_order_relaxed);
  if (prev != STATE_HELD)
    throw_fatal(errorcode_t::fatal_double_free,
                fmt::format("packet {} freed twice", packet.index));
  free_count_.fetch_add(1, std::memory_order_relaxed);
  uint64_t head = head_.load(std::memory_order_relaxed);
  for (;;) {
    next_[packet.index].store(static_cast<uint32_t>(head),
                              std::memory_order_relaxed);
    uint64_t desired = pack(static_cast<uint32_t>(head >> 32) + 1,
                            packet.index);
    if (head_.compare_exchange_weak(head, desired, std::memory_order_release,
                                    std::memory_order_relaxed))
      return;
  }
}

}  // namespace lcomm
