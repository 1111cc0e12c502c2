// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_PACKET_POOL_HPP
#define LCOMM_PACKET_POOL_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>

#include "lcomm/core.hpp"
#include "lcomm/mpmc_queue.hpp"

namespace lcomm
{
class packet_pool_impl_t;

// A fixed-size buffer borrowed from a pool. Plain value; ownership is
// tracked by the pool, not by this struct.
struct packet_t {
  std::byte* data = nullptr;
  packet_pool_impl_t* pool = nullptr;
  uint32_t index = 0;

  explicit operator bool() const noexcept { return data != nullptr; }
};

// Contiguous region covering every packet of a pool.
struct slab_region_t {
  const std::byte* base = nullptr;
  size_t length = 0;
  bool contains(const void* p, size_t n) const noexcept
  {
    auto* b = static_cast<const std::byte*>(p);
    return b >= base && b + n <= base + length;
  }
};

class packet_pool_impl_t
{
 public:
  packet_pool_impl_t(size_t packet_count, size_t packet_size);
  packet_pool_impl_t(const packet_pool_impl_t&) = delete;
  packet_pool_impl_t& operator=(const packet_pool_impl_t&) = delete;

  // Empty packet when exhausted. Lock-free.
  packet_t alloc() noexcept;
  // Throws fatal_double_free / fatal_bad_arg on misuse.
  void free(packet_t packet);

  size_t capacity() const noexcept { return count_; }
  size_t packet_size() const noexcept { return size_; }
  size_t free_count() const noexcept
  {
    return free_count_.load(std::memory_order_relaxed);
  }
  size_t in_use() const noexcept { return count_ - free_count(); }
  slab_region_t region() const noexcept
  {
    return {slab_.get(), count_ * size_};
  }
  bool owns(const packet_t& packet) const noexcept
  {
    return packet.pool == this && packet.index < count_ &&
           packet.data == slab_.get() + packet.index * size_;
  }

 private:
  static constexpr uint32_t NIL = ~uint32_t{0};
  static constexpr uint8_t STATE_FREE = 0;
  static constexpr uint8_t STATE_HELD = 1;

  static uint64_t pack(uint32_t aba, uint32_t index)
  {
    return (static_cast<uint64_t>(aba) << 32) | index;
  }

  size_t count_;
  size_t size_;
  struct slab_deleter_t {
    void operator()(std::byte* p) const
    {
      ::operator delete[](p, std::align_val_t{CACHE_LINE});
    }
  };
  std::unique_ptr<std::byte[], slab_deleter_t> slab_;
  std::unique_ptr<std::atomic<uint32_t>[]> next_;
  std::unique_ptr<std::atomic<uint8_t>[]> state_;
  alignas(CACHE_LINE) std::atomic<uint64_t> head_;
  alignas(CACHE_LINE) std::atomic<size_t> free_count_;
};

}  // namespace lcomm

#endif  // LCOMM_PACKET_POOL_HPP
