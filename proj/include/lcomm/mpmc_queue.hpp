// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_MPMC_QUEUE_HPP
#define LCOMM_MPMC_QUEUE_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <memory>
#include <new>
#include <optional>
#include <utility>

namespace lcomm
{
inline constexpr size_t CACHE_LINE = 64;

// Bounded multi-producer multi-consumer ring (Vyukov). Each cell carries a
// sequence number: seq == pos means free for the producer at pos,
// seq == pos + 1 means filled for the consumer at pos. A single cell cannot
// tell the two apart, so capacity is at least 2.
template <typename T>
class mpmc_queue_t
{
 public:
  explicit mpmc_queue_t(size_t capacity)
      : capacity_(std::max<size_t>(capacity, 2)), cells_(new cell_t[capacity_])
  {
    for (size_t i = 0; i < capacity_; ++i)
      cells_[i].seq.store(i, std::memory_order_relaxed);
  }

  ~mpmc_queue_t()
  {
    while (try_pop()) {
    }
  }

  mpmc_queue_t(const mpmc_queue_t&) = delete;
  mpmc_queue_t& operator=(const mpmc_queue_t&) = delete;

  bool try_push(T&& value)
  {
    size_t pos = tail_.load(std::memory_order_relaxed);
    cell_t* cell;
    for (;;) {
      cell = &cells_[pos % capacity_];
      size_t seq = cell->seq.load(std::memory_order_acquire);
      auto diff = static_cast<intptr_t>(seq) - static_cast<intptr_t>(pos);
      if (diff == 0) {
        if (tail_.compare_exchange_weak(pos, pos + 1,
                                        std::memory_order_relaxed))
          break;
      } else if (diff < 0) {
        return false;
      } else {
        pos = tail_.load(std::memory_order_relaxed);
      }
    }
    new (cell->storage) T(std::move(value));
    cell->seq.store(pos + 1, std::memory_order_release);
    return true;
  }

  std::optional<T> try_pop()
  {
    size_t pos = head_.load(std::memory_order_relaxed);
    cell_t* cell;
    for (;;) {
      cell = &cells_[pos % capacity_];
      size_t seq = cell->seq.load(std::memory_order_acquire);
      auto diff =
          static_cast<intptr_t>(seq) - static_cast<intptr_t>(pos + 1);
      if (diff == 0) {
        if (head_.compare_exchange_weak(pos, pos + 1,
                                        std::memory_order_relaxed))
          break;
      } else if (diff < 0) {
        return std::nullopt;
      } else {
        pos = head_.load(std::memory_order_relaxed);
      }
    }
    T* item = std::launder(reinterpret_cast<T*>(cell->storage));
    std::optional<T> out(std::move(*item));
    item->~T();
    cell->seq.store(pos + capacity_, std::memory_order_release);
    return out;
  }

  size_t capacity() const noexcept { return capacity_; }

  // Exact only when no push/pop is in flight.
  size_t size_approx() const noexcept
  {
    size_t tail = tail_.load(std::memory_order_acquire);
    size_t head = head_.load(std::memory_order_acquire);
    return tail > head ? tail - head : 0;
  }

  bool empty_approx() const noexcept { return size_approx() == 0; }

 private:
  struct cell_t {
    std::atomic<size_t> seq;
    alignas(T) std::byte storage[sizeof(T)];
  };

  const size_t capacity_;
  std::unique_ptr<cell_t[]> cells_;
  alignas(CACHE_LINE) std::atomic<size_t> tail_{0};
  alignas(CACHE_LINE) std::atomic<size_t> head_{0};
};

}  // namespace lcomm

#endif  // LCOMM_MPMC_QUEUE_HPP
