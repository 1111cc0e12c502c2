// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/completion.hpp"

#include <thread>

#include <fmt/format.h>

namespace lcomm
{
const char* comp_kind_str(comp_kind_t kind)
{
  switch (kind) {
    case comp_kind_t::cq:
      return "cq";
    case comp_kind_t::sync:
      return "sync";
    case comp_kind_t::handler:
      return "handler";
    case comp_kind_t::user:
      return "user";
  }
  return "unknown";
}

cq_impl_t::cq_impl_t(size_t capacity)
    : comp_impl_t(comp_kind_t::cq), queue_(capacity)
{
}

void cq_impl_t::signal(status_t status)
{
  if (!queue_.try_push(std::move(status)))
    throw_fatal(errorcode_t::fatal_cq_full,
                fmt::format("completion queue full (capacity {})",
                            queue_.capacity()));
}

sync_impl_t::sync_impl_t(size_t threshold)
    : comp_impl_t(comp_kind_t::sync),
      threshold_(threshold),
      slots_(new status_t[threshold])
{
}

void sync_impl_t::signal(status_t status)
{
  size_t slot = count_.load(std::memory_order_acquire);
  do {
    if (slot >= threshold_)
      throw_fatal(errorcode_t::fatal_sync_overflow,
                  fmt::format("synchronizer signaled beyond its threshold {}",
                              threshold_));
  } while (!count_.compare_exchange_weak(slot, slot + 1,
                                         std::memory_order_acq_rel));
  slots_[slot] = std::move(status);
  filled_.fetch_add(1, std::memory_order_release);
}

bool sync_impl_t::try_claim(std::vector<status_t>& out)
{
  if (!test()) return false;
  bool expected = false;
  if (!claiming_.compare_exchange_strong(expected, true,
                                         std::memory_order_acquire))
    return false;
  // Another waiter may have consumed this epoch between test() and the CAS.
  if (!test()) {
    claiming_.store(false, std::memory_order_release);
    return false;
  }
  out.clear();
  out.reserve(threshold_);
  for (size_t i = 0; i < threshold_; ++i) out.push_back(std::move(slots_[i]));
  filled_.store(0, std::memory_order_relaxed);
  count_.store(0, std::memory_order_release);
  claiming_.store(false, std::memory_order_release);
  return true;
}

std::vector<status_t> sync_impl_t::wait(
    const std::function<void()>& progress_hook)
{
  std::vector<status_t> out;
  while (!try_claim(out)) {
    if (progress_hook)
      progress_hook();
    else
      std::this_thread::yield();
  }
  return out;
}

}  // namespace lcomm
