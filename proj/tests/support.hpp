// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit, scenario and acceptance tests.

#ifndef LCOMM_TESTS_SUPPORT_HPP
#define LCOMM_TESTS_SUPPORT_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lcomm/lcomm.hpp"

namespace lcomm::testing
{
// Spins `step` until `done` holds, yielding when no work happened.
// Throws after `timeout` so a hung protocol fails instead of stalling ctest.
inline void spin_until(const std::function<bool()>& done,
                       const std::function<bool()>& step,
                       std::chrono::seconds timeout = std::chrono::seconds(60))
{
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!done()) {
    if (!step()) std::this_thread::yield();
    if (std::chrono::steady_clock::now() > deadline)
      throw std::runtime_error("timed out waiting for completion");
  }
}

// Posts `desc` with a fresh threshold-1 synchronizer, retrying on
// backpressure, and returns the completion record. Progress is driven on
// `dev` only, or on every device of the runtime when `dev` is empty.
template <typename Desc>
status_t run_op(Desc desc, device_t dev = {})
{
  auto step = [&] { return dev.is_empty() ? progress_all() : progress(dev); };
  comp_t sync = alloc_sync(1);
  desc.comp(sync);
  post_result_t r;
  spin_until([&] { return !(r = desc()).is_retry(); }, step);
  status_t st;
  if (r.is_done()) {
    st = std::move(r.status);
  } else {
    std::vector<status_t> out;
    spin_until([&] { return sync_test(sync); }, step);
    out = sync_wait(sync);
    st = std::move(out.at(0));
  }
  free_comp(sync);
  return st;
}

// Deterministic byte pattern keyed by (seed, index).
inline std::byte pattern_byte(uint64_t seed, size_t i)
{
  uint64_t x = seed * 0x9E3779B97F4A7C15ull + i * 0xBF58476D1CE4E5B9ull;
  x ^= x >> 31;
  return static_cast<std::byte>(x & 0xFF);
}

inline std::vector<std::byte> make_pattern(uint64_t seed, size_t n)
{
  std::vector<std::byte> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = pattern_byte(seed, i);
  return v;
}

inline bool check_pattern(const void* p, uint64_t seed, size_t n)
{
  auto* b = static_cast<const std::byte*>(p);
  for (size_t i = 0; i < n; ++i)
    if (b[i] != pattern_byte(seed, i)) return false;
  return true;
}

// Free port base for a TCP test run. Collisions are unlikely but possible
// when tests run in parallel; the range is wide to make them rare.
int64_t pick_port_base();

}  // namespace lcomm::testing

#endif  // LCOMM_TESTS_SUPPORT_HPP
