// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_COMPLETION_HPP
#define LCOMM_COMPLETION_HPP

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lcomm/core.hpp"
#include "lcomm/mpmc_queue.hpp"

namespace lcomm
{
enum class comp_kind_t : uint8_t { cq, sync, handler, user };

const char* comp_kind_str(comp_kind_t kind);

// Completion sink. Override signal() to build a custom completion object;
// the runtime calls it exactly once per completed operation, possibly from
// several threads at once.
class comp_impl_t
{
 public:
  explicit comp_impl_t(comp_kind_t kind = comp_kind_t::user) : kind_(kind) {}
  virtual ~comp_impl_t() = default;
  comp_impl_t(const comp_impl_t&) = delete;
  comp_impl_t& operator=(const comp_impl_t&) = delete;

  virtual void signal(status_t status) = 0;
  comp_kind_t kind() const noexcept { return kind_; }

 private:
  comp_kind_t kind_;
};

class cq_impl_t final : public comp_impl_t
{
 public:
  explicit cq_impl_t(size_t capacity);
  // Pushing into a full queue is fatal.
  void signal(status_t status) override;
  std::optional<status_t> pop() { return queue_.try_pop(); }
  size_t capacity() const noexcept { return queue_.capacity(); }
  size_t size_approx() const noexcept { return queue_.size_approx(); }

 private:
  mpmc_queue_t<status_t> queue_;
};

// Becomes ready after `threshold` signals. wait() hands the stored records
// to exactly one waiter per epoch and re-arms the object.
class sync_impl_t final : public comp_impl_t
{
 public:
  explicit sync_impl_t(size_t threshold);
  void signal(status_t status) override;
  bool test() const noexcept
  {
    return filled_.load(std::memory_order_acquire) >= threshold_;
  }
  // Spins until ready, calling progress_hook between checks when given.
  std::vector<status_t> wait(const std::function<void()>& progress_hook);
  size_t threshold() const noexcept { return threshold_; }

 private:
  bool try_claim(std::vector<status_t>& out);

  const size_t threshold_;
  std::unique_ptr<status_t[]> slots_;
  std::atomic<size_t> count_{0};
  std::atomic<size_t> filled_{0};
  std::atomic<bool> claiming_{false};
};

using handler_fn_t = std::function<void(const status_t&)>;

// Runs on the delivering thread. Must not block waiting for other
// completions of the same device.
class handler_impl_t final : public comp_impl_t
{
 public:
  explicit handler_impl_t(handler_fn_t fn)
      : comp_impl_t(comp_kind_t::handler), fn_(std::move(fn))
  {
  }
  void signal(status_t status) override { fn_(status); }

 private:
  handler_fn_t fn_;
};

}  // namespace lcomm

#endif  // LCOMM_COMPLETION_HPP
