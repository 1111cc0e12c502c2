// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_OPS_HPP
#define LCOMM_OPS_HPP

#include "lcomm/runtime.hpp"

namespace lcomm
{
enum class post_state_t : uint8_t {
  // Completed inside the call; `status` is the notification and the local
  // completion object is not signaled.
  done,
  // The local completion object will be signaled exactly once.
  posted,
  // Resources exhausted; nothing happened, safe to re-invoke.
  retry,
};

const char* post_state_str(post_state_t state);

struct post_result_t {
  post_state_t state = post_state_t::retry;
  status_t status;  // meaningful iff done

  bool is_done() const noexcept { return state == post_state_t::done; }
  bool is_posted() const noexcept { return state == post_state_t::posted; }
  bool is_retry() const noexcept { return state == post_state_t::retry; }
};

// Two-sided send. Unset resources resolve at invocation time to the
// defaults of the sending rank.
class post_send_x
{
 public:
  post_send_x(rank_t rank, const void* buffer, size_t size, tag_t tag)
      : rank_(rank), buffer_(buffer), size_(size), tag_(tag)
  {
  }
  LCOMM_OPTIONAL_ARG(post_send_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(post_send_x, device_t, device)
  LCOMM_OPTIONAL_ARG(post_send_x, matching_engine_t, matching_engine)
  LCOMM_OPTIONAL_ARG(post_send_x, match_policy_t, matching_policy)
  LCOMM_OPTIONAL_ARG(post_send_x, comp_t, comp)
  LCOMM_OPTIONAL_ARG(post_send_x, void*, user_context)
  LCOMM_OPTIONAL_ARG(post_send_x, mr_t, mr)

  post_result_t call() const;
  post_result_t operator()() const { return call(); }

 private:
  rank_t rank_;
  const void* buffer_;
  size_t size_;
  tag_t tag_;
};

// `rank` and `tag` may be ANY_RANK / ANY_TAG with a queue engine.
class post_recv_x
{
 public:
  post_recv_x(rank_t rank, void* buffer, size_t size, tag_t tag)
      : rank_(rank), buffer_(buffer), size_(size), tag_(tag)
  {
  }
  LCOMM_OPTIONAL_ARG(post_recv_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(post_recv_x, device_t, device)
  LCOMM_OPTIONAL_ARG(post_recv_x, matching_engine_t, matching_engine)
  LCOMM_OPTIONAL_ARG(post_recv_x, match_policy_t, matching_policy)
  LCOMM_OPTIONAL_ARG(post_recv_x, comp_t, comp)
  LCOMM_OPTIONAL_ARG(post_recv_x, void*, user_context)
  LCOMM_OPTIONAL_ARG(post_recv_x, mr_t, mr)

  post_result_t call() const;
  post_result_t operator()() const { return call(); }

 private:
  rank_t rank_;
  void* buffer_;
  size_t size_;
  tag_t tag_;
};

// Active message delivered to the completion object registered under
// `remote_comp` at the target.
class post_am_x
{
 public:
  post_am_x(rank_t rank, const void* buffer, size_t size, rcomp_t remote_comp)
      : rank_(rank), buffer_(buffer), size_(size), remote_comp_(remote_comp)
  {
  }
  LCOMM_OPTIONAL_ARG(post_am_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(post_am_x, device_t, device)
  LCOMM_OPTIONAL_ARG(post_am_x, comp_t, comp)
  LCOMM_OPTIONAL_ARG(post_am_x, tag_t, tag)
  LCOMM_OPTIONAL_ARG(post_am_x, void*, user_context)
  LCOMM_OPTIONAL_ARG(post_am_x, mr_t, mr)

  post_result_t call() const;
  post_result_t operator()() const { return call(); }

 private:
  rank_t rank_;
  const void* buffer_;
  size_t size_;
  rcomp_t remote_comp_;
};

// One-sided write into the region `rkey` at the target, `offset` bytes in.
// With remote_comp set, the target's completion object is signaled once
// the data is visible.
class post_put_x
{
 public:
  post_put_x(rank_t rank, const void* buffer, size_t size, rkey_t rkey,
             uint64_t offset)
      : rank_(rank), buffer_(buffer), size_(size), rkey_(rkey), offset_(offset)
  {
  }
  LCOMM_OPTIONAL_ARG(post_put_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(post_put_x, device_t, device)
  LCOMM_OPTIONAL_ARG(post_put_x, comp_t, comp)
  LCOMM_OPTIONAL_ARG(post_put_x, rcomp_t, remote_comp)
  LCOMM_OPTIONAL_ARG(post_put_x, tag_t, tag)
  LCOMM_OPTIONAL_ARG(post_put_x, void*, user_context)
  LCOMM_OPTIONAL_ARG(post_put_x, mr_t, mr)

  post_result_t call() const;
  post_result_t operator()() const { return call(); }

 private:
  rank_t rank_;
  const void* buffer_;
  size_t size_;
  rkey_t rkey_;
  uint64_t offset_;
};

// One-sided read. Served by the target's progress engine.
class post_get_x
{
 public:
  post_get_x(rank_t rank, void* buffer, size_t size, rkey_t rkey,
             uint64_t offset)
      : rank_(rank), buffer_(buffer), size_(size), rkey_(rkey), offset_(offset)
  {
  }
  LCOMM_OPTIONAL_ARG(post_get_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(post_get_x, device_t, device)
  LCOMM_OPTIONAL_ARG(post_get_x, comp_t, comp)
  LCOMM_OPTIONAL_ARG(post_get_x, rcomp_t, remote_comp)
  LCOMM_OPTIONAL_ARG(post_get_x, tag_t, tag)
  LCOMM_OPTIONAL_ARG(post_get_x, void*, user_context)
  LCOMM_OPTIONAL_ARG(post_get_x, mr_t, mr)

  post_result_t call() const;
  post_result_t operator()() const { return call(); }

 private:
  rank_t rank_;
  void* buffer_;
  size_t size_;
  rkey_t rkey_;
  uint64_t offset_;
};

// Progress on one device (default device of the runtime when unset).
class progress_x
{
 public:
  LCOMM_OPTIONAL_ARG(progress_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(progress_x, device_t, device)

  bool call() const;
  bool operator()() const { return call(); }
};

inline post_result_t post_send(rank_t rank, const void* buffer, size_t size,
                               tag_t tag, comp_t comp)
{
  return post_send_x(rank, buffer, size, tag).comp(comp)();
}
inline post_result_t post_recv(rank_t rank, void* buffer, size_t size,
                               tag_t tag, comp_t comp)
{
  return post_recv_x(rank, buffer, size, tag).comp(comp)();
}
inline post_result_t post_am(rank_t rank, const void* buffer, size_t size,
                             rcomp_t remote_comp, comp_t comp)
{
  return post_am_x(rank, buffer, size, remote_comp).comp(comp)();
}
inline post_result_t post_put(rank_t rank, const void* buffer, size_t size,
                              rkey_t rkey, uint64_t offset, comp_t comp)
{
  return post_put_x(rank, buffer, size, rkey, offset).comp(comp)();
}
inline post_result_t post_get(rank_t rank, void* buffer, size_t size,
                              rkey_t rkey, uint64_t offset, comp_t comp)
{
  return post_get_x(rank, buffer, size, rkey, offset).comp(comp)();
}

bool progress(device_t device);
// Every device of the runtime, round-robin. True iff any did work.
bool progress_all(runtime_t runtime = {});

}  // namespace lcomm

#endif  // LCOMM_OPS_HPP
