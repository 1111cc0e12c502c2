// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_RUNTIME_HPP
#define LCOMM_RUNTIME_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcomm/attributes.hpp"
#include "lcomm/completion.hpp"
#include "lcomm/core.hpp"
#include "lcomm/matching.hpp"

// Optional argument of an objectized function: a std::optional member plus
// a chainable setter usable on lvalues and temporaries.
#define LCOMM_OPTIONAL_ARG(self_t, type, name) \
  std::optional<type> name##_;                 \
  self_t& name(type value)&                    \
  {                                            \
    name##_ = std::move(value);                \
    return *this;                              \
  }                                            \
  self_t&& name(type value)&&                  \
  {                                            \
    name##_ = std::move(value);                \
    return std::move(*this);                   \
  }

// Optional argument that lands in the attribute set of the resource.
#define LCOMM_ATTR_ARG(self_t, type, name)     \
  self_t& name(type value)&                    \
  {                                            \
    attrs_[#name] = to_attr_value(value);      \
    return *this;                              \
  }                                            \
  self_t&& name(type value)&&                  \
  {                                            \
    attrs_[#name] = to_attr_value(value);      \
    return std::move(*this);                   \
  }

// Generic attribute setter shared by all allocation descriptors.
#define LCOMM_GENERIC_ATTR(self_t)                          \
  attr_set_t attrs_;                                        \
  template <typename T>                                     \
  self_t& attr(const std::string& name, T value)&           \
  {                                                         \
    attrs_[name] = to_attr_value(value);                    \
    return *this;                                           \
  }                                                         \
  template <typename T>                                     \
  self_t&& attr(const std::string& name, T value)&&         \
  {                                                         \
    attrs_[name] = to_attr_value(value);                    \
    return std::move(*this);                                \
  }

namespace lcomm
{
class runtime_impl_t;
class device_impl_t;
class matching_engine_impl_t;
class packet_pool_impl_t;
class mr_impl_t;

/////////////////////////////////////////////////////////////////////////////
// Resource handles. Each holds only a pointer to the real object.
/////////////////////////////////////////////////////////////////////////////
class packet_pool_t
{
 public:
  packet_pool_impl_t* p_impl = nullptr;
  packet_pool_t() = default;
  explicit packet_pool_t(packet_pool_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }
  int64_t get_attr_packet_size() const;
  int64_t get_attr_packet_count() const;
  attr_value_t get_attr(const std::string& name) const;
  friend bool operator==(packet_pool_t, packet_pool_t) = default;
};

class device_t
{
 public:
  device_impl_t* p_impl = nullptr;
  device_t() = default;
  explicit device_t(device_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }
  std::string get_attr_transport() const;
  int64_t get_attr_rank() const;
  int64_t get_attr_id() const;
  int64_t get_attr_max_progress_batch() const;
  int64_t get_attr_outbound_queue_depth() const;
  int64_t get_attr_eager_threshold() const;
  attr_value_t get_attr(const std::string& name) const;
  packet_pool_t get_packet_pool() const;
  friend bool operator==(device_t, device_t) = default;
};

class matching_engine_t
{
 public:
  matching_engine_impl_t* p_impl = nullptr;
  matching_engine_t() = default;
  explicit matching_engine_t(matching_engine_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }
  std::string get_attr_kind() const;
  std::string get_attr_policy() const;
  int64_t get_attr_id() const;
  attr_value_t get_attr(const std::string& name) const;
  // Stored entries of the store serving `rank` (a local rank).
  match_census_t census(rank_t rank) const;
  friend bool operator==(matching_engine_t, matching_engine_t) = default;
};

class comp_t
{
 public:
  comp_impl_t* p_impl = nullptr;
  comp_t() = default;
  explicit comp_t(comp_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }
  comp_kind_t kind() const;
  int64_t get_attr_capacity() const;   // completion queues
  int64_t get_attr_threshold() const;  // synchronizers
  attr_value_t get_attr(const std::string& name) const;
  friend bool operator==(comp_t, comp_t) = default;
};

class mr_t
{
 public:
  mr_impl_t* p_impl = nullptr;
  mr_t() = default;
  explicit mr_t(mr_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }
  rkey_t get_rkey() const;
  void* get_base() const;
  size_t get_length() const;
  friend bool operator==(mr_t, mr_t) = default;
};

class runtime_t
{
 public:
  runtime_impl_t* p_impl = nullptr;
  runtime_t() = default;
  explicit runtime_t(runtime_impl_t* p) : p_impl(p) {}
  bool is_empty() const noexcept { return p_impl == nullptr; }

  // First local rank. Loopback runtimes host every rank in-process.
  rank_t get_rank() const;
  rank_t get_nranks() const;
  std::vector<rank_t> get_local_ranks() const;

  std::string get_attr_transport() const;
  int64_t get_attr_packet_size() const;
  int64_t get_attr_packet_count() const;
  int64_t get_attr_cq_capacity() const;
  bool get_attr_alloc_default_resources() const;
  attr_value_t get_attr(const std::string& name) const;

  // Empty handles when default allocation is disabled.
  device_t get_default_device(std::optional<rank_t> rank = {}) const;
  comp_t get_default_cq(std::optional<rank_t> rank = {}) const;
  matching_engine_t get_default_matching_engine() const;
  packet_pool_t get_default_packet_pool() const;
  friend bool operator==(runtime_t, runtime_t) = default;
};

/////////////////////////////////////////////////////////////////////////////
// Runtime lifecycle
/////////////////////////////////////////////////////////////////////////////
class runtime_init_x
{
 public:
  LCOMM_GENERIC_ATTR(runtime_init_x)
  LCOMM_ATTR_ARG(runtime_init_x, std::string, transport)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, rank)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, nranks)
  LCOMM_ATTR_ARG(runtime_init_x, std::string, hosts)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, tcp_port_base)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, connect_timeout_ms)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, packet_size)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, packet_count)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, cq_capacity)
  LCOMM_ATTR_ARG(runtime_init_x, std::string, match_engine)
  LCOMM_ATTR_ARG(runtime_init_x, std::string, match_policy)
  LCOMM_ATTR_ARG(runtime_init_x, bool, alloc_default_resources)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, max_progress_batch)
  LCOMM_ATTR_ARG(runtime_init_x, int64_t, outbound_queue_depth)

  runtime_t call() const;
  runtime_t operator()() const { return call(); }
};

class runtime_finalize_x
{
 public:
  LCOMM_OPTIONAL_ARG(runtime_finalize_x, runtime_t, runtime)
  // Skip the pending-operation check (cleanup after a fatal error).
  LCOMM_OPTIONAL_ARG(runtime_finalize_x, bool, force)

  void call() const;
  void operator()() const { call(); }
};

inline runtime_t runtime_init() { return runtime_init_x()(); }
inline void runtime_finalize() { runtime_finalize_x()(); }
// Empty handle when no runtime is active.
runtime_t get_runtime();

struct census_t {
  size_t devices = 0;
  size_t endpoints = 0;
  size_t packet_pools = 0;
  size_t packets_total = 0;
  size_t packets_in_use = 0;
  size_t matching_engines = 0;
  size_t comps = 0;
  size_t memory_regions = 0;
  // Operations posted but not yet completed, over all devices.
  size_t pending_ops = 0;
  // Frames sitting in transport queues, over all devices.
  size_t queued_frames = 0;
};

census_t get_census(runtime_t runtime = {});

/////////////////////////////////////////////////////////////////////////////
// Resource allocation
/////////////////////////////////////////////////////////////////////////////
class alloc_device_x
{
 public:
  LCOMM_GENERIC_ATTR(alloc_device_x)
  LCOMM_OPTIONAL_ARG(alloc_device_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(alloc_device_x, packet_pool_t, packet_pool)
  LCOMM_ATTR_ARG(alloc_device_x, int64_t, rank)
  LCOMM_ATTR_ARG(alloc_device_x, int64_t, max_progress_batch)
  LCOMM_ATTR_ARG(alloc_device_x, int64_t, outbound_queue_depth)

  device_t call() const;
  device_t operator()() const { return call(); }
};

class alloc_packet_pool_x
{
 public:
  LCOMM_GENERIC_ATTR(alloc_packet_pool_x)
  LCOMM_OPTIONAL_ARG(alloc_packet_pool_x, runtime_t, runtime)
  LCOMM_ATTR_ARG(alloc_packet_pool_x, int64_t, packet_size)
  LCOMM_ATTR_ARG(alloc_packet_pool_x, int64_t, packet_count)

  packet_pool_t call() const;
  packet_pool_t operator()() const { return call(); }
};

class alloc_matching_engine_x
{
 public:
  LCOMM_GENERIC_ATTR(alloc_matching_engine_x)
  LCOMM_OPTIONAL_ARG(alloc_matching_engine_x, runtime_t, runtime)

  alloc_matching_engine_x& kind(matching_engine_kind_t k) &
  {
    attrs_["kind"] = std::string(matching_engine_kind_str(k));
    return *this;
  }
  alloc_matching_engine_x&& kind(matching_engine_kind_t k) &&
  {
    return std::move(kind(k));
  }
  alloc_matching_engine_x& policy(match_policy_t p) &
  {
    attrs_["policy"] = std::string(match_policy_str(p.kind()));
    custom_fn_ = p.fn();
    return *this;
  }
  alloc_matching_engine_x&& policy(match_policy_t p) &&
  {
    return std::move(policy(std::move(p)));
  }

  matching_engine_t call() const;
  matching_engine_t operator()() const { return call(); }

 private:
  match_fn_t custom_fn_;
};

class alloc_cq_x
{
 public:
  LCOMM_GENERIC_ATTR(alloc_cq_x)
  LCOMM_OPTIONAL_ARG(alloc_cq_x, runtime_t, runtime)
  LCOMM_ATTR_ARG(alloc_cq_x, int64_t, capacity)

  comp_t call() const;
  comp_t operator()() const { return call(); }
};

class alloc_sync_x
{
 public:
  LCOMM_GENERIC_ATTR(alloc_sync_x)
  LCOMM_OPTIONAL_ARG(alloc_sync_x, runtime_t, runtime)
  LCOMM_ATTR_ARG(alloc_sync_x, int64_t, threshold)

  comp_t call() const;
  comp_t operator()() const { return call(); }
};

class alloc_handler_x
{
 public:
  explicit alloc_handler_x(handler_fn_t fn) : fn_(std::move(fn)) {}
  LCOMM_OPTIONAL_ARG(alloc_handler_x, runtime_t, runtime)

  comp_t call() const;
  comp_t operator()() const { return call(); }

 private:
  handler_fn_t fn_;
};

inline device_t alloc_device() { return alloc_device_x()(); }
inline packet_pool_t alloc_packet_pool() { return alloc_packet_pool_x()(); }
inline comp_t alloc_cq() { return alloc_cq_x()(); }
inline comp_t alloc_sync(int64_t threshold = 1)
{
  return alloc_sync_x().threshold(threshold)();
}
inline comp_t alloc_handler(handler_fn_t fn)
{
  return alloc_handler_x(std::move(fn))();
}
// Hands a user-defined completion object to the runtime.
comp_t alloc_user_comp(std::unique_ptr<comp_impl_t> impl,
                       runtime_t runtime = {});

// Freeing a handle twice, or a handle the runtime does not own, is fatal.
void free_device(device_t& device);
void free_packet_pool(packet_pool_t& pool);
void free_matching_engine(matching_engine_t& engine);
void free_comp(comp_t& comp);

/////////////////////////////////////////////////////////////////////////////
// Completion checking
/////////////////////////////////////////////////////////////////////////////
void comp_signal(comp_t comp, status_t status);
std::optional<status_t> cq_pop(comp_t cq);
bool sync_test(comp_t sync);
std::vector<status_t> sync_wait(comp_t sync,
                                const std::function<void()>& progress_hook = {});

/////////////////////////////////////////////////////////////////////////////
// Remote completion handles
/////////////////////////////////////////////////////////////////////////////
// imm: 15-bit handles usable in immediate data. payload: 32-bit handles
// carried in the frame header.
enum class rcomp_path_t : uint8_t { imm, payload };

class register_rcomp_x
{
 public:
  explicit register_rcomp_x(comp_t comp) : comp_(comp) {}
  LCOMM_OPTIONAL_ARG(register_rcomp_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(register_rcomp_x, rcomp_path_t, path)

  rcomp_t call() const;
  rcomp_t operator()() const { return call(); }

 private:
  comp_t comp_;
};

inline rcomp_t register_rcomp(comp_t comp)
{
  return register_rcomp_x(comp)();
}
void deregister_rcomp(rcomp_t handle, runtime_t runtime = {});

/////////////////////////////////////////////////////////////////////////////
// Memory registration
/////////////////////////////////////////////////////////////////////////////
class register_memory_x
{
 public:
  register_memory_x(void* base, size_t length) : base_(base), length_(length)
  {
  }
  LCOMM_OPTIONAL_ARG(register_memory_x, runtime_t, runtime)
  LCOMM_OPTIONAL_ARG(register_memory_x, device_t, device)

  mr_t call() const;
  mr_t operator()() const { return call(); }

 private:
  void* base_;
  size_t length_;
};

inline mr_t register_memory(void* base, size_t length)
{
  return register_memory_x(base, length)();
}
void deregister_memory(mr_t& mr);

}  // namespace lcomm

#endif  // LCOMM_RUNTIME_HPP
