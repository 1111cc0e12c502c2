// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include "internal.hpp"

namespace lcomm
{
namespace
{
std::atomic<runtime_impl_t*> g_runtime{nullptr};
std::mutex g_lifecycle_mu;

constexpr int64_t MIN_PACKET_SIZE = 128;

int64_t positive(const attr_set_t& set, const char* name, int64_t min = 1)
{
  int64_t v = attr_int(set, name);
  if (v < min)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("attribute '{}' must be at least {}, got {}", name,
                            min, v));
  return v;
}

template <typename T>
T& owned(std::unordered_map<T*, std::unique_ptr<T>>& map, T* p,
         const char* what)
{
  auto it = map.find(p);
  if (!p || it == map.end())
    throw_fatal(errorcode_t::fatal_double_free,
                fmt::format("{} handle is not live", what));
  return *it->second;
}
}  // namespace

/////////////////////////////////////////////////////////////////////////////
// Remote completion registry
/////////////////////////////////////////////////////////////////////////////
rcomp_registry_t::rcomp_registry_t()
    : chunks_(new std::atomic<chunk_t*>[CHUNK])
{
  for (size_t i = 0; i < CHUNK; ++i) chunks_[i].store(nullptr);
}

rcomp_registry_t::~rcomp_registry_t()
{
  for (size_t i = 0; i < CHUNK; ++i) delete chunks_[i].load();
}

std::atomic<comp_impl_t*>* rcomp_registry_t::slot(rcomp_t handle, bool create)
{
  auto& c = chunks_[handle >> CHUNK_BITS];
  chunk_t* chunk = c.load(std::memory_order_acquire);
  if (!chunk) {
    if (!create) return nullptr;
    chunk = new chunk_t;
    for (auto& s : *chunk) s.store(nullptr, std::memory_order_relaxed);
    c.store(chunk, std::memory_order_release);
  }
  return &(*chunk)[handle & (CHUNK - 1)];
}

rcomp_t rcomp_registry_t::add(comp_impl_t* comp, rcomp_path_t path)
{
  std::lock_guard lock(mu_);
  rcomp_t h;
  if (path == rcomp_path_t::imm) {
    if (!free_imm_.empty()) {
      h = free_imm_.back();
      free_imm_.pop_back();
    } else if (next_imm_ <= MAX_IMM_RCOMP) {
      h = next_imm_++;
    } else {
      throw_fatal(errorcode_t::fatal_exhausted,
                  "all immediate remote completion handles are in use");
    }
  } else {
    if (!free_payload_.empty()) {
      h = free_payload_.back();
      free_payload_.pop_back();
    } else if (next_payload_ <= UINT32_MAX) {
      h = static_cast<rcomp_t>(next_payload_++);
    } else {
      throw_fatal(errorcode_t::fatal_exhausted,
                  "remote completion handles exhausted");
    }
  }
  slot(h, true)->store(comp, std::memory_order_release);
  ++live_;
  return h;
}

void rcomp_registry_t::remove(rcomp_t handle)
{
  std::lock_guard lock(mu_);
  auto* s = slot(handle, false);
  if (!s || !s->load(std::memory_order_relaxed))
    throw_fatal(errorcode_t::fatal_bad_rcomp,
                fmt::format("remote completion handle {} is not registered",
                            handle));
  s->store(nullptr, std::memory_order_release);
  (handle <= MAX_IMM_RCOMP ? free_imm_ : free_payload_).push_back(handle);
  --live_;
}

comp_impl_t* rcomp_registry_t::lookup(rcomp_t handle) const
{
  chunk_t* chunk = chunks_[handle >> CHUNK_BITS].load(std::memory_order_acquire);
  comp_impl_t* c =
      chunk ? (*chunk)[handle & (CHUNK - 1)].load(std::memory_order_acquire)
            : nullptr;
  if (!c)
    throw_fatal(errorcode_t::fatal_bad_rcomp,
                fmt::format("remote completion handle {} is not registered",
                            handle));
  return c;
}

size_t rcomp_registry_t::size() const
{
  std::lock_guard lock(mu_);
  return live_;
}

/////////////////////////////////////////////////////////////////////////////
// Runtime
/////////////////////////////////////////////////////////////////////////////
matching_store_t& matching_engine_impl_t::store(rank_t rank)
{
  return *stores[runtime->local_index(rank)];
}

runtime_impl_t::runtime_impl_t(attr_set_t cfg) : config(std::move(cfg))
{
  const auto& t = attr_str(config, "transport");
  if (t == "loopback")
    transport = transport_kind_t::loopback;
  else if (t == "tcp")
    transport = transport_kind_t::tcp;
  else
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("unknown transport '{}'", t));
  nranks = static_cast<rank_t>(positive(config, "nranks"));
  int64_t r = attr_int(config, "rank");
  if (r < 0 || r >= static_cast<int64_t>(nranks))
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("rank {} out of range [0, {})", r, nranks));
  positive(config, "packet_size", MIN_PACKET_SIZE);
  positive(config, "packet_count");
  positive(config, "cq_capacity");
  positive(config, "max_progress_batch");
  positive(config, "outbound_queue_depth");
  positive(config, "connect_timeout_ms", 0);
  parse_matching_engine_kind(attr_str(config, "match_engine"));
  if (parse_match_policy(attr_str(config, "match_policy")) ==
      match_policy_kind_t::custom)
    throw_fatal(errorcode_t::fatal_bad_arg,
                "the default engine cannot use a custom policy");

  if (transport == transport_kind_t::loopback) {
    rank = 0;
    for (rank_t i = 0; i < nranks; ++i) local_ranks.push_back(i);
  } else {
    rank = static_cast<rank_t>(r);
    local_ranks.push_back(rank);
    if (nranks > 1)
      tcp = std::make_unique<tcp_bootstrap_t>(
          rank, nranks,
          parse_hosts(attr_str(config, "hosts"), nranks,
                      attr_int(config, "tcp_port_base")),
          attr_int(config, "connect_timeout_ms"));
  }
  next_device_id.assign(local_ranks.size(), 0);
  default_devices.assign(local_ranks.size(), nullptr);
  default_cqs.assign(local_ranks.size(), nullptr);

  if (!attr_bool(config, "alloc_default_resources")) return;
  try {
    default_pool = create_pool({});
    default_engine = create_engine({}, {});
    for (size_t i = 0; i < local_ranks.size(); ++i) {
      default_devices[i] = create_device(
          local_ranks[i], default_pool,
          {{"rank", static_cast<int64_t>(local_ranks[i])}});
      default_cqs[i] =
          adopt_comp(std::make_unique<cq_impl_t>(default_cq_capacity()));
    }
  } catch (...) {
    teardown();
    throw;
  }
}

runtime_impl_t::~runtime_impl_t() { teardown(); }

bool runtime_impl_t::is_local(rank_t r) const
{
  return transport == transport_kind_t::loopback ? r < nranks : r == rank;
}

size_t runtime_impl_t::local_index(rank_t r) const
{
  if (!is_local(r))
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("rank {} is not hosted by this process", r));
  return transport == transport_kind_t::loopback ? r : 0;
}

matching_engine_impl_t* runtime_impl_t::engine_by_id(uint32_t id) const
{
  auto* e = id < MAX_MATCHING_ENGINES
                ? engine_slots[id].load(std::memory_order_acquire)
                : nullptr;
  if (!e)
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("message for unknown matching engine {}", id));
  return e;
}

int64_t runtime_impl_t::default_cq_capacity() const
{
  return attr_int(config, "cq_capacity");
}

packet_pool_impl_t* runtime_impl_t::create_pool(const attr_set_t& args)
{
  attr_set_t a = resolve_attrs(
      "packet pool",
      {{"packet_size", config.at("packet_size")},
       {"packet_count", config.at("packet_count")}},
      args);
  auto size = positive(a, "packet_size", MIN_PACKET_SIZE);
  auto count = positive(a, "packet_count");
  auto pool = std::make_unique<packet_pool_impl_t>(static_cast<size_t>(count),
                                                   static_cast<size_t>(size));
  auto* p = pool.get();
  std::lock_guard lock(mu);
  pools.emplace(p, std::move(pool));
  return p;
}

matching_engine_impl_t* runtime_impl_t::create_engine(const attr_set_t& args,
                                                      match_fn_t custom_fn)
{
  attr_set_t a = resolve_attrs("matching engine",
                               {{"kind", config.at("match_engine")},
                                {"policy", config.at("match_policy")}},
                               args);
  auto engine = std::make_unique<matching_engine_impl_t>();
  engine->kind = parse_matching_engine_kind(attr_str(a, "kind"));
  auto pk = parse_match_policy(attr_str(a, "policy"));
  if (pk == match_policy_kind_t::custom) {
    if (!custom_fn)
      throw_fatal(errorcode_t::fatal_bad_arg,
                  "custom policy needs a key function");
    engine->policy = match_policy_t::custom(std::move(custom_fn));
  } else {
    engine->policy = match_policy_t(pk);
  }
  engine->runtime = this;
  for (size_t i = 0; i < local_ranks.size(); ++i)
    engine->stores.push_back(make_matching_store(engine->kind));
  std::lock_guard lock(mu);
  // Ids are handed out in allocation order so that every rank agrees
  // when engines are allocated collectively.
  if (next_engine_id >= MAX_MATCHING_ENGINES)
    throw_fatal(errorcode_t::fatal_exhausted, "too many matching engines");
  engine->id = next_engine_id++;
  a["id"] = static_cast<int64_t>(engine->id);
  engine->attrs = std::move(a);
  auto* e = engine.get();
  engine_slots[e->id].store(e, std::memory_order_release);
  engines.emplace(e, std::move(engine));
  return e;
}

device_impl_t* runtime_impl_t::create_device(rank_t r,
                                             packet_pool_impl_t* pool,
                                             const attr_set_t& args)
{
  attr_set_t a = resolve_attrs(
      "device",
      {{"rank", static_cast<int64_t>(local_ranks[0])},
       {"max_progress_batch", config.at("max_progress_batch")},
       {"outbound_queue_depth", config.at("outbound_queue_depth")}},
      args);
  int64_t ar = attr_int(a, "rank");
  if (ar < 0 || !is_local(static_cast<rank_t>(ar)))
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("rank {} is not hosted by this process", ar));
  r = static_cast<rank_t>(ar);
  positive(a, "max_progress_batch");
  auto depth = static_cast<size_t>(positive(a, "outbound_queue_depth"));
  if (!pool) pool = default_pool;
  if (!pool)
    throw_fatal(errorcode_t::fatal_bad_arg,
                "device needs a packet pool and there is no default");
  uint32_t id;
  {
    std::lock_guard lock(mu);
    if (!pools.count(pool))
      throw_fatal(errorcode_t::fatal_bad_arg, "packet pool is not live");
    id = next_device_id[local_index(r)]++;
  }
  a["transport"] = attr_str(config, "transport");
  a["id"] = static_cast<int64_t>(id);
  a["eager_threshold"] =
      static_cast<int64_t>(pool->packet_size() - FRAME_HEADER_SIZE);
  auto dev = std::make_unique<device_impl_t>(*this, r, id, pool, a);
  size_t max_frame = std::max<size_t>(
      pool->packet_size(), static_cast<size_t>(attr_int(config, "packet_size")));
  for (rank_t peer = 0; peer < nranks; ++peer) {
    if (transport == transport_kind_t::loopback || peer == r)
      dev->links.push_back(make_loopback_link(fabric, r, peer, id, depth));
    else
      dev->links.push_back(
          make_tcp_link(tcp->connect_pair(peer, id), depth, max_frame));
  }
  auto* d = dev.get();
  std::lock_guard lock(mu);
  size_t hw = device_slot_hw.load();
  size_t slot = 0;
  while (slot < hw && device_slots[slot].load()) ++slot;
  if (slot == MAX_DEVICES)
    throw_fatal(errorcode_t::fatal_exhausted, "too many devices");
  device_slots[slot].store(d, std::memory_order_release);
  if (slot == hw) device_slot_hw.store(hw + 1, std::memory_order_release);
  devices.emplace(d, std::move(dev));
  return d;
}

comp_impl_t* runtime_impl_t::adopt_comp(std::unique_ptr<comp_impl_t> comp)
{
  auto* c = comp.get();
  std::lock_guard lock(mu);
  comps.emplace(c, std::move(comp));
  return c;
}

void runtime_impl_t::destroy_device(device_impl_t* d)
{
  std::unique_ptr<device_impl_t> dev;
  {
    std::lock_guard lock(mu);
    auto it = devices.find(d);
    dev = std::move(it->second);
    devices.erase(it);
    for (size_t i = 0; i < device_slot_hw.load(); ++i)
      if (device_slots[i].load() == d) device_slots[i].store(nullptr);
    for (auto& dd : default_devices)
      if (dd == d) dd = nullptr;
    for (auto it2 = mrs.begin(); it2 != mrs.end();) {
      if (it2->second->device == d)
        it2 = mrs.erase(it2);
      else
        ++it2;
    }
  }
}

void runtime_impl_t::teardown()
{
  // Unmatched contexts hold packets, so they go before the pools.
  for (auto& [p, engine] : engines)
    for (auto& store : engine->stores)
      store->drain([](const match_entry_t& e) {
        if (e.side == match_side_t::send)
          delete static_cast<arrival_ctx_t*>(e.value);
        else
          delete static_cast<recv_ctx_t*>(e.value);
      });
  for (auto& [p, dev] : devices) dev->release_all();
  for (auto& s : device_slots) s.store(nullptr);
  device_slot_hw.store(0);
  devices.clear();
  fabric.clear();
  for (auto& s : engine_slots) s.store(nullptr);
  engines.clear();
  mrs.clear();
  comps.clear();
  pools.clear();
  tcp.reset();
  default_devices.assign(default_devices.size(), nullptr);
  default_cqs.assign(default_cqs.size(), nullptr);
  default_engine = nullptr;
  default_pool = nullptr;
}

/////////////////////////////////////////////////////////////////////////////
// Lifecycle
/////////////////////////////////////////////////////////////////////////////
runtime_t runtime_init_x::call() const
{
  std::lock_guard lock(g_lifecycle_mu);
  if (g_runtime.load())
    throw_fatal(errorcode_t::fatal_in_use, "a runtime is already active");
  auto rt = std::make_unique<runtime_impl_t>(load_runtime_config(attrs_));
  g_runtime.store(rt.get(), std::memory_order_release);
  return runtime_t(rt.release());
}

void runtime_finalize_x::call() const
{
  std::lock_guard lock(g_lifecycle_mu);
  runtime_impl_t* rt = runtime_ && !runtime_->is_empty() ? runtime_->p_impl
                                                         : g_runtime.load();
  if (!rt || rt != g_runtime.load())
    throw_fatal(errorcode_t::fatal_bad_arg, "no active runtime to finalize");
  if (!force_.value_or(false)) {
    std::lock_guard rlock(rt->mu);
    for (auto& [p, dev] : rt->devices) {
      if (dev->pending_ops() || dev->queued_frames())
        throw_fatal(errorcode_t::fatal_in_use,
                    fmt::format("device {} of rank {} has {} pending "
                                "operations and {} queued frames",
                                dev->id, dev->rank, dev->pending_ops(),
                                dev->queued_frames()));
    }
  }
  g_runtime.store(nullptr, std::memory_order_release);
  delete rt;
}

runtime_t get_runtime()
{
  return runtime_t(g_runtime.load(std::memory_order_acquire));
}

census_t get_census(runtime_t runtime)
{
  census_t c;
  runtime_impl_t* rt =
      runtime.is_empty() ? g_runtime.load(std::memory_order_acquire)
                         : runtime.p_impl;
  if (!rt) return c;
  std::lock_guard lock(rt->mu);
  c.devices = rt->devices.size();
  for (auto& [p, dev] : rt->devices) {
    for (auto& l : dev->links) c.endpoints += l->is_endpoint() ? 1 : 0;
    c.pending_ops += dev->pending_ops();
    c.queued_frames += dev->queued_frames();
  }
  c.packet_pools = rt->pools.size();
  for (auto& [p, pool] : rt->pools) {
    c.packets_total += pool->capacity();
    c.packets_in_use += pool->in_use();
  }
  c.matching_engines = rt->engines.size();
  c.comps = rt->comps.size();
  c.memory_regions = rt->mrs.size();
  return c;
}

/////////////////////////////////////////////////////////////////////////////
// Allocation
/////////////////////////////////////////////////////////////////////////////
device_t alloc_device_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  packet_pool_impl_t* pool = nullptr;
  if (packet_pool_) {
    if (packet_pool_->is_empty())
      throw_fatal(errorcode_t::fatal_bad_arg, "empty packet pool handle");
    pool = packet_pool_->p_impl;
  }
  return device_t(rt.create_device(rt.local_ranks[0], pool, attrs_));
}

packet_pool_t alloc_packet_pool_x::call() const
{
  return packet_pool_t(resolve_runtime(runtime_).create_pool(attrs_));
}

matching_engine_t alloc_matching_engine_x::call() const
{
  return matching_engine_t(
      resolve_runtime(runtime_).create_engine(attrs_, custom_fn_));
}

comp_t alloc_cq_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  attr_set_t a = resolve_attrs(
      "completion queue", {{"capacity", rt.default_cq_capacity()}}, attrs_);
  auto cap = positive(a, "capacity");
  return comp_t(rt.adopt_comp(std::make_unique<cq_impl_t>(cap)));
}

comp_t alloc_sync_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  attr_set_t a =
      resolve_attrs("synchronizer", {{"threshold", int64_t{1}}}, attrs_);
  auto threshold = positive(a, "threshold");
  return comp_t(rt.adopt_comp(std::make_unique<sync_impl_t>(threshold)));
}

comp_t alloc_handler_x::call() const
{
  if (!fn_) throw_fatal(errorcode_t::fatal_bad_arg, "empty handler function");
  return comp_t(resolve_runtime(runtime_).adopt_comp(
      std::make_unique<handler_impl_t>(fn_)));
}

comp_t alloc_user_comp(std::unique_ptr<comp_impl_t> impl, runtime_t runtime)
{
  if (!impl) throw_fatal(errorcode_t::fatal_bad_arg, "null completion object");
  return comp_t(resolve_runtime(runtime).adopt_comp(std::move(impl)));
}

void free_device(device_t& device)
{
  auto& rt = resolve_runtime({});
  device_impl_t* d;
  {
    std::lock_guard lock(rt.mu);
    d = &owned(rt.devices, device.p_impl, "device");
    if (d->pending_ops() || d->queued_frames())
      throw_fatal(errorcode_t::fatal_in_use,
                  "device has pending operations or queued frames");
  }
  rt.destroy_device(d);
}

void free_packet_pool(packet_pool_t& pool)
{
  auto& rt = resolve_runtime({});
  std::lock_guard lock(rt.mu);
  auto& p = owned(rt.pools, pool.p_impl, "packet pool");
  for (auto& [dp, dev] : rt.devices)
    if (dev->pool == &p)
      throw_fatal(errorcode_t::fatal_in_use, "packet pool is used by a device");
  if (p.in_use())
    throw_fatal(errorcode_t::fatal_in_use,
                fmt::format("{} packets still in use", p.in_use()));
  if (rt.default_pool == &p) rt.default_pool = nullptr;
  rt.pools.erase(&p);
}

void free_matching_engine(matching_engine_t& engine)
{
  auto& rt = resolve_runtime({});
  std::lock_guard lock(rt.mu);
  auto& e = owned(rt.engines, engine.p_impl, "matching engine");
  for (auto& s : e.stores) {
    auto c = s->census();
    if (c.pending_sends || c.pending_recvs)
      throw_fatal(errorcode_t::fatal_in_use,
                  "matching engine still holds entries");
  }
  rt.engine_slots[e.id].store(nullptr, std::memory_order_release);
  if (rt.default_engine == &e) rt.default_engine = nullptr;
  rt.engines.erase(&e);
}

void free_comp(comp_t& comp)
{
  auto& rt = resolve_runtime({});
  std::lock_guard lock(rt.mu);
  auto& c = owned(rt.comps, comp.p_impl, "completion");
  for (auto& dc : rt.default_cqs)
    if (dc == &c) dc = nullptr;
  rt.comps.erase(&c);
}

/////////////////////////////////////////////////////////////////////////////
// Completion checking
/////////////////////////////////////////////////////////////////////////////
namespace
{
template <typename T>
T& comp_as(comp_t comp, const char* what)
{
  auto* c = comp.is_empty() ? nullptr : dynamic_cast<T*>(comp.p_impl);
  if (!c)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("completion handle is not a {}", what));
  return *c;
}
}  // namespace

void comp_signal(comp_t comp, status_t status)
{
  if (comp.is_empty())
    throw_fatal(errorcode_t::fatal_bad_arg, "empty completion handle");
  comp.p_impl->signal(std::move(status));
}

std::optional<status_t> cq_pop(comp_t cq)
{
  return comp_as<cq_impl_t>(cq, "completion queue").pop();
}

bool sync_test(comp_t sync)
{
  return comp_as<sync_impl_t>(sync, "synchronizer").test();
}

std::vector<status_t> sync_wait(comp_t sync,
                                const std::function<void()>& progress_hook)
{
  return comp_as<sync_impl_t>(sync, "synchronizer").wait(progress_hook);
}

/////////////////////////////////////////////////////////////////////////////
// Remote completion handles and memory registration
/////////////////////////////////////////////////////////////////////////////
rcomp_t register_rcomp_x::call() const
{
  if (comp_.is_empty())
    throw_fatal(errorcode_t::fatal_bad_arg, "empty completion handle");
  return resolve_runtime(runtime_).rcomps.add(
      comp_.p_impl, path_.value_or(rcomp_path_t::imm));
}

void deregister_rcomp(rcomp_t handle, runtime_t runtime)
{
  resolve_runtime(runtime).rcomps.remove(handle);
}

mr_t register_memory_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  if (!base_ && length_ > 0)
    throw_fatal(errorcode_t::fatal_bad_arg, "null region with nonzero length");
  auto mr = std::make_unique<mr_impl_t>();
  mr->device = &dev;
  mr->base = static_cast<std::byte*>(base_);
  mr->length = length_;
  mr->rkey = rt.next_rkey.fetch_add(1, std::memory_order_relaxed);
  auto* m = mr.get();
  std::lock_guard lock(rt.mu);
  dev.add_mr(m);
  rt.mrs.emplace(m, std::move(mr));
  return mr_t(m);
}

void deregister_memory(mr_t& mr)
{
  auto& rt = resolve_runtime({});
  std::lock_guard lock(rt.mu);
  auto& m = owned(rt.mrs, mr.p_impl, "memory region");
  if (m.inflight.load(std::memory_order_acquire) > 0)
    throw_fatal(errorcode_t::fatal_in_use,
                "memory region is being accessed remotely");
  m.device->remove_mr(&m);
  rt.mrs.erase(&m);
}

/////////////////////////////////////////////////////////////////////////////
// Handle accessors
/////////////////////////////////////////////////////////////////////////////
int64_t packet_pool_t::get_attr_packet_size() const
{
  return static_cast<int64_t>(p_impl->packet_size());
}
int64_t packet_pool_t::get_attr_packet_count() const
{
  return static_cast<int64_t>(p_impl->capacity());
}
attr_value_t packet_pool_t::get_attr(const std::string& name) const
{
  attr_set_t a = {{"packet_size", get_attr_packet_size()},
                  {"packet_count", get_attr_packet_count()}};
  return find_attr(a, name, "packet pool");
}

std::string device_t::get_attr_transport() const
{
  return attr_str(p_impl->attrs, "transport");
}
int64_t device_t::get_attr_rank() const { return p_impl->rank; }
int64_t device_t::get_attr_id() const { return p_impl->id; }
int64_t device_t::get_attr_max_progress_batch() const
{
  return static_cast<int64_t>(p_impl->batch);
}
int64_t device_t::get_attr_outbound_queue_depth() const
{
  return static_cast<int64_t>(p_impl->depth);
}
int64_t device_t::get_attr_eager_threshold() const
{
  return static_cast<int64_t>(p_impl->eager_threshold);
}
attr_value_t device_t::get_attr(const std::string& name) const
{
  return find_attr(p_impl->attrs, name, "device");
}
packet_pool_t device_t::get_packet_pool() const
{
  return packet_pool_t(p_impl->pool);
}

std::string matching_engine_t::get_attr_kind() const
{
  return matching_engine_kind_str(p_impl->kind);
}
std::string matching_engine_t::get_attr_policy() const
{
  return match_policy_str(p_impl->policy.kind());
}
int64_t matching_engine_t::get_attr_id() const { return p_impl->id; }
attr_value_t matching_engine_t::get_attr(const std::string& name) const
{
  return find_attr(p_impl->attrs, name, "matching engine");
}
match_census_t matching_engine_t::census(rank_t rank) const
{
  return p_impl->store(rank).census();
}

comp_kind_t comp_t::kind() const { return p_impl->kind(); }
int64_t comp_t::get_attr_capacity() const
{
  return static_cast<int64_t>(comp_as<cq_impl_t>(*this, "completion queue")
                                  .capacity());
}
int64_t comp_t::get_attr_threshold() const
{
  return static_cast<int64_t>(
      comp_as<sync_impl_t>(*this, "synchronizer").threshold());
}
attr_value_t comp_t::get_attr(const std::string& name) const
{
  if (name == "kind") return std::string(comp_kind_str(kind()));
  if (name == "capacity" && kind() == comp_kind_t::cq)
    return get_attr_capacity();
  if (name == "threshold" && kind() == comp_kind_t::sync)
    return get_attr_threshold();
  throw_fatal(errorcode_t::fatal_bad_arg,
              fmt::format("completion object has no attribute '{}'", name));
}

rkey_t mr_t::get_rkey() const { return p_impl->rkey; }
void* mr_t::get_base() const { return p_impl->base; }
size_t mr_t::get_length() const { return p_impl->length; }

rank_t runtime_t::get_rank() const { return p_impl->rank; }
rank_t runtime_t::get_nranks() const { return p_impl->nranks; }
std::vector<rank_t> runtime_t::get_local_ranks() const
{
  return p_impl->local_ranks;
}
std::string runtime_t::get_attr_transport() const
{
  return attr_str(p_impl->config, "transport");
}
int64_t runtime_t::get_attr_packet_size() const
{
  return attr_int(p_impl->config, "packet_size");
}
int64_t runtime_t::get_attr_packet_count() const
{
  return attr_int(p_impl->config, "packet_count");
}
int64_t runtime_t::get_attr_cq_capacity() const
{
  return attr_int(p_impl->config, "cq_capacity");
}
bool runtime_t::get_attr_alloc_default_resources() const
{
  return attr_bool(p_impl->config, "alloc_default_resources");
}
attr_value_t runtime_t::get_attr(const std::string& name) const
{
  return find_attr(p_impl->config, name, "runtime");
}
device_t runtime_t::get_default_device(std::optional<rank_t> rank) const
{
  return device_t(
      p_impl->default_devices[p_impl->local_index(rank.value_or(p_impl->rank))]);
}
comp_t runtime_t::get_default_cq(std::optional<rank_t> rank) const
{
  return comp_t(
      p_impl->default_cqs[p_impl->local_index(rank.value_or(p_impl->rank))]);
}
matching_engine_t runtime_t::get_default_matching_engine() const
{
  return matching_engine_t(p_impl->default_engine);
}
packet_pool_t runtime_t::get_default_packet_pool() const
{
  return packet_pool_t(p_impl->default_pool);
}

}  // namespace lcomm
