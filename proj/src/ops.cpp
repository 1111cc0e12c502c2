// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include "internal.hpp"

namespace lcomm
{
const char* post_state_str(post_state_t state)
{
  switch (state) {
    case post_state_t::done:
      return "done";
    case post_state_t::posted:
      return "posted";
    case post_state_t::retry:
      return "retry";
  }
  return "unknown";
}

namespace
{
post_result_t retry() { return {post_state_t::retry, {}}; }
post_result_t posted() { return {post_state_t::posted, {}}; }
post_result_t done(status_t st) { return {post_state_t::done, std::move(st)}; }

comp_impl_t* resolve_comp(runtime_impl_t& rt, device_impl_t& dev,
                          const std::optional<comp_t>& comp)
{
  if (comp) {
    if (comp->is_empty())
      throw_fatal(errorcode_t::fatal_bad_arg, "empty completion handle");
    return comp->p_impl;
  }
  comp_impl_t* c = rt.default_cqs.empty()
                       ? nullptr
                       : rt.default_cqs[rt.local_index(dev.rank)];
  if (!c)
    throw_fatal(errorcode_t::fatal_bad_arg,
                "no completion object given and no default completion queue");
  return c;
}

matching_engine_impl_t& resolve_engine(
    runtime_impl_t& rt, const std::optional<matching_engine_t>& engine)
{
  if (engine) {
    if (engine->is_empty())
      throw_fatal(errorcode_t::fatal_bad_arg, "empty matching engine handle");
    return *engine->p_impl;
  }
  if (!rt.default_engine)
    throw_fatal(errorcode_t::fatal_bad_arg, "no default matching engine");
  return *rt.default_engine;
}

match_policy_t resolve_policy(const matching_engine_impl_t& engine,
                              const std::optional<match_policy_t>& policy)
{
  if (!policy) return engine.policy;
  if (policy->kind() == match_policy_kind_t::custom) {
    // Receivers only know the engine's function, so both must agree.
    if (engine.policy.kind() != match_policy_kind_t::custom)
      throw_fatal(errorcode_t::fatal_bad_arg,
                  "custom matching policy needs an engine allocated with it");
    return engine.policy;
  }
  return *policy;
}

void check_peer(const runtime_impl_t& rt, rank_t rank)
{
  if (rank >= rt.nranks)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("rank {} out of range [0, {})", rank, rt.nranks));
}

void check_buffer(const void* buffer, size_t size)
{
  if (!buffer && size > 0)
    throw_fatal(errorcode_t::fatal_bad_arg, "null buffer with nonzero size");
}

template <size_t N>
std::array<std::byte, N * 8> le_words(std::array<uint64_t, N> w)
{
  std::array<std::byte, N * 8> out;
  for (size_t i = 0; i < N; ++i) store_le<uint64_t>(out.data() + 8 * i, w[i]);
  return out;
}

// Pushes a frame carrying a user operation. Loopback handoff completes
// the operation inside the call; TCP may leave it queued, in which case
// the link signals `comp` when the bytes reach the socket.
post_result_t push_user_frame(device_impl_t& dev, rank_t peer, out_frame_t f,
                              comp_impl_t* comp, status_t st)
{
  link_t& l = dev.link(peer);
  if (l.completes_on_push()) {
    if (l.push(f, true) == push_result_t::full) return retry();
    return done(std::move(st));
  }
  f.on_wire = std::make_unique<wire_completion_t>(
      wire_completion_t{comp, st, &dev});
  dev.note_posted();
  switch (l.push(f, true)) {
    case push_result_t::full:
      dev.unnote_posted();
      return retry();
    case push_result_t::handed_off:
      dev.unnote_posted();
      return done(std::move(st));
    case push_result_t::queued:
      break;
  }
  return posted();
}

// Registers a sender-side op, then pushes its first control frame.
post_result_t push_tracked(device_impl_t& dev, rank_t peer,
                           std::unique_ptr<pending_op_t> op, uint64_t xfer,
                           out_frame_t f)
{
  dev.note_posted();
  dev.add_op(xfer, op.release());
  if (dev.link(peer).push(f, true) == push_result_t::full) {
    delete dev.take_op(xfer);
    dev.unnote_posted();
    return retry();
  }
  return posted();
}

owned_packet_t alloc_packet(device_impl_t& dev)
{
  return owned_packet_t(dev.pool->alloc());
}

std::span<const std::byte> bytes_of(const void* p, size_t n)
{
  return {static_cast<const std::byte*>(p), n};
}

const mr_impl_t* mr_of(const std::optional<mr_t>& mr)
{
  return mr ? mr->p_impl : nullptr;
}
}  // namespace

runtime_impl_t& resolve_runtime(const std::optional<runtime_t>& rt)
{
  if (rt && !rt->is_empty()) return *rt->p_impl;
  runtime_t g = get_runtime();
  if (g.is_empty()) throw_fatal(errorcode_t::fatal_bad_arg, "no active runtime");
  return *g.p_impl;
}

device_impl_t& resolve_device(runtime_impl_t& rt,
                              const std::optional<device_t>& device)
{
  if (device) {
    if (device->is_empty())
      throw_fatal(errorcode_t::fatal_bad_arg, "empty device handle");
    return *device->p_impl;
  }
  device_impl_t* d =
      rt.default_devices.empty() ? nullptr : rt.default_devices[0];
  if (!d) throw_fatal(errorcode_t::fatal_bad_arg, "no default device");
  return *d;
}

/////////////////////////////////////////////////////////////////////////////
// Send / receive
/////////////////////////////////////////////////////////////////////////////
post_result_t post_send_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  comp_impl_t* comp = resolve_comp(rt, dev, comp_);
  auto& engine = resolve_engine(rt, matching_engine_);
  match_policy_t policy = resolve_policy(engine, matching_policy_);
  check_peer(rt, rank_);
  check_buffer(buffer_, size_);
  if (tag_ == ANY_TAG)
    throw_fatal(errorcode_t::fatal_bad_arg, "send tag cannot be a wildcard");
  rcomp_t handle = engine.wire_handle(policy.kind());

  status_t st;
  st.op = op_kind_t::send;
  st.rank = rank_;
  st.tag = tag_;
  st.buffer = {const_cast<void*>(buffer_), size_, mr_of(mr_)};
  st.user_context = user_context_.value_or(nullptr);

  frame_header_t h;
  h.src_rank = dev.rank;
  set_frame_meta(h, tag_, handle, true);
  if (size_ <= dev.eager_threshold) {
    owned_packet_t p = alloc_packet(dev);
    if (!p) return retry();
    h.opcode = opcode_t::eager_send;
    return push_user_frame(
        dev, rank_, make_packet_frame(std::move(p), h, {}, bytes_of(buffer_, size_)),
        comp, std::move(st));
  }
  auto op = std::make_unique<pending_op_t>();
  op->op = op_kind_t::send;
  op->device = &dev;
  op->comp = comp;
  op->status = std::move(st);
  op->peer = rank_;
  op->buffer = static_cast<std::byte*>(const_cast<void*>(buffer_));
  op->size = size_;
  uint64_t xfer = dev.next_xfer_id();
  h.opcode = opcode_t::rts;
  h.xfer_id = xfer;
  auto body = le_words<1>({size_});
  return push_tracked(dev, rank_, std::move(op), xfer,
                      make_small_frame(h, body));
}

post_result_t post_recv_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  comp_impl_t* comp = resolve_comp(rt, dev, comp_);
  auto& engine = resolve_engine(rt, matching_engine_);
  match_policy_t policy = resolve_policy(engine, matching_policy_);
  if (rank_ != ANY_RANK) check_peer(rt, rank_);
  check_buffer(buffer_, size_);
  if (engine.kind == matching_engine_kind_t::map &&
      ((policy.uses_rank() && rank_ == ANY_RANK) ||
       (policy.uses_tag() && tag_ == ANY_TAG)))
    throw_fatal(errorcode_t::fatal_bad_arg,
                "wildcards on a matched component need a queue engine");

  auto recv = std::make_unique<recv_ctx_t>();
  recv->buffer = static_cast<std::byte*>(buffer_);
  recv->size = size_;
  recv->comp = comp;
  recv->user_context = user_context_.value_or(nullptr);
  recv->mr = mr_of(mr_);
  recv->device = &dev;

  match_key_t key = make_match_key(rank_, tag_, policy);
  dev.note_posted();
  auto hit = engine.store(dev.rank).insert(key, match_side_t::recv, recv.get());
  if (!hit) {
    recv.release();
    return posted();
  }
  auto* arrival = static_cast<arrival_ctx_t*>(hit->value);
  if (auto st = device_impl_t::deliver_recv(recv.release(), arrival)) {
    dev.unnote_posted();
    return done(std::move(*st));
  }
  return posted();
}

/////////////////////////////////////////////////////////////////////////////
// Active messages
/////////////////////////////////////////////////////////////////////////////
post_result_t post_am_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  comp_impl_t* comp = resolve_comp(rt, dev, comp_);
  check_peer(rt, rank_);
  check_buffer(buffer_, size_);
  if (remote_comp_ == RCOMP_NULL)
    throw_fatal(errorcode_t::fatal_bad_arg, "active message needs a remote "
                                            "completion handle");
  tag_t tag = tag_.value_or(0);

  status_t st;
  st.op = op_kind_t::am_send;
  st.rank = rank_;
  st.tag = tag;
  st.rcomp = remote_comp_;
  st.buffer = {const_cast<void*>(buffer_), size_, mr_of(mr_)};
  st.user_context = user_context_.value_or(nullptr);

  frame_header_t h;
  h.src_rank = dev.rank;
  set_frame_meta(h, tag, remote_comp_, true);
  if (size_ <= dev.eager_threshold) {
    owned_packet_t p = alloc_packet(dev);
    if (!p) return retry();
    h.opcode = opcode_t::eager_am;
    return push_user_frame(
        dev, rank_, make_packet_frame(std::move(p), h, {}, bytes_of(buffer_, size_)),
        comp, std::move(st));
  }
  auto op = std::make_unique<pending_op_t>();
  op->op = op_kind_t::am_send;
  op->device = &dev;
  op->comp = comp;
  op->status = std::move(st);
  op->peer = rank_;
  op->buffer = static_cast<std::byte*>(const_cast<void*>(buffer_));
  op->size = size_;
  uint64_t xfer = dev.next_xfer_id();
  h.opcode = opcode_t::rts;
  h.flags |= frame_flag::active_message;
  h.xfer_id = xfer;
  auto body = le_words<1>({size_});
  return push_tracked(dev, rank_, std::move(op), xfer,
                      make_small_frame(h, body));
}

/////////////////////////////////////////////////////////////////////////////
// RMA
/////////////////////////////////////////////////////////////////////////////
post_result_t post_put_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  comp_impl_t* comp = resolve_comp(rt, dev, comp_);
  check_peer(rt, rank_);
  check_buffer(buffer_, size_);
  rcomp_t rcomp = remote_comp_.value_or(RCOMP_NULL);
  tag_t tag = tag_.value_or(0);
  bool signal = rcomp != RCOMP_NULL;

  auto op = std::make_unique<pending_op_t>();
  op->op = op_kind_t::put;
  op->device = &dev;
  op->comp = comp;
  op->status.op = op_kind_t::put;
  op->status.rank = rank_;
  op->status.tag = tag;
  op->status.rcomp = rcomp;
  op->status.buffer = {const_cast<void*>(buffer_), size_, mr_of(mr_)};
  op->status.user_context = user_context_.value_or(nullptr);
  op->peer = rank_;
  op->rkey = rkey_;
  op->offset = offset_;
  uint64_t xfer = dev.next_xfer_id();

  frame_header_t h;
  h.opcode = opcode_t::put;
  h.src_rank = dev.rank;
  h.xfer_id = xfer;
  set_frame_meta(h, tag, rcomp, signal);

  size_t cap = dev.pool->packet_size() - FRAME_HEADER_SIZE - RMA_PREFIX_SIZE;
  if (size_ <= cap) {
    owned_packet_t p = alloc_packet(dev);
    if (!p) return retry();
    op->acks_pending = 1;
    auto prefix = le_words<2>({rkey_, offset_});
    return push_tracked(
        dev, rank_, std::move(op), xfer,
        make_packet_frame(std::move(p), h, prefix, bytes_of(buffer_, size_)));
  }
  // Data chunks carry no signal; a zero-length signal frame follows once
  // every chunk is acknowledged.
  size_t chunks = (size_ + cap - 1) / cap;
  op->acks_pending = chunks + (signal ? 1 : 0);
  op->signal_after_data = signal;
  op->signal_header = h;
  stream_job_t job;
  job.peer = rank_;
  job.opcode = opcode_t::put;
  job.xfer_id = xfer;
  job.src = static_cast<const std::byte*>(buffer_);
  job.total = size_;
  job.rma_prefix = true;
  job.rkey = rkey_;
  job.base_offset = offset_;
  dev.note_posted();
  dev.add_op(xfer, op.release());
  dev.enqueue_job(std::move(job));
  return posted();
}

post_result_t post_get_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  auto& dev = resolve_device(rt, device_);
  comp_impl_t* comp = resolve_comp(rt, dev, comp_);
  check_peer(rt, rank_);
  check_buffer(buffer_, size_);
  rcomp_t rcomp = remote_comp_.value_or(RCOMP_NULL);
  tag_t tag = tag_.value_or(0);

  auto op = std::make_unique<pending_op_t>();
  op->op = op_kind_t::get;
  op->device = &dev;
  op->comp = comp;
  op->status.op = op_kind_t::get;
  op->status.rank = rank_;
  op->status.tag = tag;
  op->status.rcomp = rcomp;
  op->status.buffer = {buffer_, size_, mr_of(mr_)};
  op->status.user_context = user_context_.value_or(nullptr);
  op->peer = rank_;
  op->buffer = static_cast<std::byte*>(buffer_);
  op->size = size_;
  uint64_t xfer = dev.next_xfer_id();

  frame_header_t h;
  h.opcode = opcode_t::get_req;
  h.src_rank = dev.rank;
  h.xfer_id = xfer;
  set_frame_meta(h, tag, rcomp, rcomp != RCOMP_NULL);
  auto body = le_words<3>({rkey_, offset_, size_});
  return push_tracked(dev, rank_, std::move(op), xfer,
                      make_small_frame(h, body));
}

/////////////////////////////////////////////////////////////////////////////
// Progress
/////////////////////////////////////////////////////////////////////////////
bool progress_x::call() const
{
  auto& rt = resolve_runtime(runtime_);
  return resolve_device(rt, device_).progress();
}

bool progress(device_t device)
{
  if (device.is_empty())
    throw_fatal(errorcode_t::fatal_bad_arg, "empty device handle");
  return device.p_impl->progress();
}

bool progress_all(runtime_t runtime)
{
  auto& rt = resolve_runtime(runtime);
  size_t n = rt.device_slot_hw.load(std::memory_order_acquire);
  if (n == 0) return false;
  size_t start = rt.progress_cursor.fetch_add(1, std::memory_order_relaxed);
  bool did = false;
  for (size_t i = 0; i < n; ++i) {
    auto* d = rt.device_slots[(start + i) % n].load(std::memory_order_acquire);
    if (d) did |= d->progress();
  }
  return did;
}

}  // namespace lcomm
