// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include "internal.hpp"

namespace lcomm
{
namespace
{
// Control payloads are little-endian u64 words.
template <size_t N>
struct words_t {
  std::array<std::byte, N * 8> bytes;
  explicit words_t(std::array<uint64_t, N> w)
  {
    for (size_t i = 0; i < N; ++i) store_le<uint64_t>(bytes.data() + 8 * i, w[i]);
  }
  std::span<const std::byte> span() const { return bytes; }
};

uint64_t word_at(std::span<const std::byte> payload, size_t i)
{
  if (payload.size() < 8 * (i + 1))
    throw_fatal(errorcode_t::fatal_transport, "short control payload");
  return load_le<uint64_t>(payload.data() + 8 * i);
}
}  // namespace

device_impl_t::device_impl_t(runtime_impl_t& rt, rank_t rank_, uint32_t id_,
                             packet_pool_impl_t* pool_, attr_set_t attrs_)
    : runtime(rt), rank(rank_), id(id_), pool(pool_), attrs(std::move(attrs_)),
      batch(static_cast<size_t>(attr_int(attrs, "max_progress_batch"))),
      depth(static_cast<size_t>(attr_int(attrs, "outbound_queue_depth"))),
      eager_threshold(pool_->packet_size() - FRAME_HEADER_SIZE)
{
}

device_impl_t::~device_impl_t() { release_all(); }

link_t& device_impl_t::link(rank_t peer)
{
  if (peer >= links.size())
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("rank {} out of range [0, {})", peer,
                            links.size()));
  return *links[peer];
}

/////////////////////////////////////////////////////////////////////////////
// Progress
/////////////////////////////////////////////////////////////////////////////
bool device_impl_t::progress()
{
  bool did = flush_backlog();
  for (auto& l : links) did |= l->flush();
  size_t budget = batch;
  size_t n = links.size();
  size_t start = poll_cursor_.fetch_add(1, std::memory_order_relaxed);
  for (size_t i = 0; i < n && budget > 0; ++i)
    did |= links[(start + i) % n]->poll(*this, budget);
  did |= advance_jobs();
  return did;
}

void device_impl_t::send_control(rank_t peer, const frame_header_t& header,
                                  std::span<const std::byte> payload)
{
  out_frame_t f = make_small_frame(header, payload);
  if (backlog_size_.load(std::memory_order_acquire) == 0 &&
      link(peer).push(f, false) != push_result_t::full)
    return;
  std::lock_guard lock(backlog_mu_);
  backlog_.emplace_back(peer, std::move(f));
  backlog_size_.fetch_add(1, std::memory_order_release);
}

bool device_impl_t::flush_backlog()
{
  if (backlog_size_.load(std::memory_order_acquire) == 0) return false;
  std::unique_lock lock(backlog_mu_, std::try_to_lock);
  if (!lock.owns_lock()) return false;
  bool did = false;
  while (!backlog_.empty()) {
    auto& [peer, f] = backlog_.front();
    if (link(peer).push(f, false) == push_result_t::full) break;
    backlog_.pop_front();
    backlog_size_.fetch_sub(1, std::memory_order_release);
    did = true;
  }
  return did;
}

void device_impl_t::enqueue_job(stream_job_t job)
{
  std::lock_guard lock(jobs_mu_);
  jobs_.push_back(std::move(job));
  jobs_active_.fetch_add(1, std::memory_order_release);
}

bool device_impl_t::advance_jobs()
{
  if (jobs_active_.load(std::memory_order_acquire) == 0) return false;
  bool did = false;
  // One pass over the jobs present now; each is owned by one thread while
  // it runs so its chunks leave in order.
  size_t n;
  {
    std::lock_guard lock(jobs_mu_);
    n = jobs_.size();
  }
  for (size_t i = 0; i < n; ++i) {
    stream_job_t job;
    {
      std::lock_guard lock(jobs_mu_);
      if (jobs_.empty()) break;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    size_t before = job.sent;
    bool was_emitted = job.emitted;
    bool finished = run_job(job);
    did |= job.sent != before || job.emitted != was_emitted;
    if (finished) {
      jobs_active_.fetch_sub(1, std::memory_order_release);
      if (job.on_handoff) job.on_handoff();
    } else {
      std::lock_guard lock(jobs_mu_);
      jobs_.push_back(std::move(job));
    }
  }
  return did;
}

bool device_impl_t::run_job(stream_job_t& job)
{
  size_t prefix = job.rma_prefix ? RMA_PREFIX_SIZE : 0;
  size_t cap = pool->packet_size() - FRAME_HEADER_SIZE - prefix;
  link_t& l = link(job.peer);
  for (size_t chunks = 0; !job.finished() && chunks < batch; ++chunks) {
    packet_t p = pool->alloc();
    if (!p) return false;
    size_t n = std::min(cap, job.total - job.sent);
    frame_header_t h;
    h.opcode = job.opcode;
    h.src_rank = rank;
    h.xfer_id = job.xfer_id;
    words_t<2> rma({job.rkey, job.base_offset + job.sent});
    std::span<const std::byte> pre;
    if (job.rma_prefix)
      pre = rma.span();
    else
      h.tag = job.sent;  // offset of this chunk within the transfer
    out_frame_t f = make_packet_frame(owned_packet_t(p), h, pre,
                                      {job.src + job.sent, n});
    if (l.push(f, true) == push_result_t::full) return false;
    job.sent += n;
    job.emitted = true;
  }
  return job.finished();
}

/////////////////////////////////////////////////////////////////////////////
// Bookkeeping
/////////////////////////////////////////////////////////////////////////////
void device_impl_t::add_op(uint64_t xfer_id, pending_op_t* op)
{
  std::lock_guard lock(ops_mu_);
  ops_.emplace(xfer_id, op);
}

pending_op_t* device_impl_t::find_op(uint64_t xfer_id)
{
  std::lock_guard lock(ops_mu_);
  auto it = ops_.find(xfer_id);
  if (it == ops_.end())
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("reply for unknown transfer {}", xfer_id));
  return it->second;
}

pending_op_t* device_impl_t::take_op(uint64_t xfer_id)
{
  std::lock_guard lock(ops_mu_);
  auto it = ops_.find(xfer_id);
  if (it == ops_.end())
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("reply for unknown transfer {}", xfer_id));
  auto* op = it->second;
  ops_.erase(it);
  return op;
}

void device_impl_t::complete(device_impl_t* owner, comp_impl_t* comp,
                             status_t status)
{
  // Counted first so a waiter that sees the record also sees the count.
  if (owner) owner->note_completed();
  comp->signal(std::move(status));
}

size_t device_impl_t::pending_ops() const
{
  auto posted = posted_.load(std::memory_order_acquire);
  auto completed = completed_.load(std::memory_order_acquire);
  return posted > completed ? static_cast<size_t>(posted - completed) : 0;
}

size_t device_impl_t::queued_frames() const
{
  size_t n = backlog_size_.load(std::memory_order_relaxed) +
             jobs_active_.load(std::memory_order_relaxed);
  for (const auto& l : links) n += l->queued_frames();
  return n;
}

void device_impl_t::add_mr(mr_impl_t* mr)
{
  std::unique_lock lock(mr_mu_);
  mrs_.emplace(mr->rkey, mr);
}

void device_impl_t::remove_mr(mr_impl_t* mr)
{
  std::unique_lock lock(mr_mu_);
  mrs_.erase(mr->rkey);
}

size_t device_impl_t::mr_count() const
{
  std::shared_lock lock(mr_mu_);
  return mrs_.size();
}

mr_impl_t* device_impl_t::acquire_region(rkey_t rkey, uint64_t offset,
                                         size_t length)
{
  std::shared_lock lock(mr_mu_);
  auto it = mrs_.find(rkey);
  if (it == mrs_.end())
    throw_fatal(errorcode_t::fatal_bad_rkey,
                fmt::format("rank {} has no region with rkey {}", rank, rkey));
  mr_impl_t* mr = it->second;
  if (offset > mr->length || length > mr->length - offset)
    throw_fatal(errorcode_t::fatal_oob,
                fmt::format("access [{}, +{}) outside region of {} bytes",
                            offset, length, mr->length));
  mr->inflight.fetch_add(1, std::memory_order_acq_rel);
  return mr;
}

void device_impl_t::release_all()
{
  {
    std::lock_guard lock(jobs_mu_);
    jobs_.clear();
    jobs_active_.store(0);
  }
  {
    std::lock_guard lock(backlog_mu_);
    backlog_.clear();
    backlog_size_.store(0);
  }
  {
    std::lock_guard lock(ops_mu_);
    for (auto& [id, op] : ops_) delete op;
    ops_.clear();
  }
  {
    std::lock_guard lock(rndv_mu_);
    for (auto& [id, st] : rndv_) delete st;
    rndv_.clear();
  }
  links.clear();
}

/////////////////////////////////////////////////////////////////////////////
// Inbound frames
/////////////////////////////////////////////////////////////////////////////
bool device_impl_t::handle_frame(inbound_frame_t& f)
{
  if (f.header.src_rank >= runtime.nranks)
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("frame from unknown rank {}", f.header.src_rank));
  switch (f.header.opcode) {
    case opcode_t::eager_send:
      return on_eager_send(f);
    case opcode_t::eager_am:
      return on_eager_am(f);
    case opcode_t::rts:
      on_rts(f);
      return true;
    case opcode_t::cts:
      on_cts(f);
      return true;
    case opcode_t::rndv_data:
      on_rndv_data(f);
      return true;
    case opcode_t::put:
      on_put(f);
      return true;
    case opcode_t::put_ack:
      on_put_ack(f);
      return true;
    case opcode_t::get_req:
      on_get_req(f);
      return true;
    case opcode_t::get_rep:
      on_get_rep(f);
      return true;
  }
  throw_fatal(errorcode_t::fatal_transport, "unknown opcode");
}

bool device_impl_t::retain_packet(inbound_frame_t& f, owned_packet_t& out)
{
  if (f.packet) {
    out = std::move(f.packet);
    return true;
  }
  packet_t p = pool->alloc();
  if (!p) return false;
  if (f.bytes.size() > pool->packet_size()) {
    pool->free(p);
    throw_fatal(errorcode_t::fatal_transport, "frame larger than packet");
  }
  std::memcpy(p.data, f.bytes.data(), f.bytes.size());
  out = owned_packet_t(p);
  return true;
}

void device_impl_t::match_arrival(arrival_ctx_t* arrival, rcomp_t handle)
{
  auto* engine = runtime.engine_by_id(handle >> 3);
  auto policy_kind = static_cast<match_policy_kind_t>(handle & 7);
  match_key_t key =
      policy_kind == match_policy_kind_t::custom
          ? make_match_key(arrival->src, arrival->tag, engine->policy)
          : make_match_key(arrival->src, arrival->tag,
                           match_policy_t(policy_kind));
  auto hit = engine->store(rank).insert(key, match_side_t::send, arrival);
  if (!hit) return;
  auto* recv = static_cast<recv_ctx_t*>(hit->value);
  comp_impl_t* comp = recv->comp;
  device_impl_t* owner = recv->device;
  if (auto st = deliver_recv(recv, arrival)) complete(owner, comp, *st);
}

std::optional<status_t> device_impl_t::deliver_recv(recv_ctx_t* recv,
                                                    arrival_ctx_t* arrival)
{
  std::unique_ptr<recv_ctx_t> r(recv);
  std::unique_ptr<arrival_ctx_t> a(arrival);
  if (a->size > r->size)
    throw_fatal(errorcode_t::fatal_truncate,
                fmt::format("{}-byte message from rank {} tag {} into {}-byte "
                            "receive buffer",
                            a->size, a->src, a->tag, r->size));
  status_t st;
  st.op = op_kind_t::recv;
  st.rank = a->src;
  st.tag = a->tag;
  st.buffer = {r->buffer, a->size, r->mr};
  st.user_context = r->user_context;
  if (!a->rendezvous) {
    if (a->size) std::memcpy(r->buffer, a->data(), a->size);
    return st;
  }
  auto* state = new rndv_recv_t;
  state->buffer = r->buffer;
  state->total = a->size;
  state->comp = r->comp;
  state->status = std::move(st);
  state->posted_on = r->device;
  a->device->start_rndv_recv(a->src, a->sender_xfer, state);
  return std::nullopt;
}

bool device_impl_t::on_eager_send(inbound_frame_t& f)
{
  auto meta = get_frame_meta(f.header);
  auto arrival = std::make_unique<arrival_ctx_t>();
  if (!retain_packet(f, arrival->packet)) return false;
  arrival->src = f.header.src_rank;
  arrival->tag = meta.tag;
  arrival->size = f.header.payload_len;
  arrival->device = this;
  match_arrival(arrival.release(), meta.rcomp);
  return true;
}

bool device_impl_t::on_eager_am(inbound_frame_t& f)
{
  auto meta = get_frame_meta(f.header);
  comp_impl_t* comp = runtime.rcomps.lookup(meta.rcomp);
  owned_packet_t pkt;
  if (!retain_packet(f, pkt)) return false;
  std::byte* data = pkt.data() + FRAME_HEADER_SIZE;
  status_t st;
  st.op = op_kind_t::am_recv;
  st.rank = f.header.src_rank;
  st.tag = meta.tag;
  st.rcomp = meta.rcomp;
  st.buffer = {data, f.header.payload_len, nullptr};
  // The packet goes back to its pool once the user drops the status.
  st.data_owner = std::shared_ptr<void>(
      data, [p = pkt.release()](void*) mutable { p.pool->free(p); });
  comp->signal(std::move(st));
  return true;
}

void device_impl_t::on_rts(inbound_frame_t& f)
{
  auto meta = get_frame_meta(f.header);
  size_t total = word_at(f.payload(), 0);
  if (f.header.flags & frame_flag::active_message) {
    comp_impl_t* comp = runtime.rcomps.lookup(meta.rcomp);
    std::shared_ptr<std::byte[]> buf(new std::byte[total]);
    auto* state = new rndv_recv_t;
    state->buffer = buf.get();
    state->total = total;
    state->comp = comp;
    state->status.op = op_kind_t::am_recv;
    state->status.rank = f.header.src_rank;
    state->status.tag = meta.tag;
    state->status.rcomp = meta.rcomp;
    state->status.buffer = {buf.get(), total, nullptr};
    state->status.data_owner = std::move(buf);
    start_rndv_recv(f.header.src_rank, f.header.xfer_id, state);
    return;
  }
  auto* arrival = new arrival_ctx_t;
  arrival->src = f.header.src_rank;
  arrival->tag = meta.tag;
  arrival->rendezvous = true;
  arrival->size = total;
  arrival->sender_xfer = f.header.xfer_id;
  arrival->device = this;
  match_arrival(arrival, meta.rcomp);
}

void device_impl_t::start_rndv_recv(rank_t sender, uint64_t sender_xfer,
                                    rndv_recv_t* state)
{
  uint64_t rx = next_xfer_id();
  {
    std::lock_guard lock(rndv_mu_);
    rndv_.emplace(rx, state);
  }
  frame_header_t h;
  h.opcode = opcode_t::cts;
  h.src_rank = rank;
  h.xfer_id = sender_xfer;
  send_control(sender, h, words_t<1>({rx}).span());
}

void device_impl_t::on_cts(inbound_frame_t& f)
{
  pending_op_t* op = take_op(f.header.xfer_id);
  stream_job_t job;
  job.peer = f.header.src_rank;
  job.opcode = opcode_t::rndv_data;
  job.xfer_id = word_at(f.payload(), 0);
  job.src = op->buffer;
  job.total = op->size;
  job.on_handoff = [op] {
    std::unique_ptr<pending_op_t> owned(op);
    complete(op->device, op->comp, std::move(op->status));
  };
  enqueue_job(std::move(job));
}

void device_impl_t::on_rndv_data(inbound_frame_t& f)
{
  rndv_recv_t* state;
  {
    std::lock_guard lock(rndv_mu_);
    auto it = rndv_.find(f.header.xfer_id);
    if (it == rndv_.end())
      throw_fatal(errorcode_t::fatal_transport,
                  fmt::format("data for unknown transfer {}",
                              f.header.xfer_id));
    state = it->second;
  }
  auto data = f.payload();
  uint64_t offset = f.header.tag;
  if (offset > state->total || data.size() > state->total - offset)
    throw_fatal(errorcode_t::fatal_transport, "rendezvous chunk out of range");
  std::memcpy(state->buffer + offset, data.data(), data.size());
  size_t done = state->bytes_done.fetch_add(data.size(),
                                            std::memory_order_acq_rel) +
                data.size();
  if (done < state->total) return;
  {
    std::lock_guard lock(rndv_mu_);
    rndv_.erase(f.header.xfer_id);
  }
  std::unique_ptr<rndv_recv_t> owned(state);
  complete(state->posted_on, state->comp, std::move(state->status));
}

void device_impl_t::on_put(inbound_frame_t& f)
{
  auto payload = f.payload();
  if (payload.size() < RMA_PREFIX_SIZE)
    throw_fatal(errorcode_t::fatal_transport, "short put frame");
  rkey_t rkey = load_le<uint64_t>(payload.data());
  uint64_t offset = load_le<uint64_t>(payload.data() + 8);
  auto data = payload.subspan(RMA_PREFIX_SIZE);
  mr_impl_t* mr = acquire_region(rkey, offset, data.size());
  if (!data.empty()) std::memcpy(mr->base + offset, data.data(), data.size());
  mr->inflight.fetch_sub(1, std::memory_order_acq_rel);
  auto meta = get_frame_meta(f.header);
  if (meta.valid) {
    comp_impl_t* comp = runtime.rcomps.lookup(meta.rcomp);
    status_t st;
    st.op = op_kind_t::put_signal;
    st.rank = f.header.src_rank;
    st.tag = meta.tag;
    st.rcomp = meta.rcomp;
    st.buffer = {mr->base + offset, data.size(), mr};
    comp->signal(std::move(st));
  }
  frame_header_t h;
  h.opcode = opcode_t::put_ack;
  h.src_rank = rank;
  h.xfer_id = f.header.xfer_id;
  send_control(f.header.src_rank, h, {});
}

void device_impl_t::on_put_ack(inbound_frame_t& f)
{
  pending_op_t* op = find_op(f.header.xfer_id);
  // Copy out what the signal frame needs: once acks_pending drops, the
  // final ack may retire the op on another thread.
  bool signal = op->signal_after_data;
  frame_header_t sig = op->signal_header;
  rank_t peer = op->peer;
  words_t<2> prefix({op->rkey, op->offset});
  uint64_t left =
      op->acks_pending.fetch_sub(1, std::memory_order_acq_rel) - 1;
  if (left == 0) {
    take_op(f.header.xfer_id);
    std::unique_ptr<pending_op_t> owned(op);
    complete(op->device, op->comp, std::move(op->status));
  } else if (left == 1 && signal) {
    // All data acknowledged and visible; the zero-length signal goes last.
    send_control(peer, sig, prefix.span());
  }
}

void device_impl_t::on_get_req(inbound_frame_t& f)
{
  auto payload = f.payload();
  rkey_t rkey = word_at(payload, 0);
  uint64_t offset = word_at(payload, 1);
  size_t length = word_at(payload, 2);
  mr_impl_t* mr = acquire_region(rkey, offset, length);
  auto meta = get_frame_meta(f.header);
  stream_job_t job;
  job.peer = f.header.src_rank;
  job.opcode = opcode_t::get_rep;
  job.xfer_id = f.header.xfer_id;
  job.src = mr->base + offset;
  job.total = length;
  comp_impl_t* comp =
      meta.valid ? runtime.rcomps.lookup(meta.rcomp) : nullptr;
  job.on_handoff = [mr, comp, meta, offset, length,
                    src = f.header.src_rank] {
    mr->inflight.fetch_sub(1, std::memory_order_acq_rel);
    if (!comp) return;
    status_t st;
    st.op = op_kind_t::get;
    st.rank = src;
    st.tag = meta.tag;
    st.rcomp = meta.rcomp;
    st.buffer = {mr->base + offset, length, mr};
    comp->signal(std::move(st));
  };
  enqueue_job(std::move(job));
}

void device_impl_t::on_get_rep(inbound_frame_t& f)
{
  pending_op_t* op = find_op(f.header.xfer_id);
  auto data = f.payload();
  uint64_t offset = f.header.tag;
  if (offset > op->size || data.size() > op->size - offset)
    throw_fatal(errorcode_t::fatal_transport, "get reply out of range");
  if (!data.empty()) std::memcpy(op->buffer + offset, data.data(), data.size());
  size_t done =
      op->bytes_done.fetch_add(data.size(), std::memory_order_acq_rel) +
      data.size();
  if (done < op->size) return;
  take_op(f.header.xfer_id);
  std::unique_ptr<pending_op_t> owned(op);
  complete(op->device, op->comp, std::move(op->status));
}

}  // namespace lcomm
