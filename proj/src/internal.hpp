// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_INTERNAL_HPP
#define LCOMM_INTERNAL_HPP

#include <array>
#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lcomm/lcomm.hpp"

namespace lcomm
{
class device_impl_t;
class runtime_impl_t;

/////////////////////////////////////////////////////////////////////////////
// Frames in flight
/////////////////////////////////////////////////////////////////////////////
// Unique ownership of a pool packet; returns it to its pool on destruction.
class owned_packet_t
{
 public:
  owned_packet_t() = default;
  explicit owned_packet_t(packet_t p) noexcept : p_(p) {}
  owned_packet_t(owned_packet_t&& o) noexcept : p_(std::exchange(o.p_, {})) {}
  owned_packet_t& operator=(owned_packet_t&& o) noexcept
  {
    if (this != &o) {
      reset();
      p_ = std::exchange(o.p_, {});
    }
    return *this;
  }
  ~owned_packet_t() { reset(); }

  void reset()
  {
    if (p_) p_.pool->free(std::exchange(p_, {}));
  }
  packet_t release() noexcept { return std::exchange(p_, {}); }
  std::byte* data() const noexcept { return p_.data; }
  const packet_t& get() const noexcept { return p_; }
  explicit operator bool() const noexcept { return static_cast<bool>(p_); }

 private:
  packet_t p_;
};

// Control frames carry at most three u64 words.
inline constexpr size_t SMALL_FRAME_SIZE = FRAME_HEADER_SIZE + 24;

// Local completion owed once the frame leaves the process.
struct wire_completion_t {
  comp_impl_t* comp = nullptr;
  status_t status;
  device_impl_t* device = nullptr;
};

struct out_frame_t {
  owned_packet_t packet;  // serialized bytes live here when set
  std::array<std::byte, SMALL_FRAME_SIZE> small;
  uint32_t size = 0;
  std::unique_ptr<wire_completion_t> on_wire;

  std::byte* bytes() noexcept { return packet ? packet.data() : small.data(); }
};

out_frame_t make_small_frame(frame_header_t header,
                             std::span<const std::byte> payload);
out_frame_t make_packet_frame(owned_packet_t packet, frame_header_t header,
                              std::span<const std::byte> prefix,
                              std::span<const std::byte> data);

// Tag and remote handle ride in the immediate word when both fit, and in
// the wide header fields (meta_in_payload) otherwise.
inline void set_frame_meta(frame_header_t& h, tag_t tag, rcomp_t rcomp,
                           bool valid)
{
  h.tag = tag;
  if (tag <= MAX_IMM_TAG && rcomp <= MAX_IMM_RCOMP) {
    h.imm = encode_imm(tag, rcomp, valid ? 1 : 0).raw;
    h.rcomp = 0;
  } else {
    h.flags |= frame_flag::meta_in_payload;
    h.imm = 0;
    h.rcomp = rcomp;
  }
}

struct frame_meta_t {
  tag_t tag = 0;
  rcomp_t rcomp = RCOMP_NULL;
  bool valid = false;
};

inline frame_meta_t get_frame_meta(const frame_header_t& h)
{
  if (h.flags & frame_flag::meta_in_payload)
    return {h.tag, h.rcomp, h.rcomp != RCOMP_NULL};
  auto f = decode_imm(imm_data_t{h.imm});
  return {f.tag16, f.rcomp, f.kind == 1};
}

struct inbound_frame_t {
  frame_header_t header;
  std::span<const std::byte> bytes;  // header + payload
  owned_packet_t packet;             // set when bytes live in a pool packet

  std::span<const std::byte> payload() const
  {
    return bytes.subspan(FRAME_HEADER_SIZE);
  }
};

/////////////////////////////////////////////////////////////////////////////
// Links: one per (device, peer rank)
/////////////////////////////////////////////////////////////////////////////
enum class push_result_t : uint8_t { handed_off, queued, full };

class link_t
{
 public:
  virtual ~link_t() = default;
  // True when a successful push already counts as a wire handoff.
  virtual bool completes_on_push() const noexcept = 0;
  // Moves from `frame` only on success. `bounded` pushes respect the
  // outbound depth limit.
  virtual push_result_t push(out_frame_t& frame, bool bounded) = 0;
  // Outbound progress. True iff bytes moved.
  virtual bool flush() = 0;
  // Inbound progress, handling at most `budget` frames.
  virtual bool poll(device_impl_t& device, size_t& budget) = 0;
  virtual size_t queued_frames() const = 0;
  virtual bool is_endpoint() const noexcept { return true; }
};

/////////////////////////////////////////////////////////////////////////////
// Loopback fabric
/////////////////////////////////////////////////////////////////////////////
using mailbox_t = mpmc_queue_t<out_frame_t>;

// Directed in-memory queues keyed by (dst rank, device id, src rank),
// created by whichever side touches them first.
class loopback_fabric_t
{
 public:
  mailbox_t& mailbox(rank_t dst, uint32_t device_id, rank_t src,
                     size_t capacity);
  void clear();

 private:
  std::mutex mu_;
  std::map<std::tuple<rank_t, uint32_t, rank_t>, std::unique_ptr<mailbox_t>>
      boxes_;
};

std::unique_ptr<link_t> make_loopback_link(loopback_fabric_t& fabric,
                                           rank_t self, rank_t peer,
                                           uint32_t device_id,
                                           size_t depth);

/////////////////////////////////////////////////////////////////////////////
// TCP
/////////////////////////////////////////////////////////////////////////////
struct host_port_t {
  std::string host;
  uint16_t port = 0;
};

// Listener plus connection bookkeeping for full-mesh device wiring.
class tcp_bootstrap_t
{
 public:
  tcp_bootstrap_t(rank_t rank, rank_t nranks, std::vector<host_port_t> hosts,
                  int64_t timeout_ms);
  ~tcp_bootstrap_t();
  tcp_bootstrap_t(const tcp_bootstrap_t&) = delete;
  tcp_bootstrap_t& operator=(const tcp_bootstrap_t&) = delete;

  // Connected socket to `peer` dedicated to device `device_id`. The lower
  // rank connects, the higher rank accepts. Throws fatal_transport on
  // timeout.
  int connect_pair(rank_t peer, uint32_t device_id);

 private:
  int dial(rank_t peer, uint32_t device_id,
           std::chrono::steady_clock::time_point deadline);
  int await(rank_t peer, uint32_t device_id,
            std::chrono::steady_clock::time_point deadline);

  rank_t rank_;
  rank_t nranks_;
  std::vector<host_port_t> hosts_;
  int64_t timeout_ms_;
  int listen_fd_ = -1;
  std::mutex accept_mu_;
  std::map<std::pair<rank_t, uint32_t>, int> accepted_;
};

std::vector<host_port_t> parse_hosts(const std::string& spec, rank_t nranks,
                                     int64_t port_base);

std::unique_ptr<link_t> make_tcp_link(int fd, size_t depth,
                                      size_t max_frame_size);

/////////////////////////////////////////////////////////////////////////////
// Operation bookkeeping
/////////////////////////////////////////////////////////////////////////////
// Posted receive stored in a matching engine.
struct recv_ctx_t {
  std::byte* buffer = nullptr;
  size_t size = 0;
  comp_impl_t* comp = nullptr;
  void* user_context = nullptr;
  const mr_impl_t* mr = nullptr;
  device_impl_t* device = nullptr;  // posting device
};

// Unexpected send stored in a matching engine.
struct arrival_ctx_t {
  rank_t src = 0;
  tag_t tag = 0;
  bool rendezvous = false;
  owned_packet_t packet;  // eager payload
  size_t size = 0;
  uint64_t sender_xfer = 0;
  device_impl_t* device = nullptr;  // device the frame arrived on

  const std::byte* data() const
  {
    return packet.data() + FRAME_HEADER_SIZE;
  }
};

// Sender-side operation waiting for a reply frame (CTS, PUT_ACK, GET_REP).
struct pending_op_t {
  op_kind_t op = op_kind_t::send;
  device_impl_t* device = nullptr;
  comp_impl_t* comp = nullptr;
  status_t status;
  rank_t peer = 0;
  // rendezvous source / put source / get destination
  std::byte* buffer = nullptr;
  size_t size = 0;
  // put
  std::atomic<uint64_t> acks_pending{0};
  bool signal_after_data = false;
  frame_header_t signal_header;
  rkey_t rkey = 0;
  uint64_t offset = 0;
  // get
  std::atomic<size_t> bytes_done{0};
};

// Receiver-side rendezvous transfer.
struct rndv_recv_t {
  std::byte* buffer = nullptr;
  size_t total = 0;
  std::atomic<size_t> bytes_done{0};
  comp_impl_t* comp = nullptr;
  status_t status;
  device_impl_t* posted_on = nullptr;
};

// Outbound data stream cut into packet-size frames by the progress engine.
struct stream_job_t {
  rank_t peer = 0;
  opcode_t opcode = opcode_t::rndv_data;
  uint64_t xfer_id = 0;
  const std::byte* src = nullptr;
  size_t total = 0;
  size_t sent = 0;
  bool emitted = false;
  // PUT chunks carry an (rkey, offset) prefix.
  bool rma_prefix = false;
  rkey_t rkey = 0;
  uint64_t base_offset = 0;
  std::function<void()> on_handoff;

  bool finished() const { return sent >= total && (total > 0 || emitted); }
};

class mr_impl_t
{
 public:
  device_impl_t* device = nullptr;
  std::byte* base = nullptr;
  size_t length = 0;
  rkey_t rkey = 0;
  std::atomic<int64_t> inflight{0};
};

class matching_engine_impl_t
{
 public:
  uint32_t id = 0;
  matching_engine_kind_t kind = matching_engine_kind_t::map;
  match_policy_t policy;
  attr_set_t attrs;
  std::vector<std::unique_ptr<matching_store_t>> stores;  // per local rank
  runtime_impl_t* runtime = nullptr;

  matching_store_t& store(rank_t rank);
  // Wire handle: engine id in the high bits, policy in the low three.
  rcomp_t wire_handle(match_policy_kind_t policy_kind) const
  {
    return (id << 3) | static_cast<rcomp_t>(policy_kind);
  }
};

inline constexpr uint32_t MAX_MATCHING_ENGINES = 4096;

/////////////////////////////////////////////////////////////////////////////
// Remote completion registry
/////////////////////////////////////////////////////////////////////////////
// Two-level table of atomic slots so lookups never take a lock.
class rcomp_registry_t
{
 public:
  rcomp_registry_t();
  ~rcomp_registry_t();
  rcomp_t add(comp_impl_t* comp, rcomp_path_t path);
  void remove(rcomp_t handle);
  // Throws fatal_bad_rcomp for unregistered handles.
  comp_impl_t* lookup(rcomp_t handle) const;
  size_t size() const;

 private:
  static constexpr size_t CHUNK_BITS = 16;
  static constexpr size_t CHUNK = size_t{1} << CHUNK_BITS;
  using chunk_t = std::array<std::atomic<comp_impl_t*>, CHUNK>;
  std::atomic<comp_impl_t*>* slot(rcomp_t handle, bool create);

  std::unique_ptr<std::atomic<chunk_t*>[]> chunks_;
  mutable std::mutex mu_;
  std::vector<rcomp_t> free_imm_;
  std::vector<rcomp_t> free_payload_;
  rcomp_t next_imm_ = 1;
  uint64_t next_payload_ = MAX_IMM_RCOMP + 1;
  size_t live_ = 0;
};

/////////////////////////////////////////////////////////////////////////////
// Device
/////////////////////////////////////////////////////////////////////////////
class device_impl_t
{
 public:
  device_impl_t(runtime_impl_t& runtime, rank_t rank, uint32_t id,
                packet_pool_impl_t* pool, attr_set_t attrs);
  ~device_impl_t();

  runtime_impl_t& runtime;
  const rank_t rank;
  const uint32_t id;
  packet_pool_impl_t* const pool;
  const attr_set_t attrs;
  const size_t batch;
  const size_t depth;
  const size_t eager_threshold;
  std::vector<std::unique_ptr<link_t>> links;  // indexed by peer rank

  link_t& link(rank_t peer);

  bool progress();
  // False when the frame needs a packet and the pool is empty; the caller
  // keeps the frame and retries later.
  bool handle_frame(inbound_frame_t& frame);

  uint64_t next_xfer_id()
  {
    return next_xfer_.fetch_add(1, std::memory_order_relaxed);
  }
  void add_op(uint64_t xfer_id, pending_op_t* op);
  pending_op_t* find_op(uint64_t xfer_id);
  pending_op_t* take_op(uint64_t xfer_id);

  void enqueue_job(stream_job_t job);
  // Frames the runtime must not drop; parked when the link is full.
  void send_control(rank_t peer, const frame_header_t& header,
                    std::span<const std::byte> payload);
  // Shared receive-side rendezvous setup for send/recv and AM.
  void start_rndv_recv(rank_t sender, uint64_t sender_xfer,
                       rndv_recv_t* state);
  // Pairs a posted receive with an arrived send. Eager data is copied and
  // the status returned; rendezvous starts the transfer and returns none.
  // Consumes both contexts.
  static std::optional<status_t> deliver_recv(recv_ctx_t* recv,
                                              arrival_ctx_t* arrival);

  void note_posted() { posted_.fetch_add(1, std::memory_order_relaxed); }
  void unnote_posted() { posted_.fetch_sub(1, std::memory_order_relaxed); }
  void note_completed()
  {
    completed_.fetch_add(1, std::memory_order_relaxed);
  }
  // Signals and counts one completion of an operation posted on `owner`.
  static void complete(device_impl_t* owner, comp_impl_t* comp,
                       status_t status);

  size_t pending_ops() const;
  size_t queued_frames() const;

  void add_mr(mr_impl_t* mr);
  void remove_mr(mr_impl_t* mr);
  // Takes an in-flight reference; throws fatal_bad_rkey / fatal_oob.
  mr_impl_t* acquire_region(rkey_t rkey, uint64_t offset, size_t length);
  size_t mr_count() const;

  // Teardown of everything still owned by the device.
  void release_all();

 private:
  bool flush_backlog();
  bool advance_jobs();
  bool run_job(stream_job_t& job);

  bool on_eager_send(inbound_frame_t& f);
  bool on_eager_am(inbound_frame_t& f);
  void on_rts(inbound_frame_t& f);
  void match_arrival(arrival_ctx_t* arrival, rcomp_t handle);
  void on_cts(inbound_frame_t& f);
  void on_rndv_data(inbound_frame_t& f);
  void on_put(inbound_frame_t& f);
  void on_put_ack(inbound_frame_t& f);
  void on_get_req(inbound_frame_t& f);
  void on_get_rep(inbound_frame_t& f);
  bool retain_packet(inbound_frame_t& f, owned_packet_t& out);

  std::atomic<uint64_t> next_xfer_{1};
  std::atomic<uint64_t> posted_{0};
  std::atomic<uint64_t> completed_{0};
  std::atomic<size_t> poll_cursor_{0};

  mutable std::mutex ops_mu_;
  std::unordered_map<uint64_t, pending_op_t*> ops_;

  mutable std::mutex rndv_mu_;
  std::unordered_map<uint64_t, rndv_recv_t*> rndv_;

  mutable std::mutex jobs_mu_;
  std::deque<stream_job_t> jobs_;
  std::atomic<size_t> jobs_active_{0};

  mutable std::mutex backlog_mu_;
  std::deque<std::pair<rank_t, out_frame_t>> backlog_;
  std::atomic<size_t> backlog_size_{0};

  mutable std::shared_mutex mr_mu_;
  std::unordered_map<rkey_t, mr_impl_t*> mrs_;
};

/////////////////////////////////////////////////////////////////////////////
// Runtime
/////////////////////////////////////////////////////////////////////////////
enum class transport_kind_t : uint8_t { loopback, tcp };

class runtime_impl_t
{
 public:
  explicit runtime_impl_t(attr_set_t config);
  ~runtime_impl_t();

  const attr_set_t config;
  transport_kind_t transport = transport_kind_t::loopback;
  rank_t rank = 0;
  rank_t nranks = 1;
  std::vector<rank_t> local_ranks;

  loopback_fabric_t fabric;
  std::unique_ptr<tcp_bootstrap_t> tcp;
  rcomp_registry_t rcomps;

  bool is_local(rank_t r) const;
  size_t local_index(rank_t r) const;

  matching_engine_impl_t* engine_by_id(uint32_t id) const;

  // Owned resources, for census, double-free detection and teardown.
  std::mutex mu;
  std::unordered_map<device_impl_t*, std::unique_ptr<device_impl_t>> devices;
  std::unordered_map<packet_pool_impl_t*, std::unique_ptr<packet_pool_impl_t>>
      pools;
  std::unordered_map<matching_engine_impl_t*,
                     std::unique_ptr<matching_engine_impl_t>>
      engines;
  std::unordered_map<comp_impl_t*, std::unique_ptr<comp_impl_t>> comps;
  std::unordered_map<mr_impl_t*, std::unique_ptr<mr_impl_t>> mrs;

  // Lock-free device list for progress_all.
  static constexpr size_t MAX_DEVICES = 4096;
  std::array<std::atomic<device_impl_t*>, MAX_DEVICES> device_slots{};
  std::atomic<size_t> device_slot_hw{0};
  std::atomic<size_t> progress_cursor{0};

  std::array<std::atomic<matching_engine_impl_t*>, MAX_MATCHING_ENGINES>
      engine_slots{};
  uint32_t next_engine_id = 0;
  std::vector<uint32_t> next_device_id;  // per local rank
  std::atomic<rkey_t> next_rkey{1};

  std::vector<device_impl_t*> default_devices;  // per local rank
  std::vector<comp_impl_t*> default_cqs;        // per local rank
  matching_engine_impl_t* default_engine = nullptr;
  packet_pool_impl_t* default_pool = nullptr;

  device_impl_t* create_device(rank_t rank, packet_pool_impl_t* pool,
                               const attr_set_t& args);
  packet_pool_impl_t* create_pool(const attr_set_t& args);
  matching_engine_impl_t* create_engine(const attr_set_t& args,
                                        match_fn_t custom_fn);
  comp_impl_t* adopt_comp(std::unique_ptr<comp_impl_t> comp);
  int64_t default_cq_capacity() const;

  void destroy_device(device_impl_t* device);
  void teardown();
};

runtime_impl_t& resolve_runtime(const std::optional<runtime_t>& rt);
device_impl_t& resolve_device(runtime_impl_t& rt,
                              const std::optional<device_t>& device);

}  // namespace lcomm

#endif  // LCOMM_INTERNAL_HPP
