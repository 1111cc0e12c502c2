// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include <fmt/format.h>

#include "internal.hpp"

namespace lcomm
{
namespace
{
constexpr std::array<std::byte, 4> HANDSHAKE_MAGIC = {
    std::byte{'L'}, std::byte{'C'}, std::byte{'I'}, std::byte{'H'}};
constexpr size_t HANDSHAKE_SIZE = 12;

[[noreturn]] void throw_errno(const std::string& what)
{
  throw_fatal(errorcode_t::fatal_transport,
              fmt::format("{}: {}", what, std::strerror(errno)));
}

void set_nonblocking(int fd, bool on)
{
  int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0) throw_errno("fcntl");
  flags = on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK);
  if (::fcntl(fd, F_SETFL, flags) < 0) throw_errno("fcntl");
}

void tune_socket(int fd)
{
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  set_nonblocking(fd, true);
}

bool resolve(const host_port_t& hp, sockaddr_storage& out, socklen_t& len)
{
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto port = std::to_string(hp.port);
  if (::getaddrinfo(hp.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    return false;
  std::memcpy(&out, res->ai_addr, res->ai_addrlen);
  len = res->ai_addrlen;
  ::freeaddrinfo(res);
  return true;
}

bool write_all(int fd, const std::byte* p, size_t n)
{
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += w;
    n -= static_cast<size_t>(w);
  }
  return true;
}

bool read_all(int fd, std::byte* p, size_t n)
{
  while (n > 0) {
    ssize_t r = ::recv(fd, p, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    p += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}
}  // namespace

std::vector<host_port_t> parse_hosts(const std::string& spec, rank_t nranks,
                                     int64_t port_base)
{
  std::vector<host_port_t> hosts;
  if (spec.empty()) {
    for (rank_t r = 0; r < nranks; ++r)
      hosts.push_back({"127.0.0.1", static_cast<uint16_t>(port_base + r)});
    return hosts;
  }
  size_t start = 0;
  while (start <= spec.size()) {
    size_t comma = spec.find(',', start);
    std::string item = spec.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    host_port_t hp;
    auto colon = item.rfind(':');
    if (colon == std::string::npos) {
      hp.host = item;
      hp.port = static_cast<uint16_t>(port_base + hosts.size());
    } else {
      hp.host = item.substr(0, colon);
      char* end = nullptr;
      long port = std::strtol(item.c_str() + colon + 1, &end, 10);
      if (*end != '\0' || port <= 0 || port > 65535)
        throw_fatal(errorcode_t::fatal_bad_arg,
                    fmt::format("bad port in hosts entry '{}'", item));
      hp.port = static_cast<uint16_t>(port);
    }
    if (hp.host.empty())
      throw_fatal(errorcode_t::fatal_bad_arg,
                  fmt::format("empty host in '{}'", spec));
    hosts.push_back(hp);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (hosts.size() != nranks)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("hosts lists {} entries for {} ranks",
                            hosts.size(), nranks));
  return hosts;
}

tcp_bootstrap_t::tcp_bootstrap_t(rank_t rank, rank_t nranks,
                                 std::vector<host_port_t> hosts,
                                 int64_t timeout_ms)
    : rank_(rank), nranks_(nranks), hosts_(std::move(hosts)),
      timeout_ms_(timeout_ms)
{
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw_errno("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(hosts_[rank_].port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
      0) {
    int err = errno;
    ::close(listen_fd_);
    errno = err;
    throw_errno(fmt::format("bind port {}", hosts_[rank_].port));
  }
  if (::listen(listen_fd_, 128) < 0) throw_errno("listen");
  set_nonblocking(listen_fd_, true);
}

tcp_bootstrap_t::~tcp_bootstrap_t()
{
  for (auto& [key, fd] : accepted_) ::close(fd);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

int tcp_bootstrap_t::connect_pair(rank_t peer, uint32_t device_id)
{
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(timeout_ms_);
  int fd = rank_ < peer ? dial(peer, device_id, deadline)
                        : await(peer, device_id, deadline);
  tune_socket(fd);
  return fd;
}

int tcp_bootstrap_t::dial(rank_t peer, uint32_t device_id,
                          std::chrono::steady_clock::time_point deadline)
{
  sockaddr_storage addr{};
  socklen_t len = 0;
  if (!resolve(hosts_[peer], addr, len))
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("cannot resolve host '{}'", hosts_[peer].host));
  std::array<std::byte, HANDSHAKE_SIZE> hello;
  std::memcpy(hello.data(), HANDSHAKE_MAGIC.data(), 4);
  store_le<uint32_t>(hello.data() + 4, rank_);
  store_le<uint32_t>(hello.data() + 8, device_id);
  while (true) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), len) == 0 &&
        write_all(fd, hello.data(), hello.size()))
      return fd;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw_fatal(errorcode_t::fatal_transport,
                  fmt::format("rank {} could not reach rank {} at {}:{}",
                              rank_, peer, hosts_[peer].host,
                              hosts_[peer].port));
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

int tcp_bootstrap_t::await(rank_t peer, uint32_t device_id,
                           std::chrono::steady_clock::time_point deadline)
{
  while (true) {
    {
      std::lock_guard lock(accept_mu_);
      auto it = accepted_.find({peer, device_id});
      if (it != accepted_.end()) {
        int fd = it->second;
        accepted_.erase(it);
        return fd;
      }
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        timeval tv{5, 0};
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        set_nonblocking(fd, false);
        std::array<std::byte, HANDSHAKE_SIZE> hello;
        if (read_all(fd, hello.data(), hello.size()) &&
            std::memcmp(hello.data(), HANDSHAKE_MAGIC.data(), 4) == 0) {
          timeval none{0, 0};
          ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &none, sizeof(none));
          rank_t from = load_le<uint32_t>(hello.data() + 4);
          uint32_t dev = load_le<uint32_t>(hello.data() + 8);
          auto [slot, fresh] = accepted_.emplace(std::pair{from, dev}, fd);
          if (!fresh) ::close(fd);
          continue;
        }
        ::close(fd);
        continue;
      }
      if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
        throw_errno("accept");
    }
    if (std::chrono::steady_clock::now() >= deadline)
      throw_fatal(errorcode_t::fatal_transport,
                  fmt::format("rank {} timed out waiting for rank {}", rank_,
                              peer));
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

namespace
{
// Stream socket to one peer. Outbound frames queue until the kernel takes
// them; inbound bytes are reassembled into frames.
class tcp_link_t final : public link_t
{
 public:
  tcp_link_t(int fd, size_t depth, size_t max_frame)
      : fd_(fd), depth_(depth), stream_(max_frame)
  {
  }
  ~tcp_link_t() override { ::close(fd_); }

  bool completes_on_push() const noexcept override { return false; }

  push_result_t push(out_frame_t& frame, bool bounded) override
  {
    if (closed_.load(std::memory_order_acquire))
      throw_fatal(errorcode_t::fatal_transport, "peer closed the connection");
    std::vector<std::unique_ptr<wire_completion_t>> done;
    push_result_t result;
    {
      std::lock_guard lock(out_mu_);
      if (bounded && queue_.size() >= depth_) return push_result_t::full;
      uint64_t mine = pushed_++;
      queue_.push_back(std::move(frame));
      queued_.fetch_add(1, std::memory_order_relaxed);
      uint64_t before = popped_;
      write_some(done);
      // Sent immediately when our frame left the queue.
      if (popped_ > mine) {
        result = push_result_t::handed_off;
        // Our own completion is reported by the caller as done.
        size_t own = static_cast<size_t>(mine - before);
        if (own < done.size()) done[own].reset();
      } else {
        result = push_result_t::queued;
      }
    }
    signal(done);
    return result;
  }

  bool flush() override
  {
    if (queued_.load(std::memory_order_relaxed) == 0) return false;
    std::vector<std::unique_ptr<wire_completion_t>> done;
    bool did;
    {
      std::unique_lock lock(out_mu_, std::try_to_lock);
      if (!lock.owns_lock()) return false;
      did = write_some(done);
    }
    signal(done);
    return did;
  }

  bool poll(device_impl_t& device, size_t& budget) override
  {
    std::unique_lock lock(in_mu_, std::try_to_lock);
    if (!lock.owns_lock()) return false;
    bool did = false;
    while (budget > 0) {
      auto frame = stream_.peek();
      if (frame) {
        inbound_frame_t in;
        in.header = frame->header;
        in.bytes = frame->bytes;
        if (!device.handle_frame(in)) break;  // no packet; retry later
        stream_.consume(*frame);
        --budget;
        did = true;
        continue;
      }
      if (closed_.load(std::memory_order_relaxed)) break;
      auto buf = stream_.prepare(64 * 1024);
      ssize_t r = ::recv(fd_, buf.data(), buf.size(), 0);
      if (r > 0) {
        stream_.commit(static_cast<size_t>(r));
        did = true;
        continue;
      }
      if (r == 0) {
        closed_.store(true, std::memory_order_release);
        break;
      }
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) break;
      if (errno == ECONNRESET) {
        closed_.store(true, std::memory_order_release);
        break;
      }
      throw_errno("recv");
    }
    return did;
  }

  size_t queued_frames() const override
  {
    return queued_.load(std::memory_order_relaxed);
  }

 private:
  // Caller holds out_mu_. Completed frames' wire completions go to `done`,
  // one slot per frame in send order.
  bool write_some(std::vector<std::unique_ptr<wire_completion_t>>& done)
  {
    bool did = false;
    while (!queue_.empty()) {
      constexpr size_t MAX_IOV = 64;
      std::array<iovec, MAX_IOV> iov;
      size_t n = 0;
      size_t skip = front_offset_;
      for (auto it = queue_.begin(); it != queue_.end() && n < MAX_IOV;
           ++it, ++n) {
        iov[n].iov_base = it->bytes() + skip;
        iov[n].iov_len = it->size - skip;
        skip = 0;
      }
      msghdr msg{};
      msg.msg_iov = iov.data();
      msg.msg_iovlen = n;
      ssize_t w = ::sendmsg(fd_, &msg, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) break;
        closed_.store(true, std::memory_order_release);
        throw_errno("send");
      }
      did = true;
      size_t left = static_cast<size_t>(w);
      while (left > 0) {
        auto& front = queue_.front();
        size_t rest = front.size - front_offset_;
        if (left < rest) {
          front_offset_ += left;
          break;
        }
        left -= rest;
        front_offset_ = 0;
        done.push_back(std::move(front.on_wire));
        queue_.pop_front();
        ++popped_;
        queued_.fetch_sub(1, std::memory_order_relaxed);
      }
    }
    return did;
  }

  static void signal(std::vector<std::unique_ptr<wire_completion_t>>& done)
  {
    for (auto& c : done)
      if (c) device_impl_t::complete(c->device, c->comp, std::move(c->status));
  }

  int fd_;
  size_t depth_;
  std::atomic<bool> closed_{false};

  std::mutex out_mu_;
  std::deque<out_frame_t> queue_;
  size_t front_offset_ = 0;
  uint64_t pushed_ = 0;
  uint64_t popped_ = 0;
  std::atomic<size_t> queued_{0};

  std::mutex in_mu_;
  frame_stream_t stream_;
};
}  // namespace

std::unique_ptr<link_t> make_tcp_link(int fd, size_t depth,
                                      size_t max_frame_size)
{
  return std::make_unique<tcp_link_t>(fd, depth, max_frame_size);
}

}  // namespace lcomm
