// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "bench.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "lcomm/lcomm.hpp"

namespace lcomm::bench
{
namespace
{
using clock_type = std::chrono::steady_clock;

constexpr tag_t COUNT_TAG = 0xFFFF0000ull;

// Set when any worker fails so the others stop spinning.
class abort_flag_t
{
 public:
  void raise() { flag_.store(true, std::memory_order_release); }
  void check() const
  {
    if (flag_.load(std::memory_order_acquire))
      throw std::runtime_error("aborted by a failing peer thread");
  }

 private:
  std::atomic<bool> flag_{false};
};

// Waits for the local completions of one thread's operations using the
// configured completion mechanism.
class completer_t
{
 public:
  completer_t(const std::string& kind, device_t dev, abort_flag_t& abort)
      : dev_(dev), abort_(abort)
  {
    if (kind == "cq") {
      kind_ = kind_t::cq;
      cq_ = alloc_cq_x().capacity(64)();
    } else if (kind == "sync") {
      kind_ = kind_t::sync;
      send_sync_ = alloc_sync(1);
      recv_sync_ = alloc_sync(1);
    } else {
      kind_ = kind_t::handler;
      handler_ = alloc_handler([this](const status_t&) {
        handled_.fetch_add(1, std::memory_order_release);
      });
    }
  }
  ~completer_t()
  {
    for (comp_t* c : {&cq_, &send_sync_, &recv_sync_, &handler_})
      if (!c->is_empty()) free_comp(*c);
  }

  comp_t send_comp() const { return pick(send_sync_); }
  comp_t recv_comp() const { return pick(recv_sync_); }

  void track(const post_result_t& r, bool is_send)
  {
    if (!r.is_posted()) return;
    ++outstanding_;
    (is_send ? send_pending_ : recv_pending_) = true;
  }

  void wait_all()
  {
    switch (kind_) {
      case kind_t::cq:
        while (outstanding_ > 0) {
          if (cq_pop(cq_))
            --outstanding_;
          else
            step();
        }
        break;
      case kind_t::sync:
        for (auto [pending, sync] :
             {std::pair{&recv_pending_, recv_sync_},
              std::pair{&send_pending_, send_sync_}}) {
          if (!*pending) continue;
          while (!sync_test(sync)) step();
          sync_wait(sync);
          *pending = false;
        }
        break;
      case kind_t::handler:
        expected_ += outstanding_;
        while (handled_.load(std::memory_order_acquire) < expected_) step();
        break;
    }
    outstanding_ = 0;
    send_pending_ = recv_pending_ = false;
  }

  void step()
  {
    if (!progress(dev_)) {
      abort_.check();
      std::this_thread::yield();
    }
  }

 private:
  enum class kind_t { cq, sync, handler };
  comp_t pick(comp_t sync) const
  {
    switch (kind_) {
      case kind_t::cq:
        return cq_;
      case kind_t::sync:
        return sync;
      case kind_t::handler:
        return handler_;
    }
    return {};
  }

  kind_t kind_ = kind_t::cq;
  device_t dev_;
  abort_flag_t& abort_;
  comp_t cq_, send_sync_, recv_sync_, handler_;
  std::atomic<uint64_t> handled_{0};
  uint64_t expected_ = 0;
  uint64_t outstanding_ = 0;
  bool send_pending_ = false;
  bool recv_pending_ = false;
};

uint64_t stamp_word(uint64_t thread, uint64_t iter)
{
  return (thread << 40) ^ iter ^ 0x5A5A000000000000ull;
}

void stamp(std::vector<std::byte>& buf, uint64_t thread, uint64_t iter)
{
  uint64_t w = stamp_word(thread, iter);
  for (size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<std::byte>(i < 8 ? (w >> (8 * i)) & 0xFF
                                          : (iter + i) & 0xFF);
}

void verify(const std::vector<std::byte>& buf, uint64_t thread, uint64_t iter)
{
  uint64_t w = stamp_word(thread, iter);
  for (size_t i = 0; i < buf.size(); ++i) {
    auto want = static_cast<std::byte>(i < 8 ? (w >> (8 * i)) & 0xFF
                                             : (iter + i) & 0xFF);
    if (buf[i] != want)
      throw fatal_error(errorcode_t::fatal_payload_mismatch,
                        fmt::format("thread {} iteration {} byte {}", thread,
                                    iter, i));
  }
}

struct rank_plan_t {
  rank_t rank = 0;
  rank_t peer = 1;
  std::vector<device_t> devices;  // one per thread
};

post_result_t post_send_retrying(completer_t& c, rank_t peer,
                                 const std::vector<std::byte>& buf, tag_t tag,
                                 device_t dev)
{
  auto desc =
      post_send_x(peer, buf.data(), buf.size(), tag).device(dev).comp(
          c.send_comp());
  post_result_t r;
  while ((r = desc()).is_retry()) c.step();
  return r;
}

// Rank 0 side of thread `t`: warmup, then `reps` timed blocks of iters.
void ping_thread(const bench_config_t& cfg, const rank_plan_t& plan, size_t t,
                 std::barrier<std::function<void()>>& sync,
                 uint64_t& received, uint64_t& timed, abort_flag_t& abort)
{
  device_t dev = plan.devices[t];
  completer_t c(cfg.comp, dev, abort);
  std::vector<std::byte> out(cfg.msg_size), in(cfg.msg_size);
  uint64_t iter = 0;
  auto round_trip = [&] {
    stamp(out, t, iter);
    c.track(post_recv_x(plan.peer, in.data(), in.size(), t)
                .device(dev)
                .comp(c.recv_comp())(),
            false);
    c.track(post_send_retrying(c, plan.peer, out, t, dev), true);
    c.wait_all();
    verify(in, t, iter);
    ++iter;
    ++received;
  };
  for (int64_t i = 0; i < cfg.warmup; ++i) round_trip();
  for (int64_t r = 0; r < cfg.reps; ++r) {
    sync.arrive_and_wait();
    for (int64_t i = 0; i < cfg.iters; ++i) {
      round_trip();
      ++timed;
    }
    sync.arrive_and_wait();
  }
}

// Rank 1 side: echo every message back.
void pong_thread(const bench_config_t& cfg, const rank_plan_t& plan, size_t t,
                 uint64_t& received, abort_flag_t& abort)
{
  device_t dev = plan.devices[t];
  completer_t c(cfg.comp, dev, abort);
  std::vector<std::byte> in(cfg.msg_size);
  uint64_t total = static_cast<uint64_t>(cfg.warmup + cfg.reps * cfg.iters);
  for (uint64_t iter = 0; iter < total; ++iter) {
    c.track(post_recv_x(plan.peer, in.data(), in.size(), t)
                .device(dev)
                .comp(c.recv_comp())(),
            false);
    c.wait_all();
    verify(in, t, iter);
    ++received;
    c.track(post_send_retrying(c, plan.peer, in, t, dev), true);
    c.wait_all();
  }
}

rank_plan_t plan_rank(const bench_config_t& cfg, runtime_t rt, rank_t rank)
{
  rank_plan_t plan;
  plan.rank = rank;
  plan.peer = 1 - rank;
  for (int64_t t = 0; t < cfg.threads; ++t)
    plan.devices.push_back(cfg.device_mode == "shared"
                               ? rt.get_default_device(rank)
                               : alloc_device_x().rank(rank)());
  return plan;
}

template <typename F>
std::thread guarded(F fn, std::exception_ptr& err, std::mutex& mu,
                    abort_flag_t& abort)
{
  return std::thread([fn, &err, &mu, &abort]() mutable {
    try {
      fn();
    } catch (...) {
      abort.raise();
      std::lock_guard lock(mu);
      if (!err) err = std::current_exception();
    }
  });
}

struct rank_result_t {
  std::vector<uint64_t> received;  // per local rank
  std::vector<uint64_t> timed;     // per rank-0 thread
  std::vector<double> walls;
};

// Runs the worker threads of the given local ranks in this process.
rank_result_t run_ranks(const bench_config_t& cfg,
                        const std::vector<rank_plan_t>& plans)
{
  rank_result_t result;
  size_t threads = static_cast<size_t>(cfg.threads);
  std::vector<clock_type::time_point> marks;
  std::function<void()> on_phase = [&marks] {
    marks.push_back(clock_type::now());
  };
  std::barrier<std::function<void()>> sync(static_cast<ptrdiff_t>(threads),
                                           on_phase);
  abort_flag_t abort;
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::vector<uint64_t>> received(plans.size(),
                                              std::vector<uint64_t>(threads));
  result.timed.assign(threads, 0);
  std::vector<std::thread> workers;
  for (size_t p = 0; p < plans.size(); ++p) {
    for (size_t t = 0; t < threads; ++t) {
      const auto& plan = plans[p];
      uint64_t& count = received[p][t];
      if (plan.rank == 0)
        workers.push_back(guarded(
            [&, t] {
              try {
                ping_thread(cfg, plan, t, sync, count, result.timed[t],
                            abort);
              } catch (...) {
                sync.arrive_and_drop();
                throw;
              }
            },
            err, err_mu, abort));
      else
        workers.push_back(guarded(
            [&, t] { pong_thread(cfg, plan, t, count, abort); }, err, err_mu,
            abort));
    }
  }
  for (auto& w : workers) w.join();
  if (err) std::rethrow_exception(err);
  for (size_t p = 0; p < plans.size(); ++p) {
    uint64_t sum = 0;
    for (auto c : received[p]) sum += c;
    result.received.push_back(sum);
  }
  for (size_t r = 0; r + 1 < marks.size(); r += 2)
    result.walls.push_back(
        std::chrono::duration<double>(marks[r + 1] - marks[r]).count());
  return result;
}

bench_report_t make_report(const bench_config_t& cfg,
                           const rank_result_t& res, uint64_t total_messages)
{
  bench_report_t rep;
  rep.config = cfg;
  rep.per_thread_messages = res.timed;
  rep.total_messages = total_messages;
  rep.wall_seconds = res.walls;
  for (double w : res.walls)
    rep.rates.push_back(static_cast<double>(cfg.threads * cfg.iters) / w);
  summarize(rep.rates, rep.rate_mean, rep.rate_stddev);
  return rep;
}

bench_report_t run_loopback(const bench_config_t& cfg)
{
  runtime_t rt = runtime_init_x().transport("loopback").nranks(2)();
  rank_result_t res;
  try {
    std::vector<rank_plan_t> plans = {plan_rank(cfg, rt, 0),
                                      plan_rank(cfg, rt, 1)};
    res = run_ranks(cfg, plans);
  } catch (...) {
    runtime_finalize_x().force(true)();
    throw;
  }
  runtime_finalize();
  return make_report(cfg, res, res.received[0] + res.received[1]);
}

// One TCP rank of a two-rank job. Rank 1 reports its receive count to
// rank 0 at the end.
bench_report_t run_tcp_rank(const bench_config_t& cfg, rank_t rank,
                            int64_t port_base)
{
  auto init = runtime_init_x().transport("tcp").rank(rank).nranks(2);
  if (!cfg.hosts.empty()) init.hosts(cfg.hosts);
  if (port_base > 0) init.tcp_port_base(port_base);
  runtime_t rt = init();
  bench_report_t rep;
  try {
    rank_result_t res = run_ranks(cfg, {plan_rank(cfg, rt, rank)});
    device_t dev = rt.get_default_device();
    comp_t sync = alloc_sync(1);
    uint64_t count = res.received[0];
    uint64_t peer_count = 0;
    auto r = rank == 0 ? post_recv_x(1, &peer_count, 8, COUNT_TAG)
                             .device(dev)
                             .comp(sync)()
                       : post_send_x(0, &count, 8, COUNT_TAG)
                             .device(dev)
                             .comp(sync)();
    while (r.is_retry())
      r = post_send_x(0, &count, 8, COUNT_TAG).device(dev).comp(sync)();
    if (r.is_posted()) {
      while (!sync_test(sync))
        if (!progress(dev)) std::this_thread::yield();
      sync_wait(sync);
    }
    free_comp(sync);
    if (rank == 0) rep = make_report(cfg, res, count + peer_count);
  } catch (...) {
    runtime_finalize_x().force(true)();
    throw;
  }
  runtime_finalize();
  return rep;
}

int64_t free_port_pair()
{
  std::mt19937_64 rng(std::random_device{}() ^
                      static_cast<uint64_t>(::getpid()));
  for (int attempt = 0; attempt < 100; ++attempt) {
    int64_t base = 20000 + static_cast<int64_t>(rng() % 40000);
    bool ok = true;
    for (int i = 0; i < 2 && ok; ++i) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      sockaddr_in addr{};
      addr.sin_family = AF_INET;
      addr.sin_addr.s_addr = htonl(INADDR_ANY);
      addr.sin_port = htons(static_cast<uint16_t>(base + i));
      ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
      ::close(fd);
    }
    if (ok) return base;
  }
  throw std::runtime_error("no free port pair");
}

bench_report_t run_tcp_local(const bench_config_t& cfg)
{
  int64_t base = cfg.port_base > 0 ? cfg.port_base : free_port_pair();
  pid_t child = ::fork();
  if (child < 0) throw std::runtime_error("fork failed");
  if (child == 0) {
    int code = 0;
    try {
      run_tcp_rank(cfg, 1, base);
    } catch (const std::exception& e) {
      fmt::print(stderr, "rank 1: {}\n", e.what());
      code = 1;
    }
    std::fflush(nullptr);
    ::_exit(code);
  }
  bench_report_t rep;
  std::exception_ptr err;
  try {
    rep = run_tcp_rank(cfg, 0, base);
  } catch (...) {
    err = std::current_exception();
  }
  int status = 0;
  ::waitpid(child, &status, 0);
  if (err) std::rethrow_exception(err);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw fatal_error(errorcode_t::fatal_transport, "peer rank failed");
  return rep;
}
}  // namespace

void validate(const bench_config_t& cfg)
{
  if (cfg.transport != "loopback" && cfg.transport != "tcp")
    throw usage_error("--transport must be loopback or tcp");
  if (cfg.threads < 1) throw usage_error("--threads must be at least 1");
  if (cfg.msg_size < 1) throw usage_error("--msg-size must be at least 1");
  if (cfg.iters < 1) throw usage_error("--iters must be at least 1");
  if (cfg.warmup < 0) throw usage_error("--warmup must not be negative");
  if (cfg.reps < 1) throw usage_error("--reps must be at least 1");
  if (cfg.nranks != 2) throw usage_error("ping-pong needs exactly 2 ranks");
  if (cfg.rank >= cfg.nranks) throw usage_error("--rank out of range");
  if (cfg.comp != "cq" && cfg.comp != "sync" && cfg.comp != "handler")
    throw usage_error("--comp must be cq, sync or handler");
  if (cfg.device_mode != "shared" && cfg.device_mode != "per_thread")
    throw usage_error("--device-mode must be shared or per_thread");
  if (cfg.output != "csv" && cfg.output != "json")
    throw usage_error("--output must be csv or json");
}

bench_report_t run_pingpong(const bench_config_t& cfg)
{
  validate(cfg);
  if (cfg.transport == "loopback") return run_loopback(cfg);
  if (cfg.rank < 0) return run_tcp_local(cfg);
  return run_tcp_rank(cfg, static_cast<rank_t>(cfg.rank), cfg.port_base);
}

void summarize(const std::vector<double>& xs, double& mean, double& stddev)
{
  mean = stddev = 0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string emit_report(const bench_report_t& rep, const std::string& format)
{
  const auto& c = rep.config;
  if (format == "json") {
    nlohmann::ordered_json j;
    j["transport"] = c.transport;
    j["threads"] = c.threads;
    j["msg_size"] = c.msg_size;
    j["iters"] = c.iters;
    j["comp"] = c.comp;
    j["device_mode"] = c.device_mode;
    j["rate_msgs_per_s"] = rep.rate_mean;
    j["stddev"] = rep.rate_stddev;
    return j.dump() + "\n";
  }
  return fmt::format(
      "transport,threads,msg_size,iters,comp,device_mode,rate_msgs_per_s,"
      "stddev\n{},{},{},{},{},{},{:.2f},{:.2f}\n",
      c.transport, c.threads, c.msg_size, c.iters, c.comp, c.device_mode,
      rep.rate_mean, rep.rate_stddev);
}

}  // namespace lcomm::bench
