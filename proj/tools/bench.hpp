// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

// Multithreaded ping-pong message-rate benchmark.

#ifndef LCOMM_TOOLS_BENCH_HPP
#define LCOMM_TOOLS_BENCH_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcomm::bench
{
struct bench_config_t {
  std::string transport = "loopback";  // loopback | tcp
  int64_t rank = -1;                   // tcp: -1 runs both ranks locally
  int64_t nranks = 2;
  std::string hosts;
  int64_t port_base = 0;  // tcp: 0 picks a free pair (local) or the default
  int64_t threads = 1;
  int64_t msg_size = 8;
  int64_t iters = 100000;
  int64_t warmup = 1000;
  std::string comp = "cq";               // cq | sync | handler
  std::string device_mode = "per_thread";  // shared | per_thread
  int64_t reps = 1;
  std::string output = "csv";  // csv | json
};

struct bench_report_t {
  bench_config_t config;
  // Timed round trips completed by each rank-0 thread, summed over reps.
  std::vector<uint64_t> per_thread_messages;
  // Messages received by both ranks, warmup included.
  uint64_t total_messages = 0;
  uint64_t mismatches = 0;
  std::vector<double> wall_seconds;  // per repetition
  std::vector<double> rates;         // per repetition, messages/s
  double rate_mean = 0;
  double rate_stddev = 0;
};

// Bad configuration; the CLI maps it to exit status 2.
class usage_error : public std::invalid_argument
{
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const bench_config_t& cfg);

// Runs the benchmark. Loopback hosts both ranks in this process; tcp with
// rank < 0 forks the peer rank. Only rank 0 returns a populated report.
bench_report_t run_pingpong(const bench_config_t& cfg);

// Mean and sample standard deviation (0 for a single value).
void summarize(const std::vector<double>& xs, double& mean, double& stddev);

std::string emit_report(const bench_report_t& report,
                        const std::string& format);

}  // namespace lcomm::bench

#endif  // LCOMM_TOOLS_BENCH_HPP
