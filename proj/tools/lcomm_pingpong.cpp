// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

// Ping-pong message-rate benchmark.
//
//   lcomm_pingpong --transport loopback --threads 4 --iters 100000
//   lcomm_pingpong --transport tcp --threads 4 --reps 5 --output json
//
// With --transport tcp and no --rank, both ranks run on this host (the
// second one in a forked process). With --rank, run one rank of a job
// whose peers are listed in --hosts.

#include <cstdio>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "bench.hpp"
#include "lcomm/core.hpp"

int main(int argc, char** argv)
{
  using namespace lcomm::bench;
  bench_config_t cfg;
  CLI::App app{"lcomm ping-pong message-rate benchmark"};
  app.add_option("--transport", cfg.transport, "loopback or tcp")
      ->capture_default_str();
  app.add_option("--rank", cfg.rank, "this process's rank (tcp)");
  app.add_option("--nranks", cfg.nranks, "number of ranks")
      ->capture_default_str();
  app.add_option("--hosts", cfg.hosts, "comma-separated host[:port] list");
  app.add_option("--port-base", cfg.port_base, "first TCP listen port");
  app.add_option("--threads", cfg.threads, "ping-pong thread pairs")
      ->capture_default_str();
  app.add_option("--msg-size", cfg.msg_size, "message size in bytes")
      ->capture_default_str();
  app.add_option("--iters", cfg.iters, "timed round trips per thread")
      ->capture_default_str();
  app.add_option("--warmup", cfg.warmup, "untimed round trips per thread")
      ->capture_default_str();
  app.add_option("--comp", cfg.comp, "cq, sync or handler")
      ->capture_default_str();
  app.add_option("--device-mode", cfg.device_mode, "shared or per_thread")
      ->capture_default_str();
  app.add_option("--reps", cfg.reps, "repetitions")->capture_default_str();
  app.add_option("--output", cfg.output, "csv or json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    validate(cfg);
    bench_report_t rep = run_pingpong(cfg);
    if (cfg.rank <= 0) {
      std::fputs(emit_report(rep, cfg.output).c_str(), stdout);
      std::fflush(stdout);
    }
  } catch (const usage_error& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 2;
  } catch (const lcomm::fatal_error& e) {
    fmt::print(stderr, "FATAL {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
