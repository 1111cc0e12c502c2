// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

// Whole-runtime checks shared by the unit tests (small parameters) and the
// acceptance binary (full parameters). Each one brings up its own loopback
// runtime and tears it down before returning.

#ifndef LCOMM_TESTS_HARNESS_HPP
#define LCOMM_TESTS_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lcomm::testing
{
struct permutation_report_t {
  std::string op;
  size_t permutations = 0;
  // Distinct observable outcomes over all setter orders; 1 is the goal.
  size_t distinct_outcomes = 0;
  size_t reuse_calls = 0;
  // Reuse invocations that completed with the same outcome as above.
  size_t reuse_completions = 0;
  size_t stray_completions = 0;
  std::string outcome;  // first observed outcome, for diagnostics
};

// send, recv, am, put, get
const std::vector<std::string>& descriptor_ops();

// Invokes `op` once per ordering of its optional setters, then invokes one
// descriptor `reuse_calls` times.
permutation_report_t check_descriptor_permutations(const std::string& op,
                                                   size_t reuse_calls);

struct backpressure_report_t {
  size_t burst = 0;
  size_t accepted_in_burst = 0;
  size_t retries_in_burst = 0;
  size_t delivered = 0;
  size_t duplicates = 0;
  size_t corrupted = 0;
  size_t send_completions = 0;
  double slowest_post_seconds = 0;
};

// Posts `burst` eager sends with no progress on a runtime whose pool holds
// `packet_count` packets, drains, re-posts what was refused and counts
// deliveries.
backpressure_report_t run_backpressure(size_t packet_count, size_t burst);

struct exactly_once_report_t {
  size_t posts = 0;  // successful posts, each owed one local completion
  size_t retries = 0;
  size_t remote_expected = 0;  // signals owed at the target
  size_t duplicates = 0;
  size_t losses = 0;
  size_t corrupted = 0;
  bool clean_finalize = false;
};

// Threads post random send/recv/am/put/get mixes between two loopback
// ranks, every thread driving progress_all, with each op carrying a
// unique id through user_context, tag or payload.
exactly_once_report_t run_exactly_once(uint64_t seed, int threads,
                                       size_t ops_per_thread);

struct sync_report_t {
  size_t epochs = 0;
  size_t early_ready = 0;  // observed ready before the k-th signal
  size_t late_ready = 0;   // not ready after the k-th signal
  size_t bad_records = 0;  // wrong count, duplicates or stale epochs
};

sync_report_t run_sync_semantics(size_t threshold, int threads,
                                 size_t epochs);

struct in_order_report_t {
  size_t n = 0;
  size_t completed = 0;
  size_t out_of_order = 0;
};

// Pre-posts n receives on a queue engine with policy none, then sends n
// messages; receive i must get message i.
in_order_report_t run_in_order(size_t n);

}  // namespace lcomm::testing

#endif  // LCOMM_TESTS_HARNESS_HPP
