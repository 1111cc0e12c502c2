// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "scenarios.hpp"

namespace lcomm::testing
{
namespace
{
TEST(Scenarios, LoopbackAndTcpAgree)
{
  auto log = run_scenarios_loopback();
  EXPECT_FALSE(log.empty());
  auto tlog = run_scenarios_tcp();
  ASSERT_EQ(log.size(), tlog.size());
  for (size_t i = 0; i < log.size(); ++i) ASSERT_EQ(log[i], tlog[i]) << i;
}
}  // namespace
}  // namespace lcomm::testing
