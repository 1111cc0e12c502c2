// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_LCOMM_HPP
#define LCOMM_LCOMM_HPP

#include "lcomm/attributes.hpp"
#include "lcomm/completion.hpp"
#include "lcomm/core.hpp"
#include "lcomm/frame.hpp"
#include "lcomm/matching.hpp"
#include "lcomm/ops.hpp"
#include "lcomm/packet_pool.hpp"
#include "lcomm/runtime.hpp"

#endif  // LCOMM_LCOMM_HPP
