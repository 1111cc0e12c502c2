// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/core.hpp"

#include <fmt/format.h>

namespace lcomm
{
const char* errorcode_str(errorcode_t code)
{
  switch (code) {
    case errorcode_t::ok:
      return "ok";
    case errorcode_t::retry:
      return "retry";
    case errorcode_t::fatal_bad_arg:
      return "fatal_bad_arg";
    case errorcode_t::fatal_exhausted:
      return "fatal_exhausted";
    case errorcode_t::fatal_transport:
      return "fatal_transport";
    case errorcode_t::fatal_in_use:
      return "fatal_in_use";
    case errorcode_t::fatal_double_free:
      return "fatal_double_free";
    case errorcode_t::fatal_truncate:
      return "fatal_truncate";
    case errorcode_t::fatal_bad_rkey:
      return "fatal_bad_rkey";
    case errorcode_t::fatal_oob:
      return "fatal_oob";
    case errorcode_t::fatal_cq_full:
      return "fatal_cq_full";
    case errorcode_t::fatal_bad_rcomp:
      return "fatal_bad_rcomp";
    case errorcode_t::fatal_sync_overflow:
      return "fatal_sync_overflow";
    case errorcode_t::fatal_payload_mismatch:
      return "fatal_payload_mismatch";
  }
  return "unknown";
}

fatal_error::fatal_error(errorcode_t code, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", errorcode_str(code), what)),
      code_(code)
{
}

void throw_fatal(errorcode_t code, const std::string& msg)
{
  throw fatal_error(code, msg);
}

imm_data_t encode_imm(uint64_t tag16, uint64_t rcomp, uint64_t kind)
{
  if (tag16 > MAX_IMM_TAG || rcomp > MAX_IMM_RCOMP || kind > 1)
    throw_fatal(errorcode_t::fatal_bad_arg,
                fmt::format("immediate field out of range (tag={} rcomp={} "
                            "kind={})",
                            tag16, rcomp, kind));
  return imm_data_t{static_cast<uint32_t>((kind << 31) | (rcomp << 16) |
                                          tag16)};
}

const char* match_policy_str(match_policy_kind_t kind)
{
  switch (kind) {
    case match_policy_kind_t::none:
      return "none";
    case match_policy_kind_t::rank_only:
      return "rank_only";
    case match_policy_kind_t::tag_only:
      return "tag_only";
    case match_policy_kind_t::rank_tag:
      return "rank_tag";
    case match_policy_kind_t::custom:
      return "custom";
  }
  return "unknown";
}

match_policy_kind_t parse_match_policy(const std::string& name)
{
  for (auto kind :
       {match_policy_kind_t::none, match_policy_kind_t::rank_only,
        match_policy_kind_t::tag_only, match_policy_kind_t::rank_tag,
        match_policy_kind_t::custom}) {
    if (name == match_policy_str(kind)) return kind;
  }
  throw_fatal(errorcode_t::fatal_bad_arg,
              fmt::format("unknown match policy '{}'", name));
}

match_key_t make_match_key(rank_t rank, tag_t tag,
                           const match_policy_t& policy)
{
  switch (policy.kind()) {
    case match_policy_kind_t::none:
      return {ANY_RANK, ANY_TAG};
    case match_policy_kind_t::rank_only:
      return {rank, ANY_TAG};
    case match_policy_kind_t::tag_only:
      return {ANY_RANK, tag};
    case match_policy_kind_t::rank_tag:
      return {rank, tag};
    case match_policy_kind_t::custom:
      if (!policy.fn())
        throw_fatal(errorcode_t::fatal_bad_arg,
                    "custom match policy without a key function");
      return policy.fn()(rank, tag);
  }
  throw_fatal(errorcode_t::fatal_bad_arg, "unknown match policy");
}

const char* op_kind_str(op_kind_t kind)
{
  switch (kind) {
    case op_kind_t::send:
      return "send";
    case op_kind_t::recv:
      return "recv";
    case op_kind_t::am_send:
      return "am_send";
    case op_kind_t::am_recv:
      return "am_recv";
    case op_kind_t::put:
      return "put";
    case op_kind_t::get:
      return "get";
    case op_kind_t::put_signal:
      return "put_signal";
  }
  return "unknown";
}

}  // namespace lcomm
