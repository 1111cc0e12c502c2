// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_CORE_HPP
#define LCOMM_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace lcomm
{
using rank_t = uint32_t;
using tag_t = uint64_t;
using rcomp_t = uint32_t;
using rkey_t = uint64_t;

// Wildcards. Only meaningful inside match keys.
inline constexpr rank_t ANY_RANK = ~rank_t{0};
inline constexpr tag_t ANY_TAG = ~tag_t{0};

// Largest values that fit the 32-bit immediate word.
inline constexpr tag_t MAX_IMM_TAG = 0xFFFF;
inline constexpr rcomp_t MAX_IMM_RCOMP = 0x7FFF;

// "No remote completion".
inline constexpr rcomp_t RCOMP_NULL = 0;

enum class errorcode_t : uint8_t {
  ok,
  retry,
  fatal_bad_arg,
  fatal_exhausted,
  fatal_transport,
  fatal_in_use,
  fatal_double_free,
  fatal_truncate,
  fatal_bad_rkey,
  fatal_oob,
  fatal_cq_full,
  fatal_bad_rcomp,
  fatal_sync_overflow,
  fatal_payload_mismatch,
};

const char* errorcode_str(errorcode_t code);

inline bool is_fatal(errorcode_t code)
{
  return code != errorcode_t::ok && code != errorcode_t::retry;
}

// Every unrecoverable condition surfaces as this exception.
class fatal_error : public std::runtime_error
{
 public:
  fatal_error(errorcode_t code, const std::string& what);
  errorcode_t code() const noexcept { return code_; }

 private:
  errorcode_t code_;
};

[[noreturn]] void throw_fatal(errorcode_t code, const std::string& msg);

/////////////////////////////////////////////////////////////////////////////
// Immediate data: kind (1 bit) | rcomp (15 bits) | tag (16 bits), MSB first.
/////////////////////////////////////////////////////////////////////////////
struct imm_data_t {
  uint32_t raw = 0;
  friend bool operator==(imm_data_t, imm_data_t) = default;
};

struct imm_fields_t {
  uint16_t tag16 = 0;
  uint16_t rcomp = 0;
  uint8_t kind = 0;
  friend bool operator==(const imm_fields_t&, const imm_fields_t&) = default;
};

// Throws fatal_bad_arg when a field does not fit its width.
imm_data_t encode_imm(uint64_t tag16, uint64_t rcomp, uint64_t kind);

constexpr imm_fields_t decode_imm(imm_data_t imm) noexcept
{
  return imm_fields_t{static_cast<uint16_t>(imm.raw & 0xFFFFu),
                      static_cast<uint16_t>((imm.raw >> 16) & 0x7FFFu),
                      static_cast<uint8_t>(imm.raw >> 31)};
}

/////////////////////////////////////////////////////////////////////////////
// Matching keys and policies
/////////////////////////////////////////////////////////////////////////////
struct match_key_t {
  rank_t rank = ANY_RANK;
  tag_t tag = ANY_TAG;
  friend bool operator==(const match_key_t&, const match_key_t&) = default;
};

struct match_key_hash_t {
  size_t operator()(const match_key_t& key) const noexcept
  {
    uint64_t h = key.tag * 0x9E3779B97F4A7C15ull;
    h ^= (static_cast<uint64_t>(key.rank) + 0x632BE59BD9B4E019ull) +
         (h << 6) + (h >> 2);
    return static_cast<size_t>(h ^ (h >> 29));
  }
};

// Componentwise equal-or-ANY.
constexpr bool keys_compatible(const match_key_t& a, const match_key_t& b)
{
  return (a.rank == b.rank || a.rank == ANY_RANK || b.rank == ANY_RANK) &&
         (a.tag == b.tag || a.tag == ANY_TAG || b.tag == ANY_TAG);
}

enum class match_policy_kind_t : uint8_t {
  none = 0,
  rank_only = 1,
  tag_only = 2,
  rank_tag = 3,
  custom = 4,
};

const char* match_policy_str(match_policy_kind_t kind);
match_policy_kind_t parse_match_policy(const std::string& name);

using match_fn_t = std::function<match_key_t(rank_t, tag_t)>;

class match_policy_t
{
 public:
  match_policy_t() = default;
  match_policy_t(match_policy_kind_t kind) : kind_(kind) {}  // NOLINT
  static match_policy_t custom(match_fn_t fn)
  {
    match_policy_t p(match_policy_kind_t::custom);
    p.fn_ = std::move(fn);
    return p;
  }

  match_policy_kind_t kind() const noexcept { return kind_; }
  const match_fn_t& fn() const noexcept { return fn_; }
  bool uses_rank() const noexcept
  {
    return kind_ == match_policy_kind_t::rank_only ||
           kind_ == match_policy_kind_t::rank_tag;
  }
  bool uses_tag() const noexcept
  {
    return kind_ == match_policy_kind_t::tag_only ||
           kind_ == match_policy_kind_t::rank_tag;
  }

 private:
  match_policy_kind_t kind_ = match_policy_kind_t::rank_tag;
  match_fn_t fn_;
};

match_key_t make_match_key(rank_t rank, tag_t tag,
                           const match_policy_t& policy);

/////////////////////////////////////////////////////////////////////////////
// Completion records
/////////////////////////////////////////////////////////////////////////////
enum class op_kind_t : uint8_t {
  send,
  recv,
  am_send,
  am_recv,
  put,
  get,
  put_signal,
};

const char* op_kind_str(op_kind_t kind);

class mr_impl_t;

struct buffer_desc_t {
  void* base = nullptr;
  size_t length = 0;
  const mr_impl_t* registration = nullptr;
};

struct status_t {
  op_kind_t op = op_kind_t::send;
  rank_t rank = 0;
  tag_t tag = 0;
  buffer_desc_t buffer;
  void* user_context = nullptr;
  // Remote completion handle carried by put_signal / am_recv records.
  rcomp_t rcomp = RCOMP_NULL;
  errorcode_t error = errorcode_t::ok;
  // Keeps runtime-provided receive buffers (active messages) alive.
  std::shared_ptr<void> data_owner;
};

}  // namespace lcomm

#endif  // LCOMM_CORE_HPP
