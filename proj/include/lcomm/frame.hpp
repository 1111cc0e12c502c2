// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCOMM_FRAME_HPP
#define LCOMM_FRAME_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <vector>

#include "lcomm/core.hpp"

namespace lcomm
{
// Wire layout, little-endian, 40 bytes:
//   magic[4]="LCI2" version:u8 opcode:u8 flags:u16 src_rank:u32
//   payload_len:u32 tag:u64 imm:u32 rcomp:u32 xfer_id:u64
inline constexpr size_t FRAME_HEADER_SIZE = 40;
inline constexpr uint8_t FRAME_VERSION = 1;
inline constexpr std::array<std::byte, 4> FRAME_MAGIC = {
    std::byte{'L'}, std::byte{'C'}, std::byte{'I'}, std::byte{'2'}};

enum class opcode_t : uint8_t {
  eager_send = 1,
  eager_am = 2,
  rts = 3,
  cts = 4,
  rndv_data = 5,
  put = 6,
  put_ack = 7,
  get_req = 8,
  get_rep = 9,
};

const char* opcode_str(opcode_t op);

namespace frame_flag
{
// 64-bit tag and 32-bit rcomp header fields are authoritative; imm unused.
inline constexpr uint16_t meta_in_payload = 1u << 0;
// RTS belongs to an active message rather than a send.
inline constexpr uint16_t active_message = 1u << 1;
}  // namespace frame_flag

// Bytes preceding user data in PUT and GET_REQ payloads.
inline constexpr size_t RMA_PREFIX_SIZE = 16;

struct frame_header_t {
  opcode_t opcode = opcode_t::eager_send;
  uint16_t flags = 0;
  uint32_t src_rank = 0;
  uint32_t payload_len = 0;
  uint64_t tag = 0;
  uint32_t imm = 0;
  uint32_t rcomp = 0;
  uint64_t xfer_id = 0;
  friend bool operator==(const frame_header_t&, const frame_header_t&) =
      default;
};

template <typename T>
inline void store_le(std::byte* out, T value)
{
  for (size_t i = 0; i < sizeof(T); ++i)
    out[i] = static_cast<std::byte>((static_cast<uint64_t>(value) >> (8 * i)) &
                                    0xFF);
}

template <typename T>
inline T load_le(const std::byte* in)
{
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<uint64_t>(in[i]) << (8 * i);
  return static_cast<T>(v);
}

void encode_header(const frame_header_t& header, std::byte* out);
// Throws fatal_transport on bad magic, version, or opcode.
frame_header_t decode_header(const std::byte* in);
// Header (payload_len taken from payload.size()) followed by payload.
std::vector<std::byte> encode_frame(frame_header_t header,
                                    std::span<const std::byte> payload);

struct frame_view_t {
  frame_header_t header;
  std::span<const std::byte> bytes;  // header + payload
  std::span<const std::byte> payload() const
  {
    return bytes.subspan(FRAME_HEADER_SIZE);
  }
};

// Reassembles frames from an arbitrarily split byte stream. There is no
// resynchronization: a corrupt header is fatal.
class frame_stream_t
{
 public:
  explicit frame_stream_t(size_t max_frame_size);

  // Writable tail of at least min_free bytes.
  std::span<std::byte> prepare(size_t min_free);
  void commit(size_t n) { end_ += n; }
  void append(std::span<const std::byte> data);

  // Next complete frame, if any. Valid until the next prepare/append.
  std::optional<frame_view_t> peek() const;
  void consume(const frame_view_t& frame) { begin_ += frame.bytes.size(); }

  size_t buffered() const noexcept { return end_ - begin_; }
  size_t max_frame_size() const noexcept { return max_frame_; }

 private:
  size_t max_frame_;
  std::vector<std::byte> buf_;
  size_t begin_ = 0;
  size_t end_ = 0;
};

}  // namespace lcomm

#endif  // LCOMM_FRAME_HPP
