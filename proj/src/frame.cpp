// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcomm/frame.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace lcomm
{
const char* opcode_str(opcode_t op)
{
  switch (op) {
    case opcode_t::eager_send:
      return "EAGER_SEND";
    case opcode_t::eager_am:
      return "EAGER_AM";
    case opcode_t::rts:
      return "RTS";
    case opcode_t::cts:
      return "CTS";
    case opcode_t::rndv_data:
      return "RNDV_DATA";
    case opcode_t::put:
      return "PUT";
    case opcode_t::put_ack:
      return "PUT_ACK";
    case opcode_t::get_req:
      return "GET_REQ";
    case opcode_t::get_rep:
      return "GET_REP";
  }
  return "UNKNOWN";
}

void encode_header(const frame_header_t& h, std::byte* out)
{
  std::memcpy(out, FRAME_MAGIC.data(), 4);
  out[4] = std::byte{FRAME_VERSION};
  out[5] = static_cast<std::byte>(h.opcode);
  store_le<uint16_t>(out + 6, h.flags);
  store_le<uint32_t>(out + 8, h.src_rank);
  store_le<uint32_t>(out + 12, h.payload_len);
  store_le<uint64_t>(out + 16, h.tag);
  store_le<uint32_t>(out + 24, h.imm);
  store_le<uint32_t>(out + 28, h.rcomp);
  store_le<uint64_t>(out + 32, h.xfer_id);
}

frame_header_t decode_header(const std::byte* in)
{
  if (std::memcmp(in, FRAME_MAGIC.data(), 4) != 0)
    throw_fatal(errorcode_t::fatal_transport, "frame magic mismatch");
  if (in[4] != std::byte{FRAME_VERSION})
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("unsupported frame version {}",
                            static_cast<unsigned>(in[4])));
  auto op = static_cast<uint8_t>(in[5]);
  if (op < static_cast<uint8_t>(opcode_t::eager_send) ||
      op > static_cast<uint8_t>(opcode_t::get_rep))
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("unknown opcode {}", op));
  frame_header_t h;
  h.opcode = static_cast<opcode_t>(op);
  h.flags = load_le<uint16_t>(in + 6);
  h.src_rank = load_le<uint32_t>(in + 8);
  h.payload_len = load_le<uint32_t>(in + 12);
  h.tag = load_le<uint64_t>(in + 16);
  h.imm = load_le<uint32_t>(in + 24);
  h.rcomp = load_le<uint32_t>(in + 28);
  h.xfer_id = load_le<uint64_t>(in + 32);
  return h;
}

std::vector<std::byte> encode_frame(frame_header_t header,
                                    std::span<const std::byte> payload)
{
  header.payload_len = static_cast<uint32_t>(payload.size());
  std::vector<std::byte> out(FRAME_HEADER_SIZE + payload.size());
  encode_header(header, out.data());
  if (!payload.empty())
    std::memcpy(out.data() + FRAME_HEADER_SIZE, payload.data(),
                payload.size());
  return out;
}

frame_stream_t::frame_stream_t(size_t max_frame_size)
    : max_frame_(std::max(max_frame_size, FRAME_HEADER_SIZE)),
      buf_(std::max<size_t>(2 * max_frame_, 64 * 1024))
{
}

std::span<std::byte> frame_stream_t::prepare(size_t min_free)
{
  if (buf_.size() - end_ < min_free) {
    if (begin_ > 0) {
      std::memmove(buf_.data(), buf_.data() + begin_, end_ - begin_);
      end_ -= begin_;
      begin_ = 0;
    }
    if (buf_.size() - end_ < min_free) buf_.resize(end_ + min_free);
  }
  return {buf_.data() + end_, buf_.size() - end_};
}

void frame_stream_t::append(std::span<const std::byte> data)
{
  auto area = prepare(data.size());
  std::memcpy(area.data(), data.data(), data.size());
  commit(data.size());
}

std::optional<frame_view_t> frame_stream_t::peek() const
{
  size_t avail = end_ - begin_;
  if (avail < FRAME_HEADER_SIZE) return std::nullopt;
  const std::byte* p = buf_.data() + begin_;
  frame_header_t h = decode_header(p);
  size_t total = FRAME_HEADER_SIZE + h.payload_len;
  if (total > max_frame_)
    throw_fatal(errorcode_t::fatal_transport,
                fmt::format("frame of {} bytes exceeds the {}-byte limit",
                            total, max_frame_));
  if (avail < total) return std::nullopt;
  return frame_view_t{h, std::span<const std::byte>(p, total)};
}

}  // namespace lcomm
