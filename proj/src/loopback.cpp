// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cassert>

#include "internal.hpp"

namespace lcomm
{
out_frame_t make_small_frame(frame_header_t header,
                             std::span<const std::byte> payload)
{
  assert(payload.size() <= SMALL_FRAME_SIZE - FRAME_HEADER_SIZE);
  out_frame_t f;
  header.payload_len = static_cast<uint32_t>(payload.size());
  encode_header(header, f.small.data());
  if (!payload.empty())
    std::memcpy(f.small.data() + FRAME_HEADER_SIZE, payload.data(),
                payload.size());
  f.size = static_cast<uint32_t>(FRAME_HEADER_SIZE + payload.size());
  return f;
}

out_frame_t make_packet_frame(owned_packet_t packet, frame_header_t header,
                              std::span<const std::byte> prefix,
                              std::span<const std::byte> data)
{
  out_frame_t f;
  f.packet = std::move(packet);
  std::byte* out = f.packet.data();
  header.payload_len = static_cast<uint32_t>(prefix.size() + data.size());
  encode_header(header, out);
  out += FRAME_HEADER_SIZE;
  if (!prefix.empty()) std::memcpy(out, prefix.data(), prefix.size());
  if (!data.empty()) std::memcpy(out + prefix.size(), data.data(), data.size());
  f.size = static_cast<uint32_t>(FRAME_HEADER_SIZE + header.payload_len);
  return f;
}

mailbox_t& loopback_fabric_t::mailbox(rank_t dst, uint32_t device_id,
                                      rank_t src, size_t capacity)
{
  std::lock_guard lock(mu_);
  auto& slot = boxes_[{dst, device_id, src}];
  if (!slot) slot = std::make_unique<mailbox_t>(capacity);
  return *slot;
}

void loopback_fabric_t::clear()
{
  std::lock_guard lock(mu_);
  boxes_.clear();
}

namespace
{
class loopback_link_t final : public link_t
{
 public:
  loopback_link_t(mailbox_t& out, mailbox_t& in) : out_(out), in_(in) {}

  bool completes_on_push() const noexcept override { return true; }

  push_result_t push(out_frame_t& frame, bool /*bounded*/) override
  {
    // The mailbox capacity is the depth limit for every frame kind;
    // control frames that do not fit are parked by the device.
    return out_.try_push(std::move(frame)) ? push_result_t::handed_off
                                           : push_result_t::full;
  }

  bool flush() override { return false; }

  bool poll(device_impl_t& device, size_t& budget) override
  {
    bool did = false;
    while (budget > 0) {
      auto f = in_.try_pop();
      if (!f) break;
      --budget;
      did = true;
      inbound_frame_t in;
      in.bytes = {f->bytes(), f->size};
      in.header = decode_header(f->bytes());
      in.packet = std::move(f->packet);
      // Every loopback frame that needs retention already sits in a
      // packet, so handling cannot ask for a retry here.
      [[maybe_unused]] bool ok = device.handle_frame(in);
      assert(ok);
    }
    return did;
  }

  size_t queued_frames() const override { return in_.size_approx(); }

 private:
  mailbox_t& out_;
  mailbox_t& in_;
};
}  // namespace

std::unique_ptr<link_t> make_loopback_link(loopback_fabric_t& fabric,
                                           rank_t self, rank_t peer,
                                           uint32_t device_id, size_t depth)
{
  auto& out = fabric.mailbox(peer, device_id, self, depth);
  auto& in = fabric.mailbox(self, device_id, peer, depth);
  return std::make_unique<loopback_link_t>(out, in);
}

}  // namespace lcomm
