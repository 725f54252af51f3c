/*
 * Copyright 2026 The simct Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file protocol.hpp
 * @brief Flits, packet kinds, sizing rules and the canonical wire layout.
 *
 * Every packet is one overhead flit followed by 0..8 payload flits. The
 * overhead flit carries the 8-byte head in its low half and the 8-byte tail
 * in its high half; flit 0 is the least-significant flit and goes first.
 *
 * Head (little-endian u64):
 *
 *   bits  0..7   command code
 *   bits  8..19  tag
 *   bits 20..53  address (34 bits; zero for everything but requests)
 *   bits 54..57  payload length in flits
 *   bits 58..63  reserved, zero
 *
 * Tail (little-endian u64): bits 0..31 are flow-control fields, always zero
 * here; bits 32..63 hold a fixed integrity placeholder (no CRC is computed).
 *
 * Command codes follow the HMC numbering: RD16..RD128 = 0x30..0x37,
 * WR16..WR128 = 0x08..0x0F, read response 0x38, write response 0x39, token
 * return (flow) 0x02. The field widths are this project's convention; they
 * are not a statement about the silicon bit layout.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simct/error.hpp"
#include "simct/simkernel.hpp"

namespace simct::protocol {

inline constexpr std::size_t kFlitBytes = 16;
inline constexpr unsigned kMaxPayloadFlits = 8;
inline constexpr unsigned kTagBits = 12;
inline constexpr unsigned kAddressBits = 34;
inline constexpr std::uint64_t kAddressMask = (std::uint64_t{1} << kAddressBits) - 1;
inline constexpr std::uint32_t kIntegrityPlaceholder = 0x484D4331;  // "HMC1"

using Flit = std::array<std::uint8_t, kFlitBytes>;

enum class PacketKind : std::uint8_t { Flow, Request, Response };
enum class Command : std::uint8_t { None, Read, Write };

/// A flit-counted packet. `data_bytes` is the transaction size: the amount
/// requested by a read request, or carried by a write request / read
/// response. `issue_time` is simulation metadata and is not serialized.
struct Packet {
  PacketKind kind = PacketKind::Flow;
  Command command = Command::None;
  std::uint16_t tag = 0;
  std::uint64_t address = 0;
  std::uint8_t payload_flits = 0;
  std::uint16_t data_bytes = 0;
  sim::SimTime issue_time = 0;

  /// Wire-visible equality; issue_time is ignored.
  friend bool operator==(const Packet& a, const Packet& b) {
    return a.kind == b.kind && a.command == b.command && a.tag == b.tag &&
           a.address == b.address && a.payload_flits == b.payload_flits &&
           a.data_bytes == b.data_bytes;
  }
};

inline bool is_flit_multiple(unsigned bytes) {
  return bytes > 0 && bytes % kFlitBytes == 0 && bytes / kFlitBytes <= kMaxPayloadFlits;
}

/// Throws ValidationError unless `p` satisfies the per-kind sizing rules.
inline void validate(const Packet& p) {
  auto fail = [](const std::string& why) { throw ValidationError("malformed packet: " + why); };
  if (p.tag >= (1u << kTagBits)) fail("tag exceeds 12 bits");
  if (p.address > kAddressMask) fail("address exceeds 34 bits");
  if (p.payload_flits > kMaxPayloadFlits) fail("more than 8 payload flits");
  switch (p.kind) {
    case PacketKind::Flow:
      if (p.command != Command::None) fail("flow packet with a command");
      if (p.payload_flits != 0 || p.data_bytes != 0) fail("flow packet with payload");
      if (p.address != 0) fail("flow packet with an address");
      return;
    case PacketKind::Request:
      if (p.command == Command::Read) {
        if (p.payload_flits != 0) fail("read request with payload");
        if (!is_flit_multiple(p.data_bytes)) fail("read size not 16..128 in 16 B steps");
      } else if (p.command == Command::Write) {
        if (p.payload_flits == 0) fail("write request without payload");
        if (p.data_bytes != p.payload_flits * kFlitBytes) fail("write size/payload mismatch");
      } else {
        fail("request without a command");
      }
      return;
    case PacketKind::Response:
      if (p.address != 0) fail("response with an address");
      if (p.command == Command::Read) {
        if (p.payload_flits == 0) fail("read response without payload");
        if (p.data_bytes != p.payload_flits * kFlitBytes) fail("read size/payload mismatch");
      } else if (p.command == Command::Write) {
        if (p.payload_flits != 0 || p.data_bytes != 0) fail("write response with payload");
      } else {
        fail("response without a command");
      }
      return;
  }
  fail("unknown kind");
}

/// Payload plus the single overhead flit.
inline unsigned total_flits(const Packet& p) {
  validate(p);
  return p.payload_flits + 1u;
}

inline unsigned total_bytes(const Packet& p) { return total_flits(p) * kFlitBytes; }

/// Fraction of a read response that is data.
inline double efficiency(unsigned payload_bytes) {
  if (payload_bytes != 16 && payload_bytes != 32 && payload_bytes != 64 && payload_bytes != 128) {
    throw ValidationError("unsupported payload size " + std::to_string(payload_bytes));
  }
  return static_cast<double>(payload_bytes) / static_cast<double>(payload_bytes + kFlitBytes);
}

inline Packet make_read_request(std::uint16_t tag, std::uint64_t address, unsigned bytes) {
  Packet p{PacketKind::Request, Command::Read, tag, address & kAddressMask, 0,
           static_cast<std::uint16_t>(bytes), 0};
  validate(p);
  return p;
}

inline Packet make_write_request(std::uint16_t tag, std::uint64_t address, unsigned bytes) {
  Packet p{PacketKind::Request,
           Command::Write,
           tag,
           address & kAddressMask,
           static_cast<std::uint8_t>(bytes / kFlitBytes),
           static_cast<std::uint16_t>(bytes),
           0};
  validate(p);
  return p;
}

/// Response for a request: same tag and command, data only for reads.
inline Packet make_response(const Packet& request) {
  if (request.kind != PacketKind::Request) throw ValidationError("response to a non-request");
  Packet p;
  p.kind = PacketKind::Response;
  p.command = request.command;
  p.tag = request.tag;
  p.issue_time = request.issue_time;
  if (request.command == Command::Read) {
    p.payload_flits = static_cast<std::uint8_t>(request.data_bytes / kFlitBytes);
    p.data_bytes = request.data_bytes;
  }
  validate(p);
  return p;
}

inline Packet make_flow() { return Packet{}; }

namespace detail {

inline constexpr std::uint8_t kFlowTret = 0x02;
inline constexpr std::uint8_t kWriteBase = 0x08;
inline constexpr std::uint8_t kReadBase = 0x30;
inline constexpr std::uint8_t kReadResponse = 0x38;
inline constexpr std::uint8_t kWriteResponse = 0x39;

inline std::uint8_t command_code(const Packet& p) {
  switch (p.kind) {
    case PacketKind::Flow:
      return kFlowTret;
    case PacketKind::Request:
      return static_cast<std::uint8_t>(
          (p.command == Command::Read ? kReadBase : kWriteBase) + p.data_bytes / kFlitBytes - 1);
    case PacketKind::Response:
      return p.command == Command::Read ? kReadResponse : kWriteResponse;
  }
  return 0;
}

inline void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Canonical wire bytes; payload flits are zero-filled since data values are
/// not modeled.
inline std::vector<std::uint8_t> encode(const Packet& p) {
  const unsigned flits = total_flits(p);
  std::vector<std::uint8_t> out(flits * kFlitBytes, 0);
  const std::uint64_t head = static_cast<std::uint64_t>(detail::command_code(p)) |
                             (static_cast<std::uint64_t>(p.tag) << 8) |
                             (static_cast<std::uint64_t>(p.address) << 20) |
                             (static_cast<std::uint64_t>(p.payload_flits) << 54);
  const std::uint64_t tail = static_cast<std::uint64_t>(kIntegrityPlaceholder) << 32;
  detail::put_u64(out.data(), head);
  detail::put_u64(out.data() + 8, tail);
  return out;
}

inline Packet decode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty() || bytes.size() % kFlitBytes != 0) {
    throw FramingError("packet of " + std::to_string(bytes.size()) + " bytes is not flit-aligned");
  }
  const std::uint64_t head = detail::get_u64(bytes.data());
  const std::uint64_t tail = detail::get_u64(bytes.data() + 8);
  if ((head >> 58) != 0) throw FramingError("reserved head bits set");
  if (tail != static_cast<std::uint64_t>(kIntegrityPlaceholder) << 32) {
    throw FramingError("tail does not match the integrity placeholder");
  }
  const auto code = static_cast<std::uint8_t>(head & 0xFF);
  Packet p;
  p.tag = static_cast<std::uint16_t>((head >> 8) & 0xFFF);
  p.address = (head >> 20) & kAddressMask;
  p.payload_flits = static_cast<std::uint8_t>((head >> 54) & 0xF);

  if (code == detail::kFlowTret) {
    p.kind = PacketKind::Flow;
  } else if (code >= detail::kReadBase && code < detail::kReadBase + kMaxPayloadFlits) {
    p.kind = PacketKind::Request;
    p.command = Command::Read;
    p.data_bytes = static_cast<std::uint16_t>((code - detail::kReadBase + 1) * kFlitBytes);
  } else if (code >= detail::kWriteBase && code < detail::kWriteBase + kMaxPayloadFlits) {
    p.kind = PacketKind::Request;
    p.command = Command::Write;
    p.data_bytes = static_cast<std::uint16_t>((code - detail::kWriteBase + 1) * kFlitBytes);
  } else if (code == detail::kReadResponse) {
    p.kind = PacketKind::Response;
    p.command = Command::Read;
    p.data_bytes = static_cast<std::uint16_t>(p.payload_flits * kFlitBytes);
  } else if (code == detail::kWriteResponse) {
    p.kind = PacketKind::Response;
    p.command = Command::Write;
  } else {
    throw FramingError("unknown command code " + std::to_string(code));
  }

  const std::size_t expected = (p.payload_flits + 1u) * kFlitBytes;
  if (bytes.size() < expected) throw FramingError("truncated packet");
  if (bytes.size() > expected) throw FramingError("oversized packet");
  try {
    validate(p);
  } catch (const ValidationError& e) {
    throw FramingError(e.what());
  }
  return p;
}

}  // namespace simct::protocol
