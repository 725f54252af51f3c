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
 * @file addressing.hpp
 * @brief Low-order-interleaved address map.
 *
 * Address bits from low to high:
 *
 *   [ block offset : log2(B) ][ vault : 4 ][ bank : 4 ][ row offset : rest ]
 *
 * Only the low 32 bits are decoded (4 GiB); bits 32 and 33 of the 34-bit
 * request address are ignored. Sequential blocks therefore walk through all
 * 16 vaults before advancing the bank.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <set>
#include <string>
#include <utility>

#include "simct/error.hpp"

namespace simct::addr {

inline constexpr unsigned kVaultBits = 4;
inline constexpr unsigned kBankBits = 4;
inline constexpr unsigned kVaults = 1u << kVaultBits;
inline constexpr unsigned kBanksPerVault = 1u << kBankBits;
inline constexpr unsigned kQuadrants = 4;
inline constexpr unsigned kVaultsPerQuadrant = kVaults / kQuadrants;
inline constexpr std::uint64_t kCapacityBytes = std::uint64_t{4} << 30;
inline constexpr std::uint64_t kCapacityMask = kCapacityBytes - 1;
inline constexpr std::uint64_t kBankBytes = kCapacityBytes / (kVaults * kBanksPerVault);
inline constexpr std::uint64_t kPageBytes = 4096;

struct AddressMapConfig {
  unsigned block_size_bytes = 128;

  void check() const {
    if (block_size_bytes != 32 && block_size_bytes != 64 && block_size_bytes != 128) {
      throw ValidationError("block size must be 32, 64 or 128 bytes, got " +
                            std::to_string(block_size_bytes));
    }
  }
  unsigned offset_bits() const { return static_cast<unsigned>(std::countr_zero(block_size_bytes)); }
  unsigned vault_shift() const { return offset_bits(); }
  unsigned bank_shift() const { return offset_bits() + kVaultBits; }
  unsigned row_shift() const { return offset_bits() + kVaultBits + kBankBits; }

  /// Address bits selecting the vault / bank, for building masks.
  std::uint64_t vault_field() const { return std::uint64_t{kVaults - 1} << vault_shift(); }
  std::uint64_t bank_field() const { return std::uint64_t{kBanksPerVault - 1} << bank_shift(); }
};

struct DecodedAddress {
  unsigned vault = 0;
  unsigned bank = 0;
  std::uint64_t row_offset = 0;    ///< Block index within the bank's rows.
  std::uint32_t block_offset = 0;  ///< Byte offset inside the block.

  friend bool operator==(const DecodedAddress&, const DecodedAddress&) = default;
};

inline unsigned quadrant_of(unsigned vault) { return vault / kVaultsPerQuadrant; }

inline DecodedAddress decode(std::uint64_t address, const AddressMapConfig& cfg = {}) {
  const std::uint64_t a = address & kCapacityMask;
  DecodedAddress d;
  d.block_offset = static_cast<std::uint32_t>(a & (cfg.block_size_bytes - 1));
  d.vault = static_cast<unsigned>((a >> cfg.vault_shift()) & (kVaults - 1));
  d.bank = static_cast<unsigned>((a >> cfg.bank_shift()) & (kBanksPerVault - 1));
  d.row_offset = a >> cfg.row_shift();
  return d;
}

inline std::uint64_t encode(const DecodedAddress& d, const AddressMapConfig& cfg = {}) {
  cfg.check();
  if (d.vault >= kVaults) throw ValidationError("vault " + std::to_string(d.vault) + " out of range");
  if (d.bank >= kBanksPerVault) throw ValidationError("bank " + std::to_string(d.bank) + " out of range");
  if (d.block_offset >= cfg.block_size_bytes) throw ValidationError("block offset out of range");
  if (d.row_offset >= (kCapacityBytes >> cfg.row_shift())) throw ValidationError("row offset out of range");
  return std::uint64_t{d.block_offset} | (std::uint64_t{d.vault} << cfg.vault_shift()) |
         (std::uint64_t{d.bank} << cfg.bank_shift()) | (d.row_offset << cfg.row_shift());
}

/// Distinct (vault, bank) pairs touched by the blocks of one 4 KiB page.
inline std::set<std::pair<unsigned, unsigned>> page_footprint(std::uint64_t page_address,
                                                              const AddressMapConfig& cfg = {}) {
  cfg.check();
  if (page_address % kPageBytes != 0) throw ValidationError("page address is not 4 KiB aligned");
  std::set<std::pair<unsigned, unsigned>> pairs;
  for (std::uint64_t off = 0; off < kPageBytes; off += cfg.block_size_bytes) {
    const auto d = decode(page_address + off, cfg);
    pairs.emplace(d.vault, d.bank);
  }
  return pairs;
}

}  // namespace simct::addr
