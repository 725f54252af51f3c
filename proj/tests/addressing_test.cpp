// Copyright 2026 The simct Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdint>

#include "simct/addressing.hpp"
#include "simct/hostgen.hpp"

namespace {

using namespace simct::addr;
using simct::ValidationError;

TEST(AddressMap, DefaultFieldPositions) {
  const AddressMapConfig m;
  EXPECT_EQ(m.vault_shift(), 7u);
  EXPECT_EQ(m.bank_shift(), 11u);
  EXPECT_EQ(m.row_shift(), 15u);
  EXPECT_EQ(m.vault_field(), 0xFull << 7);
  EXPECT_EQ(m.bank_field(), 0xFull << 11);
}

TEST(AddressMap, DecodeByHand) {
  // offset 0x25, vault 0xA, bank 0x3, row 0x1F.
  const std::uint64_t a = 0x25 | (0xAull << 7) | (0x3ull << 11) | (0x1Full << 15);
  const auto d = decode(a);
  EXPECT_EQ(d.block_offset, 0x25u);
  EXPECT_EQ(d.vault, 10u);
  EXPECT_EQ(d.bank, 3u);
  EXPECT_EQ(d.row_offset, 0x1Fu);
  EXPECT_EQ(encode(d), a);
}

TEST(AddressMap, SequentialBlocksWalkVaultsFirst) {
  for (unsigned i = 0; i < 40; ++i) {
    const auto d = decode(std::uint64_t{i} * 128);
    EXPECT_EQ(d.vault, i % 16);
    EXPECT_EQ(d.bank, (i / 16) % 16);
  }
}

TEST(AddressMap, SmallerBlocksShiftFields) {
  AddressMapConfig m;
  m.block_size_bytes = 32;
  const auto d = decode(0x20 * 3, m);
  EXPECT_EQ(d.vault, 3u);
  EXPECT_EQ(d.block_offset, 0u);
  m.block_size_bytes = 48;
  EXPECT_THROW(m.check(), ValidationError);
}

TEST(AddressMap, EncodeRejectsOutOfRangeFields) {
  EXPECT_THROW(encode({16, 0, 0, 0}), ValidationError);
  EXPECT_THROW(encode({0, 16, 0, 0}), ValidationError);
  EXPECT_THROW(encode({0, 0, 0, 128}), ValidationError);
  EXPECT_THROW(encode({0, 0, std::uint64_t{1} << 17, 0}), ValidationError);
}

TEST(AddressMap, RoundTripsRandomAddresses) {
  simct::host::Prng prng(99);
  for (unsigned block : {32u, 64u, 128u}) {
    AddressMapConfig m;
    m.block_size_bytes = block;
    for (int i = 0; i < 2000; ++i) {
      const std::uint64_t a = prng.next() & kCapacityMask;
      EXPECT_EQ(encode(decode(a, m), m), a);
    }
  }
}

TEST(PageFootprint, FourKibPageTouchesSixteenVaultsTwoBanks) {
  // 32 blocks of 128 B: all 16 vaults, two consecutive banks each.
  simct::host::Prng prng(7);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t page = (prng.next() & kCapacityMask) & ~(kPageBytes - 1);
    const auto fp = page_footprint(page);
    EXPECT_EQ(fp.size(), 32u);
    for (const auto& [v, b] : fp) EXPECT_LT(v, kVaults);
  }
  EXPECT_THROW(page_footprint(0x80), ValidationError);
}

TEST(Quadrants, FourVaultsEach) {
  EXPECT_EQ(quadrant_of(0), 0u);
  EXPECT_EQ(quadrant_of(3), 0u);
  EXPECT_EQ(quadrant_of(4), 1u);
  EXPECT_EQ(quadrant_of(15), 3u);
}

}  // namespace
