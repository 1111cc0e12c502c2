// Copyright (c) 2026 The lcomm Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "lcomm/core.hpp"

namespace lcomm
{
namespace
{
// Independent reference: builds the word with arithmetic rather than
// shifts and masks.
uint32_t imm_oracle(uint32_t tag16, uint32_t rcomp, uint32_t kind)
{
  return kind * 2147483648u + rcomp * 65536u + tag16;
}

TEST(Imm, WorkedExamples)
{
  EXPECT_EQ(encode_imm(0, 0, 0).raw, 0x00000000u);
  EXPECT_EQ(encode_imm(0xFFFF, 0x7FFF, 1).raw, 0xFFFFFFFFu);
  EXPECT_EQ(encode_imm(5, 3, 1).raw, 0x80030005u);
  EXPECT_EQ(decode_imm(imm_data_t{0x80030005u}), (imm_fields_t{5, 3, 1}));
  EXPECT_EQ(decode_imm(imm_data_t{0xFFFFFFFFu}),
            (imm_fields_t{0xFFFF, 0x7FFF, 1}));
}

TEST(Imm, FieldsOutOfRangeAreRejected)
{
  for (auto [t, r, k] : {std::tuple<uint64_t, uint64_t, uint64_t>{0x10000, 0, 0},
                         {0, 0x8000, 0},
                         {0, 0, 2},
                         {~0ull, 0, 0}}) {
    try {
      encode_imm(t, r, k);
      FAIL() << "accepted " << t << "," << r << "," << k;
    } catch (const fatal_error& e) {
      EXPECT_EQ(e.code(), errorcode_t::fatal_bad_arg);
    }
  }
}

TEST(Imm, BoundaryRoundTrip)
{
  const uint32_t tags[] = {0, 1, 0x7FFF, 0x8000, 0xFFFE, 0xFFFF};
  const uint32_t rcomps[] = {0, 1, 0x3FFF, 0x4000, 0x7FFE, 0x7FFF};
  for (uint32_t t : tags)
    for (uint32_t r : rcomps)
      for (uint32_t k : {0u, 1u}) {
        auto imm = encode_imm(t, r, k);
        ASSERT_EQ(imm.raw, imm_oracle(t, r, k));
        auto f = decode_imm(imm);
        ASSERT_EQ(f.tag16, t);
        ASSERT_EQ(f.rcomp, r);
        ASSERT_EQ(f.kind, k);
      }
}

TEST(Imm, RandomWordsDecodeAndReencode)
{
  std::mt19937 rng(7);
  for (int i = 0; i < 100000; ++i) {
    uint32_t w = rng();
    auto f = decode_imm(imm_data_t{w});
    ASSERT_EQ(w, imm_oracle(f.tag16, f.rcomp, f.kind));
    ASSERT_EQ(encode_imm(f.tag16, f.rcomp, f.kind).raw, w);
  }
}

TEST(MatchKey, PolicyProjections)
{
  EXPECT_EQ(make_match_key(3, 9, match_policy_kind_t::rank_tag),
            (match_key_t{3, 9}));
  EXPECT_EQ(make_match_key(3, 9, match_policy_kind_t::rank_only),
            (match_key_t{3, ANY_TAG}));
  EXPECT_EQ(make_match_key(3, 9, match_policy_kind_t::tag_only),
            (match_key_t{ANY_RANK, 9}));
  EXPECT_EQ(make_match_key(3, 9, match_policy_kind_t::none),
            (match_key_t{ANY_RANK, ANY_TAG}));
  auto custom = match_policy_t::custom(
      [](rank_t r, tag_t t) { return match_key_t{r, t & 0xF}; });
  EXPECT_EQ(make_match_key(3, 0x39, custom), (match_key_t{3, 9}));
  EXPECT_THROW(make_match_key(1, 1, match_policy_kind_t::custom), fatal_error);
}

TEST(MatchKey, Compatibility)
{
  EXPECT_TRUE(keys_compatible({1, 2}, {1, 2}));
  EXPECT_FALSE(keys_compatible({1, 2}, {1, 3}));
  EXPECT_FALSE(keys_compatible({1, 2}, {0, 2}));
  EXPECT_TRUE(keys_compatible({ANY_RANK, 2}, {7, 2}));
  EXPECT_TRUE(keys_compatible({7, ANY_TAG}, {7, 123}));
  EXPECT_TRUE(keys_compatible({ANY_RANK, ANY_TAG}, {5, 5}));
  EXPECT_FALSE(keys_compatible({ANY_RANK, 2}, {7, 3}));
}

TEST(MatchPolicy, NamesRoundTrip)
{
  for (auto k : {match_policy_kind_t::none, match_policy_kind_t::rank_only,
                 match_policy_kind_t::tag_only, match_policy_kind_t::rank_tag,
                 match_policy_kind_t::custom})
    EXPECT_EQ(parse_match_policy(match_policy_str(k)), k);
  EXPECT_THROW(parse_match_policy("bogus"), fatal_error);
}

TEST(Errors, FatalCarriesCode)
{
  try {
    throw_fatal(errorcode_t::fatal_oob, "x");
  } catch (const fatal_error& e) {
    EXPECT_EQ(e.code(), errorcode_t::fatal_oob);
    EXPECT_NE(std::string(e.what()).find("x"), std::string::npos);
  }
  EXPECT_TRUE(is_fatal(errorcode_t::fatal_transport));
  EXPECT_FALSE(is_fatal(errorcode_t::retry));
  EXPECT_FALSE(is_fatal(errorcode_t::ok));
}

}  // namespace
}  // namespace lcomm
