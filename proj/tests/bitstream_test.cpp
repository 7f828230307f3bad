// Copyright 2026 The hflic Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "hflic/bitstream.hpp"
#include "hflic/errors.hpp"
#include "test_util.hpp"

namespace hflic {
namespace {

using testing::random_image;

void expect_equal(const Tensor& a, const Tensor& b) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]) << i;
}

class BitstreamTest : public ::testing::Test {
 protected:
  Codec model{CodecConfig{}};
  Rng rng{31};
};

TEST_F(BitstreamTest, RoundTripIsExact) {
  for (auto [h, w] : {std::pair{128, 128}, std::pair{70, 100}, std::pair{64, 200}}) {
    const Tensor x = random_image(rng, h, w);
    const EncodeResult enc = encode_image(x, model);
    const Bitstream parsed = Bitstream::parse(enc.bitstream.serialize());
    const DecodeResult dec = decode_image(parsed, model);
    expect_equal(dec.z_hat, enc.z_hat);
    expect_equal(dec.y_hat, enc.y_hat);
    expect_equal(dec.image, enc.reconstruction);
    EXPECT_EQ(dec.image.shape(), x.shape());
    EXPECT_EQ(dec.sequential_passes, 10);
    EXPECT_EQ(dec.groups_complete, 5);
    const DecodeResult again = decode_image(parsed, model);
    expect_equal(again.image, dec.image);
  }
}

TEST_F(BitstreamTest, LengthTracksEstimate) {
  const Tensor x = random_image(rng, 128, 128);
  const EncodeResult enc = encode_image(x, model);
  const double actual = 8.0 * static_cast<double>(enc.bitstream.payload_bytes());
  const double estimate = enc.estimated_bits();
  EXPECT_LE(std::abs(actual - estimate), 0.01 * estimate + 256.0);
  EXPECT_GT(enc.bitstream.total_bytes(), enc.bitstream.payload_bytes());
}

TEST_F(BitstreamTest, HeaderErrors) {
  const EncodeResult enc = encode_image(random_image(rng, 64, 64), model);
  auto bytes = enc.bitstream.serialize();
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(Bitstream::parse(bad), HeaderError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(Bitstream::parse(bad), HeaderError);
  EXPECT_THROW(Bitstream::parse(std::span(bytes).first(10)), HeaderError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(Bitstream::parse(bad), HeaderError);

  CodecConfig other;
  other.init_seed = 99;
  Codec foreign(other);
  EXPECT_THROW(decode_image(enc.bitstream, foreign), ModelMismatchError);
}

TEST_F(BitstreamTest, CorruptionOnlyAffectsLaterGroups) {
  const EncodeResult enc = encode_image(random_image(rng, 128, 128), model);
  const GroupPartition& part = model.partition();
  for (int g = 0; g < part.count(); ++g) {
    Bitstream bs = enc.bitstream;
    auto& payload = bs.payloads[payload_index(g, CheckerboardPhase::kAnchor)];
    ASSERT_FALSE(payload.empty());
    payload[payload.size() / 2] ^= 0x5A;
    EXPECT_THROW(decode_image(bs, model), PayloadError);
    const DecodeResult dec = decode_image(bs, model, true);
    EXPECT_EQ(dec.groups_complete, g);
    ASSERT_TRUE(dec.failed_payload.has_value());
    EXPECT_EQ(*dec.failed_payload, payload_index(g, CheckerboardPhase::kAnchor));
    for (int c = 0; c < part.offset(g); ++c)
      for (std::size_t i = 0; i < dec.y_hat.shape().plane(); ++i)
        ASSERT_EQ(dec.y_hat.plane(0, c)[i], enc.y_hat.plane(0, c)[i]);
  }
}

TEST_F(BitstreamTest, TruncatedContainer) {
  const EncodeResult enc = encode_image(random_image(rng, 64, 64), model);
  auto bytes = enc.bitstream.serialize();
  bytes.resize(bytes.size() - enc.bitstream.payloads.back().size() / 2 - 1);
  const Bitstream bs = Bitstream::parse(bytes);
  ASSERT_TRUE(bs.truncated_payload.has_value());
  EXPECT_EQ(*bs.truncated_payload, bs.header.payload_count() - 1);
  EXPECT_THROW(decode_image(bs, model), PayloadError);
  EXPECT_EQ(decode_image(bs, model, true).groups_complete, 4);
}

TEST_F(BitstreamTest, RejectsInvalidImages) {
  Tensor x = random_image(rng, 64, 64);
  x.values()[0] = 1.5;
  EXPECT_THROW(encode_image(x, model), ValidationError);
  EXPECT_THROW(encode_image(Tensor(Shape{1, 1, 64, 64}), model), ConfigError);
}

TEST_F(BitstreamTest, TenGroupModelUsesTwentyPasses) {
  CodecConfig cfg;
  cfg.entropy.groups = GroupPartition::ten_groups_for(48).sizes();
  Codec ten(cfg);
  const EncodeResult enc = encode_image(random_image(rng, 64, 64), ten);
  const DecodeResult dec = decode_image(enc.bitstream, ten);
  EXPECT_EQ(dec.sequential_passes, 20);
  expect_equal(dec.y_hat, enc.y_hat);
}

TEST(Padding, SizeRule) {
  EXPECT_EQ(padded_size(1), 64);
  EXPECT_EQ(padded_size(64), 64);
  EXPECT_EQ(padded_size(65), 128);
}

}  // namespace
}  // namespace hflic
