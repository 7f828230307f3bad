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

#include "hflic/errors.hpp"
#include "hflic/model.hpp"
#include "hflic/transforms.hpp"
#include "test_util.hpp"

namespace hflic {
namespace {

using testing::central_difference;
using testing::relative_error;

TEST(InvertedBottleneck, ZeroProjectionIsIdentity) {
  Rng rng(3);
  InvertedBottleneck block(32, 2, Activation::kGelu, rng);
  block.zero_init_projection();
  const Tensor x = rng.normal_tensor(Shape{2, 32, 9, 7}, 0.0, 3.0);
  const Tensor y = block.forward(Var::constant(x)).value();
  for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_EQ(y.values()[i], x.values()[i]);
}

TEST(InvertedBottleneck, Shapes) {
  Rng rng(4);
  InvertedBottleneck block(32, 2, Activation::kGelu, rng);
  const Var x = Var::constant(rng.normal_tensor(Shape{1, 32, 16, 16}, 0.0, 1.0));
  EXPECT_EQ(block.hidden(x).shape(), (Shape{1, 64, 16, 16}));
  EXPECT_EQ(block.forward(x).shape(), (Shape{1, 32, 16, 16}));
}

TEST(InvertedBottleneck, ParameterCountMatchesLayerFormula) {
  Rng rng(5);
  InvertedBottleneck block(32, 2, Activation::kGelu, rng);
  ParameterList params;
  block.collect("ib", params);
  const std::size_t c = 32, h = 64;
  const std::size_t formula = (c * h + h) + (9 * h * h + h) + (h * c + c);
  EXPECT_EQ(formula, 41120u);
  EXPECT_EQ(parameter_count(params), formula);
}

TEST(InvertedBottleneck, ChannelMismatchThrows) {
  Rng rng(6);
  InvertedBottleneck block(32, 2, Activation::kGelu, rng);
  EXPECT_THROW(block.forward(Var::constant(Tensor(Shape{1, 16, 4, 4}))), ConfigError);
}

TEST(TransformConfig, Validation) {
  TransformConfig cfg;
  cfg.n_channels = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TransformConfig{};
  cfg.expansion_ratio = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TransformConfig{};
  cfg.blocks_per_stage = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(TransformConfig::desk().validate());
  EXPECT_NO_THROW(TransformConfig::full().validate());
}

class TransformsTest : public ::testing::Test {
 protected:
  TransformConfig cfg = TransformConfig::desk();
  Rng rng{11};
  AnalysisTransform g_a{cfg, rng};
  SynthesisTransform g_s{cfg, rng};
  HyperAnalysis h_a{cfg, rng};
  HyperSynthesis h_s{cfg, rng};
};

TEST_F(TransformsTest, AnalysisShapeAndDeterminism) {
  const Var x = Var::constant(rng.uniform_tensor(Shape{1, 3, 64, 64}, 0, 1));
  const Tensor a = g_a.forward(x).value();
  const Tensor b = g_a.forward(x).value();
  EXPECT_EQ(a.shape(), (Shape{1, 48, 4, 4}));
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]);
}

TEST_F(TransformsTest, AnalysisRejectsBadInput) {
  Tensor x(Shape{1, 3, 64, 64});
  x.values()[5] = std::nan("");
  EXPECT_THROW(g_a.forward(Var::constant(x)), ValidationError);
  EXPECT_THROW(g_a.forward(Var::constant(Tensor(Shape{1, 3, 40, 64}))), ConfigError);
  EXPECT_THROW(g_a.forward(Var::constant(Tensor(Shape{1, 4, 64, 64}))), ConfigError);
}

TEST_F(TransformsTest, SynthesisShapes) {
  EXPECT_EQ(g_s.forward(Var::constant(Tensor(Shape{1, 48, 4, 4}))).shape(), (Shape{1, 3, 64, 64}));
  EXPECT_THROW(g_s.forward(Var::constant(Tensor(Shape{1, 40, 4, 4}))), ConfigError);
  for (int hw : {64, 128, 192}) {
    const Var x = Var::constant(rng.uniform_tensor(Shape{1, 3, hw, 2 * hw}, 0, 1));
    EXPECT_EQ(g_s.forward(g_a.forward(x)).shape(), x.shape());
  }
}

TEST_F(TransformsTest, ZeroFinalLayerGivesBias) {
  g_s.zero_final_weights();
  const Tensor out = g_s.forward(Var::constant(Tensor(Shape{1, 48, 4, 4}))).value();
  const Tensor& bias = g_s.final_bias().value();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.shape().plane(); ++i) ASSERT_EQ(out.plane(0, c)[i], bias.values()[c]);
}

TEST_F(TransformsTest, HyperShapes) {
  const Var y = Var::constant(rng.normal_tensor(Shape{1, 48, 8, 8}, 0, 1));
  const Var z = h_a.forward(y);
  EXPECT_EQ(z.shape(), (Shape{1, 32, 2, 2}));
  EXPECT_EQ(h_s.forward(z).shape(), (Shape{1, 96, 8, 8}));
  const Tensor z2 = h_a.forward(y).value();
  for (std::size_t i = 0; i < z2.numel(); ++i) ASSERT_EQ(z2.values()[i], z.value().values()[i]);
}

TEST_F(TransformsTest, AnalysisGradientMatchesFiniteDifference) {
  Tensor x = rng.uniform_tensor(Shape{1, 3, 32, 32}, 0, 1);
  const Var xv = Var::parameter(x);
  backward(mean(g_a.forward(xv)));
  auto f = [&] {
    NoGradGuard g;
    return mean(g_a.forward(Var::constant(x))).item();
  };
  for (std::size_t i : {0u, 517u, 1500u, 3071u}) {
    const double fd = central_difference(x, i, f);
    EXPECT_LT(relative_error(xv.grad().values()[i], fd), 1e-4) << i;
  }
}

TEST_F(TransformsTest, HyperGradientMatchesFiniteDifference) {
  Tensor y = rng.normal_tensor(Shape{1, 48, 4, 4}, 0, 1);
  const Var yv = Var::parameter(y);
  backward(sum(h_s.forward(h_a.forward(yv))));
  auto f = [&] {
    NoGradGuard g;
    return sum(h_s.forward(h_a.forward(Var::constant(y)))).item();
  };
  for (std::size_t i : {3u, 100u, 700u}) {
    const double fd = central_difference(y, i, f, 1e-4);
    EXPECT_LT(relative_error(yv.grad().values()[i], fd), 1e-4) << i << " " << yv.grad().values()[i] << " " << fd;
  }
}

// Scalar loss sum(out * r) with random r, so no parameter can cancel out.
void expect_all_gradients(const ParameterList& params, const Var& out, Rng& rng) {
  const Var r = Var::constant(rng.normal_tensor(out.shape(), 0, 1));
  backward(sum(out * r));
  for (const auto& p : params) {
    ASSERT_FALSE(p.var.grad().empty()) << p.name;
    EXPECT_GT(p.var.grad().max_abs(), 0.0) << p.name;
  }
}

TEST(TransformGradients, EveryWeightParticipates) {
  TransformConfig cfg;
  cfg.use_attention = true;
  Rng rng(21);
  {
    AnalysisTransform t(cfg, rng);
    ParameterList ps;
    t.collect("g_a", ps);
    expect_all_gradients(ps, t.forward(Var::constant(rng.uniform_tensor(Shape{1, 3, 64, 64}, 0, 1))), rng);
  }
  {
    SynthesisTransform t(cfg, rng);
    ParameterList ps;
    t.collect("g_s", ps);
    expect_all_gradients(ps, t.forward(Var::constant(rng.normal_tensor(Shape{1, 48, 4, 4}, 0, 2))), rng);
  }
  {
    HyperAnalysis t(cfg, rng);
    ParameterList ps;
    t.collect("h_a", ps);
    expect_all_gradients(ps, t.forward(Var::constant(rng.normal_tensor(Shape{1, 48, 8, 8}, 0, 2))), rng);
  }
  {
    HyperSynthesis t(cfg, rng);
    ParameterList ps;
    t.collect("h_s", ps);
    expect_all_gradients(ps, t.forward(Var::constant(rng.normal_tensor(Shape{1, 32, 2, 2}, 0, 2))), rng);
  }
}

TEST(Codec, TrainingForwardReachesEveryParameter) {
  Codec codec{CodecConfig{}};
  Rng rng(22);
  const Var x = Var::constant(rng.uniform_tensor(Shape{2, 3, 64, 64}, 0, 1));
  const auto out = codec.forward(x, rng);
  backward(mean(square(out.x_hat - x)) * 1000.0 + out.bits_y + out.bits_z);
  for (const auto& p : codec.parameters()) ASSERT_FALSE(p.var.grad().empty()) << p.name;
}

TEST(Codec, ModelIdTracksWeights) {
  CodecConfig cfg;
  Codec a(cfg), b(cfg);
  EXPECT_EQ(a.model_id(), b.model_id());
  cfg.init_seed = 2;
  Codec c(cfg);
  EXPECT_NE(a.model_id(), c.model_id());
  c.copy_weights_from(a);
  EXPECT_NE(a.model_id(), c.model_id());  // config record differs
  CodecConfig round = CodecConfig::from_json(cfg.to_json());
  EXPECT_EQ(round.to_json(), cfg.to_json());
}

TEST(Codec, ConfigJsonRejectsGarbage) {
  EXPECT_THROW(CodecConfig::from_json("{nope"), ParseError);
}

}  // namespace
}  // namespace hflic
