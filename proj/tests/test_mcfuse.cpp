// Copyright 2026 The xviewcorr Authors.
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

#include <cmath>

#include "support/oracles.hpp"
#include "xvc/condition_fusion.hpp"
#include "xvc/model.hpp"

namespace xvc {
namespace {

using testing::TestRng;
using Vec = std::vector<double>;

TEST(Fuse, ClosedFormTwoDimensional) {
  const Vec visual{1, 0}, text{0, 1}, identity{1, 0, 0, 1};
  const auto fused = residual_fuse<double>(visual, text, identity, 0.0);
  EXPECT_DOUBLE_EQ(fused[0], 1.0);
  EXPECT_DOUBLE_EQ(fused[1], 0.5);
}

TEST(Fuse, ResidualVanishesForVeryNegativeLogit) {
  TestRng rng(1);
  const auto visual = testing::random_vector(rng, 8), text = testing::random_vector(rng, 8);
  const auto proj = testing::random_vector(rng, 64);
  const auto fused = residual_fuse<double>(visual, text, proj, -30.0);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(fused[k], visual[k], 1e-9);
}

TEST(Fuse, ZeroTextLeavesVisualUntouched) {
  TestRng rng(2);
  const auto visual = testing::random_vector(rng, 8), proj = testing::random_vector(rng, 64);
  const Vec text(8, 0.0);
  EXPECT_EQ(residual_fuse<double>(visual, text, proj, 1.3), visual);
  const auto g = residual_fuse_backward<double>(testing::random_vector(rng, 8), text, proj, 1.3);
  EXPECT_EQ(g.logit, 0.0);
}

TEST(Fuse, DimensionMismatch) {
  const Vec a(4, 0.0), b(3, 0.0), p16(16, 0.0), p9(9, 0.0);
  EXPECT_THROW(residual_fuse<double>(a, b, p16, 0.0), DimensionMismatch);
  EXPECT_THROW(residual_fuse<double>(a, a, p9, 0.0), DimensionMismatch);
  EXPECT_THROW(residual_fuse_backward<double>(a, b, p16, 0.0), DimensionMismatch);
}

TEST(FuseBackward, VisualGradientIsTheIdentity) {
  TestRng rng(3);
  const auto g_out = testing::random_vector(rng, 8);
  const auto g = residual_fuse_backward<double>(g_out, testing::random_vector(rng, 8), testing::random_vector(rng, 64), 0.4);
  EXPECT_EQ(g.visual, g_out);
}

TEST(FuseBackward, MatchesFiniteDifferences) {
  TestRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto visual = testing::random_vector(rng, 8), text = testing::random_vector(rng, 8);
    auto proj = testing::random_vector(rng, 64);
    double logit = testing::rand_real(rng, -3, 3);
    const auto r = testing::random_vector(rng, 8);
    // L = sum_k r_k * fused_k^2 / 2.
    auto loss = [&] {
      const auto f = residual_fuse<double>(visual, text, proj, logit);
      double s = 0;
      for (int k = 0; k < 8; ++k) s += 0.5 * r[k] * f[k] * f[k];
      return s;
    };
    const auto f = residual_fuse<double>(visual, text, proj, logit);
    Vec g_out(8);
    for (int k = 0; k < 8; ++k) g_out[k] = r[k] * f[k];
    const auto g = residual_fuse_backward<double>(g_out, text, proj, logit);
    for (int k = 0; k < 8; ++k) {
      EXPECT_TRUE(testing::gradient_close(g.visual[k], testing::central_difference(loss, visual[k])));
      EXPECT_TRUE(testing::gradient_close(g.text[k], testing::central_difference(loss, text[k])));
    }
    for (int k = 0; k < 64; ++k) {
      EXPECT_TRUE(testing::gradient_close(g.projection[k], testing::central_difference(loss, proj[k])));
    }
    EXPECT_TRUE(testing::gradient_close(g.logit, testing::central_difference(loss, logit)));
  }
}

// Gram-Schmidt residual of v against an orthonormal basis.
Vec residual(Vec v, const std::vector<Vec>& basis) {
  for (const auto& q : basis) {
    double c = 0;
    for (std::size_t i = 0; i < v.size(); ++i) c += v[i] * q[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * q[i];
  }
  return v;
}

double norm(const Vec& v) {
  double s = 0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

TEST(Fuse, ResidualLiesInTheImageOfTheProjection) {
  constexpr int d = 6, rank = 2;
  TestRng rng(5);
  const auto u = testing::random_vector(rng, d * rank), v = testing::random_vector(rng, d * rank);
  Vec proj(d * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < rank; ++k) proj[i * d + j] += u[i * rank + k] * v[j * rank + k];
    }
  }
  std::vector<Vec> basis;
  for (int k = 0; k < rank; ++k) {
    Vec col(d);
    for (int i = 0; i < d; ++i) col[i] = u[i * rank + k];
    col = residual(col, basis);
    const double n = norm(col);
    for (auto& x : col) x /= n;
    basis.push_back(col);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto visual = testing::random_vector(rng, d), text = testing::random_vector(rng, d);
    const auto fused = residual_fuse<double>(visual, text, proj, testing::rand_real(rng, -4, 4));
    Vec diff(d);
    for (int i = 0; i < d; ++i) diff[i] = fused[i] - visual[i];
    EXPECT_LT(norm(residual(diff, basis)), 1e-12 * (1.0 + norm(diff)));
  }
}

TEST(FusionWeight, MonotoneAndInsideTheUnitInterval) {
  double prev = 0.0;
  for (double logit = -30.0; logit <= 30.0; logit += 0.25) {
    const double w = sigmoid(logit);
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 1.0);
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(ConditionFusion, StartsVisualDominantAndUsesTheStore) {
  Model<double> model;
  const auto& store = model.params();
  EXPECT_NEAR(model.fusion().weight(store), 1.0 / (1.0 + std::exp(2.0)), 1e-15);
  TestRng rng(6);
  const ConditionEmbedding<double> visual{testing::random_vector(rng, 64), Branch::Visual};
  const auto text = model.encoder().encode_text(store, 3);
  const auto fused = model.fusion().fuse(store, visual, text);
  EXPECT_EQ(fused.branch, Branch::Fused);
  EXPECT_EQ(fused.vector, residual_fuse<double>(visual.vector, text.vector,
                                                store[model.fusion().projection_slot()],
                                                store[model.fusion().logit_slot()][0]));
  auto grad = store.zeros();
  const auto g_out = testing::random_vector(rng, 64);
  const auto g = model.fusion().backward(store, g_out, text, grad);
  EXPECT_EQ(grad[store.slot(model.fusion().logit_slot()).offset], g.logit);
  EXPECT_EQ(model.params().slot(model.fusion().logit_slot()).group, ParamGroup::Fusion);
  EXPECT_EQ(model.params().slot(model.fusion().projection_slot()).group, ParamGroup::Fusion);
}

}  // namespace
}  // namespace xvc
