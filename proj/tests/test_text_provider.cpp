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

#include "xvc/dataset.hpp"
#include "xvc/text_provider.hpp"

namespace xvc {
namespace {

std::vector<CorrespondenceSample> some_samples() {
  BenchmarkConfig cfg;
  cfg.n_train = 200;
  cfg.n_val = 1;
  return make_benchmark(cfg).train;
}

TEST(Describe, CleanTextIsTheCategory) {
  for (const auto& s : some_samples()) {
    const auto d = describe(s, 0.0, 3);
    EXPECT_EQ(d.token_id, s.category);
    EXPECT_EQ(d.source, TextSource::Oracle);
    EXPECT_GT(d.confidence, 0.0);
    EXPECT_LE(d.confidence, 1.0);
  }
}

TEST(Describe, PureNoiseIsAlwaysWrong) {
  for (const auto& s : some_samples()) {
    const auto d = describe(s, 1.0, 3);
    EXPECT_NE(d.token_id, s.category);
    EXPECT_GE(d.token_id, 0);
    EXPECT_LT(d.token_id, kNumCategories);
    EXPECT_EQ(d.source, TextSource::Noisy);
  }
}

TEST(Describe, NoiseRateIsRespected) {
  const auto samples = some_samples();
  int wrong = 0, draws = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& s : samples) {
      wrong += describe(s, 0.2, seed).token_id != s.category;
      ++draws;
    }
  }
  ASSERT_EQ(draws, 10000);
  EXPECT_NEAR(static_cast<double>(wrong) / draws, 0.2, 0.01);
}

TEST(Describe, DeterministicPerSampleAndSeed) {
  const auto samples = some_samples();
  for (const auto& s : samples) {
    EXPECT_EQ(describe(s, 0.5, 9).token_id, describe(s, 0.5, 9).token_id);
  }
}

// Offsets of the wrong token from the true one are uniform over 1..31.
TEST(Describe, WrongTokensAreUniform) {
  const auto samples = some_samples();
  std::vector<int> hits(kNumCategories, 0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& s : samples) {
      const int t = describe(s, 1.0, seed).token_id;
      ++hits[(t - s.category + kNumCategories) % kNumCategories];
    }
  }
  EXPECT_EQ(hits[0], 0);
  const double expected = 10000.0 / (kNumCategories - 1);
  double chi2 = 0;
  for (int k = 1; k < kNumCategories; ++k) chi2 += (hits[k] - expected) * (hits[k] - expected) / expected;
  // 99th percentile of chi-squared with 30 degrees of freedom.
  EXPECT_LT(chi2, 50.892);
}

TEST(Describe, ConfidenceIsObjectShareOfMaskedRegion) {
  for (const auto& s : some_samples()) {
    const auto d = describe(s, 0.0, 1);
    EXPECT_DOUBLE_EQ(d.confidence, static_cast<double>(area(s.query_mask)) /
                                       static_cast<double>(area(dilate(s.query_mask, kDescriptionContext))));
  }
}

TEST(Describe, Errors) {
  auto s = some_samples().front();
  EXPECT_THROW(describe(s, 1.5, 0), InvalidSpec);
  s.category = 40;
  EXPECT_THROW(describe(s, 0.0, 0), UnknownToken);
  s.category = 0;
  s.query_mask = BinaryMask(64, 64);
  EXPECT_THROW(describe(s, 0.0, 0), EmptyMask);
}

}  // namespace
}  // namespace xvc
