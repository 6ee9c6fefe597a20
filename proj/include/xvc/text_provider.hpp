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

#pragma once

#include <cstdint>

#include "xvc/dataset.hpp"
#include "xvc/errors.hpp"
#include "xvc/mask.hpp"
#include "xvc/random.hpp"

namespace xvc {

enum class TextSource { Oracle, Noisy };

struct TextDescription {
  int token_id = 0;
  /// Share of the masked input region (query mask dilated by
  /// kDescriptionContext pixels) that the object itself covers.
  double confidence = 0.0;
  TextSource source = TextSource::Oracle;
};

inline constexpr int kDescriptionContext = 2;

/// Category description of the query object, standing in for a
/// vision-language model that only sees the masked query region. With
/// probability `noise_rate` the description is a uniformly drawn wrong token.
inline TextDescription describe(const CorrespondenceSample& sample, double noise_rate, std::uint64_t seed) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw InvalidSpec("noise_rate must be in [0, 1]");
  if (sample.category < 0 || sample.category >= kNumCategories) {
    throw UnknownToken("sample category " + std::to_string(sample.category));
  }
  const auto object_area = area(sample.query_mask);
  if (object_area == 0) throw EmptyMask("describe: empty query mask");

  TextDescription out;
  out.confidence = static_cast<double>(object_area) /
                   static_cast<double>(area(dilate(sample.query_mask, kDescriptionContext)));

  Rng rng(derive_seed(seed, sample.key()));
  if (uniform(rng) < noise_rate) {
    out.token_id = (sample.category + 1 + uniform_int(rng, 0, kNumCategories - 2)) % kNumCategories;
    out.source = TextSource::Noisy;
  } else {
    out.token_id = sample.category;
    out.source = TextSource::Oracle;
  }
  return out;
}

}  // namespace xvc
