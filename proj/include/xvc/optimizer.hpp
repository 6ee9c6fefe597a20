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

#include <cmath>
#include <set>
#include <vector>

#include "xvc/tensor.hpp"

namespace xvc {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// AdamW with decoupled weight decay. Only slots whose group is in
/// `trainable` are touched; everything else stays bit-identical.
template <typename T>
class AdamW {
 public:
  AdamW(const ParamStore<T>& store, AdamWConfig cfg, std::set<ParamGroup> trainable)
      : cfg_(cfg), trainable_(std::move(trainable)), m_(store.size(), 0.0), v_(store.size(), 0.0) {}

  void step(ParamStore<T>& store, const std::vector<T>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto& values = store.values();
    for (const auto& slot : store.slots()) {
      if (!trainable_.contains(slot.group)) continue;
      const double decay = slot.decay ? cfg_.weight_decay : 0.0;
      for (std::size_t i = slot.offset; i < slot.offset + slot.size; ++i) {
        const double g = static_cast<double>(grad[i]);
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        double p = static_cast<double>(values[i]);
        p -= cfg_.learning_rate * (mhat / (std::sqrt(vhat) + cfg_.epsilon) + decay * p);
        values[i] = static_cast<T>(p);
      }
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  AdamWConfig cfg_;
  std::set<ParamGroup> trainable_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace xvc
