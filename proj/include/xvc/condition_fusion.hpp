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
#include <span>
#include <vector>

#include "xvc/condition_encoder.hpp"
#include "xvc/errors.hpp"
#include "xvc/tensor.hpp"

namespace xvc {

/// Gradients of `fused = visual + w * (P text)`, w = sigmoid(logit).
template <typename T>
struct FusionGradients {
  std::vector<T> visual;
  std::vector<T> text;
  std::vector<T> projection;  // d x d, row-major
  T logit = 0;
};

/// fused = visual + sigmoid(logit) * (projection * text). The visual branch
/// is primary; the text branch enters through the residual term.
template <typename T>
std::vector<T> residual_fuse(std::span<const T> visual, std::span<const T> text,
                             std::span<const T> projection, T logit) {
  const std::size_t d = visual.size();
  if (text.size() != d || projection.size() != d * d) {
    throw DimensionMismatch("fuse: visual " + std::to_string(d) + ", text " + std::to_string(text.size()) +
                            ", projection " + std::to_string(projection.size()));
  }
  const T w = sigmoid(logit);
  std::vector<T> out(visual.begin(), visual.end());
  for (std::size_t i = 0; i < d; ++i) {
    T acc = 0;
    for (std::size_t j = 0; j < d; ++j) acc += projection[i * d + j] * text[j];
    out[i] += w * acc;
  }
  return out;
}

template <typename T>
FusionGradients<T> residual_fuse_backward(std::span<const T> grad_out, std::span<const T> text,
                                          std::span<const T> projection, T logit) {
  const std::size_t d = grad_out.size();
  if (text.size() != d || projection.size() != d * d) {
    throw DimensionMismatch("fuse_backward: shapes do not match the output gradient");
  }
  const T w = sigmoid(logit);
  FusionGradients<T> g;
  g.visual.assign(grad_out.begin(), grad_out.end());
  g.text.assign(d, T(0));
  g.projection.assign(d * d, T(0));
  T residual_dot = 0;
  for (std::size_t i = 0; i < d; ++i) {
    T pt = 0;
    for (std::size_t j = 0; j < d; ++j) {
      pt += projection[i * d + j] * text[j];
      g.projection[i * d + j] = w * grad_out[i] * text[j];
      g.text[j] += w * projection[i * d + j] * grad_out[i];
    }
    residual_dot += grad_out[i] * pt;
  }
  g.logit = w * (T(1) - w) * residual_dot;
  return g;
}

/// Learnable residual fusion of the visual and text condition embeddings.
template <typename T>
class ConditionFusion {
 public:
  static constexpr double kInitialLogit = -2.0;

  ConditionFusion() = default;

  ConditionFusion(ParamStore<T>& store, const ModelConfig& cfg) : dim_(cfg.embed_dim) {
    projection_ = store.add("fusion.text_projection", ParamGroup::Fusion, {dim_, dim_}, true);
    logit_ = store.add("fusion.logit", ParamGroup::Fusion, {1}, false);
  }

  void init(ParamStore<T>& store, Rng& rng) const {
    store.fill_normal(projection_, rng, 1.0 / std::sqrt(static_cast<double>(dim_)));
    store[logit_][0] = static_cast<T>(kInitialLogit);
  }

  ConditionEmbedding<T> fuse(const ParamStore<T>& store, const ConditionEmbedding<T>& visual,
                             const ConditionEmbedding<T>& text) const {
    return {residual_fuse<T>(visual.vector, text.vector, store[projection_], store[logit_][0]), Branch::Fused};
  }

  /// Accumulates projection/logit gradients; returns the gradients for the
  /// visual and text inputs.
  FusionGradients<T> backward(const ParamStore<T>& store, std::span<const T> grad_out,
                              const ConditionEmbedding<T>& text, std::vector<T>& grad) const {
    auto g = residual_fuse_backward<T>(grad_out, text.vector, store[projection_], store[logit_][0]);
    auto gp = slice(grad, store.slot(projection_));
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g.projection[i];
    slice(grad, store.slot(logit_))[0] += g.logit;
    return g;
  }

  T weight(const ParamStore<T>& store) const { return sigmoid(store[logit_][0]); }

  std::size_t projection_slot() const { return projection_; }
  std::size_t logit_slot() const { return logit_; }

 private:
  int dim_ = 0;
  std::size_t projection_ = 0;
  std::size_t logit_ = 0;
};

}  // namespace xvc
