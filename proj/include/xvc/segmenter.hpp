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

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "xvc/condition_encoder.hpp"
#include "xvc/errors.hpp"
#include "xvc/mask.hpp"
#include "xvc/tensor.hpp"

namespace xvc {

template <typename T>
struct SegPrediction {
  int logit_height = 0;
  int logit_width = 0;
  /// Per-pixel logits at stride 2, row-major.
  std::vector<T> mask_logits;
  T visibility_logit = 0;
  /// Nearest-neighbour upsample of (logit > 0) to full resolution.
  BinaryMask upsampled_mask;

  bool visible() const { return visibility_logit > T(0); }
};

/// Intermediate values of a forward pass needed by the backward pass.
template <typename T>
struct SegTrace {
  std::vector<T> fused;
  std::vector<T> condition;  // fused + mask token
  std::vector<T> global;     // mean pixel embedding
  std::vector<T> gated;      // fused * global
  std::vector<T> hidden_pre;
  std::vector<T> hidden;
  std::array<std::vector<T>, 3> level_means;
  std::array<std::vector<T>, 3> condition_in_level;  // W_l * condition
};

template <typename T>
struct MaskLoss {
  T value = 0;
  T bce = 0;
  T dice = 0;
  T visibility = 0;
  std::vector<T> d_logits;
  T d_visibility = 0;
};

/// Soft stride-2 target: fraction of each 2x2 block covered by the mask.
template <typename T>
std::vector<T> downsample_target(const BinaryMask& gt, int logit_height, int logit_width) {
  if (gt.height() != 2 * logit_height || gt.width() != 2 * logit_width) {
    throw DimensionMismatch("mask_loss: ground truth " + std::to_string(gt.height()) + "x" +
                            std::to_string(gt.width()) + " does not downsample to " +
                            std::to_string(logit_height) + "x" + std::to_string(logit_width));
  }
  std::vector<T> out(static_cast<std::size_t>(logit_height) * logit_width, T(0));
  for (int r = 0; r < logit_height; ++r) {
    for (int c = 0; c < logit_width; ++c) {
      int n = 0;
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) n += gt(2 * r + dr, 2 * c + dc) ? 1 : 0;
      }
      out[static_cast<std::size_t>(r) * logit_width + c] = static_cast<T>(n) / T(4);
    }
  }
  return out;
}

/// L_mask with its gradient. Visible targets: mean per-pixel BCE + Dice on
/// the mask logits plus BCE of the visibility logit against 1. Invisible
/// targets: only the visibility BCE against 0.
template <typename T>
MaskLoss<T> mask_loss(const SegPrediction<T>& pred, const BinaryMask* gt, bool gt_visible) {
  constexpr T kDiceSmooth = 1;
  MaskLoss<T> out;
  out.d_logits.assign(pred.mask_logits.size(), T(0));
  const T v = pred.visibility_logit;
  const T target_v = gt_visible ? T(1) : T(0);
  out.visibility = softplus(v) - v * target_v;
  out.d_visibility = sigmoid(v) - target_v;
  out.value = out.visibility;
  if (!gt_visible) return out;
  if (gt == nullptr) throw DimensionMismatch("mask_loss: visible target without a mask");

  const auto y = downsample_target<T>(*gt, pred.logit_height, pred.logit_width);
  const auto n = static_cast<T>(y.size());
  std::vector<T> p(y.size());
  T inter = 0, sum_p = 0, sum_y = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T x = pred.mask_logits[i];
    out.bce += softplus(x) - x * y[i];
    p[i] = sigmoid(x);
    inter += p[i] * y[i];
    sum_p += p[i];
    sum_y += y[i];
    out.d_logits[i] = (p[i] - y[i]) / n;
  }
  out.bce /= n;
  const T num = T(2) * inter + kDiceSmooth;
  const T den = sum_p + sum_y + kDiceSmooth;
  out.dice = T(1) - num / den;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T d_p = -(T(2) * y[i] * den - num) / (den * den);
    out.d_logits[i] += d_p * p[i] * (T(1) - p[i]);
  }
  out.value += out.bce + out.dice;
  return out;
}

/// Pixel decoder (lateral 1x1 projections merged top-down by nearest
/// upsampling into a stride-2 embedding map), one learnable mask token and a
/// two-layer visibility head.
///
/// The mask logit at pixel p is <E(p), fused + mask_token>. Because E is
/// linear in the features, the forward pass projects the condition into each
/// level instead of materializing E; `pixel_embeddings` gives the explicit map.
template <typename T>
class Segmenter {
 public:
  Segmenter() = default;

  Segmenter(ParamStore<T>& store, const ModelConfig& cfg) : cfg_(cfg) {
    const int d = cfg.embed_dim;
    for (int l = 0; l < 3; ++l) {
      const std::string p = "decoder.lateral" + std::to_string(l + 1);
      lateral_w_[l] = store.add(p + ".weight", ParamGroup::Decoder, {cfg.channels[l], d}, true);
      lateral_b_[l] = store.add(p + ".bias", ParamGroup::Decoder, {d}, false);
    }
    mask_token_ = store.add("mask_token", ParamGroup::MaskToken, {d}, false);
    vis_w1_ = store.add("visibility.fc1.weight", ParamGroup::Visibility, {d, d}, true);
    vis_b1_ = store.add("visibility.fc1.bias", ParamGroup::Visibility, {d}, false);
    vis_w2_ = store.add("visibility.fc2.weight", ParamGroup::Visibility, {d}, true);
    vis_b2_ = store.add("visibility.fc2.bias", ParamGroup::Visibility, {1}, false);
  }

  void init(ParamStore<T>& store, Rng& rng) const {
    const double d = cfg_.embed_dim;
    for (int l = 0; l < 3; ++l) {
      store.fill_normal(lateral_w_[l], rng, 1.0 / std::sqrt(static_cast<double>(cfg_.channels[l])));
      store.fill_normal(lateral_b_[l], rng, 0.01);
    }
    store.fill_normal(mask_token_, rng, 0.1 / std::sqrt(d));
    store.fill_normal(vis_w1_, rng, std::sqrt(2.0 / d));
    store.fill_normal(vis_b1_, rng, 0.01);
    store.fill_normal(vis_w2_, rng, 1.0 / std::sqrt(d));
    store[vis_b2_][0] = T(0);
  }

  SegPrediction<T> predict_mask(const ParamStore<T>& store, const Multiscale<T>& features,
                                const ConditionEmbedding<T>& fused, SegTrace<T>* trace = nullptr) const {
    const int d = cfg_.embed_dim;
    if (static_cast<int>(fused.vector.size()) != d) {
      throw DimensionMismatch("predict_mask: condition has " + std::to_string(fused.vector.size()) +
                              " entries, expected " + std::to_string(d));
    }
    check_features(features);
    SegTrace<T> local;
    SegTrace<T>& t = trace ? *trace : local;
    t.fused = fused.vector;
    t.condition = fused.vector;
    const auto token = store[mask_token_];
    for (int k = 0; k < d; ++k) t.condition[k] += token[k];

    T bias_term = 0;
    t.global.assign(d, T(0));
    for (int l = 0; l < 3; ++l) {
      const auto& f = features.levels[l];
      const auto w = store[lateral_w_[l]];
      const auto b = store[lateral_b_[l]];
      t.condition_in_level[l].assign(f.channels, T(0));
      t.level_means[l].assign(f.channels, T(0));
      for (int i = 0; i < f.channels; ++i) {
        T acc = 0;
        for (int k = 0; k < d; ++k) acc += w[static_cast<std::size_t>(i) * d + k] * t.condition[k];
        t.condition_in_level[l][i] = acc;
      }
      const std::size_t cells = static_cast<std::size_t>(f.height) * f.width;
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const T* px = f.data.data() + cell * f.channels;
        for (int i = 0; i < f.channels; ++i) t.level_means[l][i] += px[i];
      }
      for (auto& m : t.level_means[l]) m /= static_cast<T>(cells);
      for (int i = 0; i < f.channels; ++i) {
        for (int k = 0; k < d; ++k) t.global[k] += t.level_means[l][i] * w[static_cast<std::size_t>(i) * d + k];
      }
      for (int k = 0; k < d; ++k) {
        t.global[k] += b[k];
        bias_term += b[k] * t.condition[k];
      }
    }

    SegPrediction<T> out;
    const auto& f0 = features.levels[0];
    out.logit_height = f0.height;
    out.logit_width = f0.width;
    out.mask_logits.assign(static_cast<std::size_t>(f0.height) * f0.width, bias_term);
    for (int l = 0; l < 3; ++l) {
      const auto& f = features.levels[l];
      const int up = f0.height / f.height;
      std::vector<T> coarse(static_cast<std::size_t>(f.height) * f.width);
      for (std::size_t cell = 0; cell < coarse.size(); ++cell) {
        const T* px = f.data.data() + cell * f.channels;
        T acc = 0;
        for (int i = 0; i < f.channels; ++i) acc += px[i] * t.condition_in_level[l][i];
        coarse[cell] = acc;
      }
      for (int r = 0; r < f0.height; ++r) {
        for (int c = 0; c < f0.width; ++c) {
          out.mask_logits[static_cast<std::size_t>(r) * f0.width + c] +=
              coarse[static_cast<std::size_t>(r / up) * f.width + c / up];
        }
      }
    }

    // Visibility head on (fused * mean pixel embedding).
    const auto w1 = store[vis_w1_];
    const auto b1 = store[vis_b1_];
    const auto w2 = store[vis_w2_];
    t.gated.resize(d);
    for (int k = 0; k < d; ++k) t.gated[k] = fused.vector[k] * t.global[k];
    t.hidden_pre.assign(b1.begin(), b1.end());
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < d; ++k) t.hidden_pre[k] += t.gated[i] * w1[static_cast<std::size_t>(i) * d + k];
    }
    t.hidden.resize(d);
    out.visibility_logit = store[vis_b2_][0];
    for (int k = 0; k < d; ++k) {
      t.hidden[k] = std::max(t.hidden_pre[k], T(0));
      out.visibility_logit += w2[k] * t.hidden[k];
    }

    out.upsampled_mask = upsample_mask(out.mask_logits, f0.height, f0.width);
    return out;
  }

  /// Backpropagates logit and visibility gradients. Returns the gradient on
  /// the fused condition; optionally accumulates feature gradients.
  std::vector<T> backward(const ParamStore<T>& store, const Multiscale<T>& features, const SegTrace<T>& t,
                          std::span<const T> d_logits, T d_visibility, std::vector<T>& grad,
                          Multiscale<T>* d_features = nullptr) const {
    const int d = cfg_.embed_dim;
    const auto& f0 = features.levels[0];
    std::vector<T> d_condition(d, T(0));
    std::vector<T> d_fused(d, T(0));
    T d_logit_sum = 0;
    for (const T g : d_logits) d_logit_sum += g;

    // Visibility head.
    const auto w1 = store[vis_w1_];
    const auto w2 = store[vis_w2_];
    auto gw1 = slice(grad, store.slot(vis_w1_));
    auto gb1 = slice(grad, store.slot(vis_b1_));
    auto gw2 = slice(grad, store.slot(vis_w2_));
    slice(grad, store.slot(vis_b2_))[0] += d_visibility;
    std::vector<T> d_hidden_pre(d, T(0));
    for (int k = 0; k < d; ++k) {
      gw2[k] += d_visibility * t.hidden[k];
      d_hidden_pre[k] = t.hidden_pre[k] > T(0) ? d_visibility * w2[k] : T(0);
      gb1[k] += d_hidden_pre[k];
    }
    std::vector<T> d_gated(d, T(0));
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < d; ++k) {
        gw1[static_cast<std::size_t>(i) * d + k] += t.gated[i] * d_hidden_pre[k];
        d_gated[i] += w1[static_cast<std::size_t>(i) * d + k] * d_hidden_pre[k];
      }
    }
    std::vector<T> d_global(d);
    for (int k = 0; k < d; ++k) {
      d_fused[k] += d_gated[k] * t.global[k];
      d_global[k] = d_gated[k] * t.fused[k];
    }

    for (int l = 0; l < 3; ++l) {
      const auto& f = features.levels[l];
      const int up = f0.height / f.height;
      const auto w = store[lateral_w_[l]];
      auto gw = slice(grad, store.slot(lateral_w_[l]));
      auto gb = slice(grad, store.slot(lateral_b_[l]));

      // Sum of logit gradients landing on each coarse cell.
      std::vector<T> cell_grad(static_cast<std::size_t>(f.height) * f.width, T(0));
      for (int r = 0; r < f0.height; ++r) {
        for (int c = 0; c < f0.width; ++c) {
          cell_grad[static_cast<std::size_t>(r / up) * f.width + c / up] +=
              d_logits[static_cast<std::size_t>(r) * f0.width + c];
        }
      }
      std::vector<T> s(f.channels, T(0));
      for (std::size_t cell = 0; cell < cell_grad.size(); ++cell) {
        const T* px = f.data.data() + cell * f.channels;
        for (int i = 0; i < f.channels; ++i) s[i] += px[i] * cell_grad[cell];
      }
      for (int i = 0; i < f.channels; ++i) {
        for (int k = 0; k < d; ++k) {
          const auto idx = static_cast<std::size_t>(i) * d + k;
          gw[idx] += s[i] * t.condition[k] + t.level_means[l][i] * d_global[k];
          d_condition[k] += w[idx] * s[i];
        }
      }
      const auto b = store[lateral_b_[l]];
      for (int k = 0; k < d; ++k) {
        gb[k] += d_logit_sum * t.condition[k] + d_global[k];
        d_condition[k] += d_logit_sum * b[k];
      }

      if (d_features) {
        auto& df = d_features->levels[l];
        std::vector<T> w_dglobal(f.channels, T(0));
        for (int i = 0; i < f.channels; ++i) {
          for (int k = 0; k < d; ++k) w_dglobal[i] += w[static_cast<std::size_t>(i) * d + k] * d_global[k];
        }
        const T inv_cells = T(1) / static_cast<T>(cell_grad.size());
        for (std::size_t cell = 0; cell < cell_grad.size(); ++cell) {
          T* g = df.data.data() + cell * f.channels;
          for (int i = 0; i < f.channels; ++i) {
            g[i] += cell_grad[cell] * t.condition_in_level[l][i] + w_dglobal[i] * inv_cells;
          }
        }
      }
    }

    auto gt = slice(grad, store.slot(mask_token_));
    for (int k = 0; k < d; ++k) {
      gt[k] += d_condition[k];
      d_fused[k] += d_condition[k];
    }
    return d_fused;
  }

  /// Explicit stride-2 pixel embedding map (H/2 x W/2 x d).
  FeatureMap<T> pixel_embeddings(const ParamStore<T>& store, const Multiscale<T>& features) const {
    const int d = cfg_.embed_dim;
    const auto& f0 = features.levels[0];
    FeatureMap<T> e(f0.height, f0.width, d);
    for (int l = 0; l < 3; ++l) {
      const auto& f = features.levels[l];
      const int up = f0.height / f.height;
      const auto w = store[lateral_w_[l]];
      const auto b = store[lateral_b_[l]];
      for (int r = 0; r < f0.height; ++r) {
        for (int c = 0; c < f0.width; ++c) {
          const T* px = f.pixel(r / up, c / up);
          T* o = e.pixel(r, c);
          for (int k = 0; k < d; ++k) o[k] += b[k];
          for (int i = 0; i < f.channels; ++i) {
            for (int k = 0; k < d; ++k) o[k] += px[i] * w[static_cast<std::size_t>(i) * d + k];
          }
        }
      }
    }
    return e;
  }

  std::size_t mask_token_slot() const { return mask_token_; }

 private:
  void check_features(const Multiscale<T>& features) const {
    for (int l = 0; l < 3; ++l) {
      const auto& f = features.levels[l];
      const int stride = 2 << l;
      if (f.channels != cfg_.channels[l] || f.height * stride != cfg_.height || f.width * stride != cfg_.width) {
        throw DimensionMismatch("predict_mask: feature level " + std::to_string(l + 1) + " has shape " +
                                std::to_string(f.height) + "x" + std::to_string(f.width) + "x" +
                                std::to_string(f.channels));
      }
    }
  }

  BinaryMask upsample_mask(const std::vector<T>& logits, int h, int w) const {
    BinaryMask m(2 * h, 2 * w);
    for (int r = 0; r < 2 * h; ++r) {
      for (int c = 0; c < 2 * w; ++c) {
        if (logits[static_cast<std::size_t>(r / 2) * w + c / 2] > T(0)) m.set(r, c);
      }
    }
    return m;
  }

  ModelConfig cfg_;
  std::array<std::size_t, 3> lateral_w_{}, lateral_b_{};
  std::size_t mask_token_ = 0;
  std::size_t vis_w1_ = 0, vis_b1_ = 0, vis_w2_ = 0, vis_b2_ = 0;
};

}  // namespace xvc
