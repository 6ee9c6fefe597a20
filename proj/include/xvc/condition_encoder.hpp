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

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "xvc/dataset.hpp"
#include "xvc/errors.hpp"
#include "xvc/image.hpp"
#include "xvc/mask.hpp"
#include "xvc/tensor.hpp"

namespace xvc {

/// Architecture hyperparameters shared by every module and stored in
/// checkpoint headers.
struct ModelConfig {
  int height = 64;
  int width = 64;
  int embed_dim = 64;
  std::array<int, 3> channels{16, 32, 64};
  int vocab_size = kNumCategories;
  /// Condition = visual + fused text when true; visual only otherwise.
  bool fusion_enabled = true;
};

enum class Branch { Visual, Text, Fused };

template <typename T>
struct ConditionEmbedding {
  std::vector<T> vector;
  Branch branch = Branch::Visual;
};

/// Three feature levels at strides 2, 4 and 8.
template <typename T>
struct Multiscale {
  std::array<FeatureMap<T>, 3> levels;
};

template <typename T>
struct BackboneTrace {
  FeatureMap<T> input;
  std::array<FeatureMap<T>, 3> pre_activation;
};

template <typename T>
FeatureMap<T> image_to_features(const Image& image) {
  if (image.height() % 8 != 0 || image.width() % 8 != 0) {
    throw DimensionMismatch("frame dimensions must be multiples of 8, got " +
                            std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  FeatureMap<T> f(image.height(), image.width(), Image::kChannels);
  for (std::size_t i = 0; i < image.data().size(); ++i) {
    const float v = image.data()[i];
    if (!(v >= 0.0f && v <= 1.0f)) throw BadInputRange("frame value outside [0, 1]");
    f.data[i] = static_cast<T>(v);
  }
  return f;
}

/// Three stages of conv3x3 (same padding) -> ReLU -> 2x2 average pool.
template <typename T>
class VisualBackbone {
 public:
  VisualBackbone() = default;

  VisualBackbone(ParamStore<T>& store, const ModelConfig& cfg) {
    int in = Image::kChannels;
    for (int l = 0; l < 3; ++l) {
      const int out = cfg.channels[l];
      const std::string p = "backbone.stage" + std::to_string(l + 1);
      weight_[l] = store.add(p + ".weight", ParamGroup::Backbone, {3, 3, in, out}, true);
      bias_[l] = store.add(p + ".bias", ParamGroup::Backbone, {out}, false);
      in_ch_[l] = in;
      out_ch_[l] = out;
      in = out;
    }
  }

  void init(ParamStore<T>& store, Rng& rng) const {
    for (int l = 0; l < 3; ++l) {
      store.fill_normal(weight_[l], rng, std::sqrt(2.0 / (9.0 * in_ch_[l])));
      store.fill_normal(bias_[l], rng, 0.02);
    }
  }

  /// Radius in input pixels beyond which a pixel cannot influence a
  /// deepest-level cell, measured from the cell's own input block.
  static constexpr int receptive_field() {
    int field = 1, jump = 1;
    for (int l = 0; l < 3; ++l) {
      field += 2 * jump;  // conv3x3
      field += jump;      // 2x2 pool
      jump *= 2;
    }
    return field;
  }

  Multiscale<T> forward(const ParamStore<T>& store, const FeatureMap<T>& input,
                        BackboneTrace<T>* trace = nullptr) const {
    Multiscale<T> out;
    const FeatureMap<T>* x = &input;
    if (trace) trace->input = input;
    for (int l = 0; l < 3; ++l) {
      FeatureMap<T> z = conv(store, l, *x);
      FeatureMap<T> y = pool_relu(z);
      if (trace) trace->pre_activation[l] = std::move(z);
      out.levels[l] = std::move(y);
      x = &out.levels[l];
    }
    return out;
  }

  /// Accumulates parameter gradients given gradients on all three levels.
  void backward(const ParamStore<T>& store, const BackboneTrace<T>& trace, Multiscale<T> d_levels,
                std::vector<T>& grad) const {
    for (int l = 2; l >= 0; --l) {
      const FeatureMap<T>& z = trace.pre_activation[l];
      const FeatureMap<T> x = l == 0 ? trace.input : pool_relu(trace.pre_activation[l - 1]);
      const FeatureMap<T>& dy = d_levels.levels[l];
      FeatureMap<T> dz(z.height, z.width, z.channels);
      for (int r = 0; r < z.height; ++r) {
        for (int c = 0; c < z.width; ++c) {
          const T* g = dy.pixel(r / 2, c / 2);
          const T* zi = z.pixel(r, c);
          T* o = dz.pixel(r, c);
          for (int k = 0; k < z.channels; ++k) o[k] = zi[k] > T(0) ? g[k] * T(0.25) : T(0);
        }
      }
      FeatureMap<T>* dx = l == 0 ? nullptr : &d_levels.levels[l - 1];
      conv_backward(store, l, x, dz, grad, dx);
    }
  }

  std::size_t weight_slot(int l) const { return weight_[l]; }
  std::size_t bias_slot(int l) const { return bias_[l]; }

 private:
  static FeatureMap<T> pool_relu(const FeatureMap<T>& z) {
    FeatureMap<T> y(z.height / 2, z.width / 2, z.channels);
    for (int r = 0; r < y.height; ++r) {
      for (int c = 0; c < y.width; ++c) {
        T* o = y.pixel(r, c);
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) {
            const T* zi = z.pixel(2 * r + dr, 2 * c + dc);
            for (int k = 0; k < z.channels; ++k) o[k] += std::max(zi[k], T(0));
          }
        }
        for (int k = 0; k < z.channels; ++k) o[k] *= T(0.25);
      }
    }
    return y;
  }

  FeatureMap<T> conv(const ParamStore<T>& store, int l, const FeatureMap<T>& x) const {
    const int cin = in_ch_[l], cout = out_ch_[l];
    const auto w = store[weight_[l]];
    const auto b = store[bias_[l]];
    FeatureMap<T> z(x.height, x.width, cout);
    for (int r = 0; r < x.height; ++r) {
      for (int c = 0; c < x.width; ++c) {
        T* o = z.pixel(r, c);
        std::copy(b.begin(), b.end(), o);
        for (int dr = 0; dr < 3; ++dr) {
          const int rr = r + dr - 1;
          if (rr < 0 || rr >= x.height) continue;
          for (int dc = 0; dc < 3; ++dc) {
            const int cc = c + dc - 1;
            if (cc < 0 || cc >= x.width) continue;
            const T* xi = x.pixel(rr, cc);
            const T* wk = w.data() + static_cast<std::size_t>(dr * 3 + dc) * cin * cout;
            for (int i = 0; i < cin; ++i) {
              const T v = xi[i];
              const T* wi = wk + static_cast<std::size_t>(i) * cout;
              for (int k = 0; k < cout; ++k) o[k] += v * wi[k];
            }
          }
        }
      }
    }
    return z;
  }

  void conv_backward(const ParamStore<T>& store, int l, const FeatureMap<T>& x, const FeatureMap<T>& dz,
                     std::vector<T>& grad, FeatureMap<T>* dx) const {
    const int cin = in_ch_[l], cout = out_ch_[l];
    const auto w = store[weight_[l]];
    auto gw = slice(grad, store.slot(weight_[l]));
    auto gb = slice(grad, store.slot(bias_[l]));
    for (int r = 0; r < x.height; ++r) {
      for (int c = 0; c < x.width; ++c) {
        const T* g = dz.pixel(r, c);
        for (int k = 0; k < cout; ++k) gb[k] += g[k];
        for (int dr = 0; dr < 3; ++dr) {
          const int rr = r + dr - 1;
          if (rr < 0 || rr >= x.height) continue;
          for (int dc = 0; dc < 3; ++dc) {
            const int cc = c + dc - 1;
            if (cc < 0 || cc >= x.width) continue;
            const T* xi = x.pixel(rr, cc);
            const std::size_t base = static_cast<std::size_t>(dr * 3 + dc) * cin * cout;
            T* dxi = dx ? dx->pixel(rr, cc) : nullptr;
            for (int i = 0; i < cin; ++i) {
              T* gwi = gw.data() + base + static_cast<std::size_t>(i) * cout;
              const T* wi = w.data() + base + static_cast<std::size_t>(i) * cout;
              T acc = 0;
              for (int k = 0; k < cout; ++k) {
                gwi[k] += xi[i] * g[k];
                acc += wi[k] * g[k];
              }
              if (dxi) dxi[i] += acc;
            }
          }
        }
      }
    }
  }

  std::array<std::size_t, 3> weight_{}, bias_{};
  std::array<int, 3> in_ch_{}, out_ch_{};
};

/// Visual object embedding plus what its backward pass needs.
template <typename T>
struct ObjectEncoding {
  ConditionEmbedding<T> embedding;
  std::vector<T> pooled;
  /// Deepest-level cells averaged over (row-major indices).
  std::vector<int> footprint;
};

/// Deepest-level footprint of a mask: a cell is set when any pixel of its
/// block is set (max-pool), so objects of a few pixels keep a footprint.
inline std::vector<int> mask_footprint(const BinaryMask& mask, int cells_h, int cells_w) {
  const int fy = mask.height() / cells_h, fx = mask.width() / cells_w;
  std::vector<int> cells;
  for (int i = 0; i < cells_h; ++i) {
    for (int j = 0; j < cells_w; ++j) {
      bool any = false;
      for (int r = i * fy; r < (i + 1) * fy && !any; ++r) {
        for (int c = j * fx; c < (j + 1) * fx && !any; ++c) any = mask(r, c);
      }
      if (any) cells.push_back(i * cells_w + j);
    }
  }
  return cells;
}

/// Visual backbone, mask-pooled projection (visual branch) and the token
/// embedding table (text branch).
template <typename T>
class ConditionEncoder {
 public:
  ConditionEncoder() = default;

  ConditionEncoder(ParamStore<T>& store, const ModelConfig& cfg)
      : backbone_(store, cfg), cfg_(cfg) {
    projector_ = store.add("encoder.projector", ParamGroup::Projector, {cfg.channels[2], cfg.embed_dim}, true);
    text_table_ = store.add("encoder.text_table", ParamGroup::TextTable, {cfg.vocab_size, cfg.embed_dim}, true);
  }

  void init(ParamStore<T>& store, Rng& rng) const {
    backbone_.init(store, rng);
    store.fill_normal(projector_, rng, 1.0 / std::sqrt(static_cast<double>(cfg_.channels[2])));
    store.fill_normal(text_table_, rng, 0.5 / std::sqrt(static_cast<double>(cfg_.embed_dim)));
  }

  const VisualBackbone<T>& backbone() const { return backbone_; }

  Multiscale<T> encode_image(const ParamStore<T>& store, const Image& frame,
                             BackboneTrace<T>* trace = nullptr) const {
    if (frame.height() != cfg_.height || frame.width() != cfg_.width) {
      throw DimensionMismatch("frame is " + std::to_string(frame.height()) + "x" +
                              std::to_string(frame.width()) + ", model expects " +
                              std::to_string(cfg_.height) + "x" + std::to_string(cfg_.width));
    }
    return backbone_.forward(store, image_to_features<T>(frame), trace);
  }

  /// Average of deepest-level features over the mask footprint, projected to
  /// the embedding dimension.
  ObjectEncoding<T> encode_object(const ParamStore<T>& store, const Multiscale<T>& features,
                                  const BinaryMask& mask) const {
    if (area(mask) == 0) throw EmptyMask("encode_object: empty object mask");
    if (mask.height() != cfg_.height || mask.width() != cfg_.width) {
      throw DimensionMismatch("encode_object: mask does not match the frame");
    }
    const auto& deep = features.levels[2];
    ObjectEncoding<T> out;
    out.footprint = mask_footprint(mask, deep.height, deep.width);
    if (out.footprint.empty()) {
      for (int i = 0; i < deep.height * deep.width; ++i) out.footprint.push_back(i);
    }
    out.pooled.assign(deep.channels, T(0));
    for (const int cell : out.footprint) {
      const T* f = deep.pixel(cell / deep.width, cell % deep.width);
      for (int k = 0; k < deep.channels; ++k) out.pooled[k] += f[k];
    }
    for (auto& v : out.pooled) v /= static_cast<T>(out.footprint.size());
    out.embedding.branch = Branch::Visual;
    out.embedding.vector = project(store, out.pooled);
    return out;
  }

  /// Accumulates gradients of the visual embedding into the projector and,
  /// when requested, into the deepest feature level.
  void encode_object_backward(const ParamStore<T>& store, const ObjectEncoding<T>& enc,
                              std::span<const T> d_embedding, std::vector<T>& grad,
                              FeatureMap<T>* d_deep = nullptr) const {
    const int d = cfg_.embed_dim, c = cfg_.channels[2];
    auto gp = slice(grad, store.slot(projector_));
    const auto w = store[projector_];
    std::vector<T> d_pooled(c, T(0));
    for (int i = 0; i < c; ++i) {
      const T p = enc.pooled[i];
      for (int k = 0; k < d; ++k) {
        gp[static_cast<std::size_t>(i) * d + k] += p * d_embedding[k];
        d_pooled[i] += w[static_cast<std::size_t>(i) * d + k] * d_embedding[k];
      }
    }
    if (d_deep) {
      const T scale = T(1) / static_cast<T>(enc.footprint.size());
      for (const int cell : enc.footprint) {
        T* g = d_deep->pixel(cell / d_deep->width, cell % d_deep->width);
        for (int i = 0; i < c; ++i) g[i] += d_pooled[i] * scale;
      }
    }
  }

  ConditionEmbedding<T> encode_text(const ParamStore<T>& store, int token) const {
    if (token < 0 || token >= cfg_.vocab_size) {
      throw UnknownToken("token " + std::to_string(token) + " outside vocabulary of " +
                         std::to_string(cfg_.vocab_size));
    }
    const auto table = store[text_table_];
    const auto d = static_cast<std::size_t>(cfg_.embed_dim);
    return {std::vector<T>(table.begin() + token * d, table.begin() + (token + 1) * d), Branch::Text};
  }

  void encode_text_backward(const ParamStore<T>& store, int token, std::span<const T> d_embedding,
                            std::vector<T>& grad) const {
    auto g = slice(grad, store.slot(text_table_));
    const auto d = static_cast<std::size_t>(cfg_.embed_dim);
    for (std::size_t k = 0; k < d; ++k) g[token * d + k] += d_embedding[k];
  }

  std::size_t projector_slot() const { return projector_; }
  std::size_t text_table_slot() const { return text_table_; }

 private:
  std::vector<T> project(const ParamStore<T>& store, const std::vector<T>& pooled) const {
    const int d = cfg_.embed_dim;
    const auto w = store[projector_];
    std::vector<T> v(d, T(0));
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      const T p = pooled[i];
      for (int k = 0; k < d; ++k) v[k] += p * w[i * d + k];
    }
    return v;
  }

  VisualBackbone<T> backbone_;
  ModelConfig cfg_;
  std::size_t projector_ = 0;
  std::size_t text_table_ = 0;
};

}  // namespace xvc
