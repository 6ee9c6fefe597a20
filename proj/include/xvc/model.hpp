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

#include <atomic>
#include <cstdint>

#include "xvc/condition_encoder.hpp"
#include "xvc/condition_fusion.hpp"
#include "xvc/segmenter.hpp"

namespace xvc {

/// Full correspondence model: condition encoder, residual condition fusion
/// and segmenter over one shared parameter store.
template <typename T>
class Model {
 public:
  explicit Model(ModelConfig cfg = {}, std::uint64_t seed = 0) : cfg_(cfg) {
    if (cfg.height % 8 != 0 || cfg.width % 8 != 0 || cfg.height < 8 || cfg.width < 8) {
      throw ConfigError("model frame size must be a positive multiple of 8");
    }
    if (cfg.embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
    encoder_ = ConditionEncoder<T>(store_, cfg);
    fusion_ = ConditionFusion<T>(store_, cfg);
    segmenter_ = Segmenter<T>(store_, cfg);
    Rng rng(derive_seed(seed, fnv1a("init")));
    encoder_.init(store_, rng);
    fusion_.init(store_, rng);
    segmenter_.init(store_, rng);
  }

  Model(const Model& other)
      : cfg_(other.cfg_), store_(other.store_), encoder_(other.encoder_), fusion_(other.fusion_),
        segmenter_(other.segmenter_), target_calls_(other.target_calls_.load()) {}

  Model& operator=(const Model& other) {
    cfg_ = other.cfg_;
    store_ = other.store_;
    encoder_ = other.encoder_;
    fusion_ = other.fusion_;
    segmenter_ = other.segmenter_;
    target_calls_ = other.target_calls_.load();
    return *this;
  }

  const ModelConfig& config() const { return cfg_; }
  void set_fusion_enabled(bool on) { cfg_.fusion_enabled = on; }

  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  std::size_t parameter_count() const { return store_.size(); }

  const ConditionEncoder<T>& encoder() const { return encoder_; }
  const ConditionFusion<T>& fusion() const { return fusion_; }
  const Segmenter<T>& segmenter() const { return segmenter_; }

  Multiscale<T> features(const Image& frame) const { return encoder_.encode_image(store_, frame); }

  /// Condition for the segmenter: the visual query embedding, fused with
  /// the text embedding of `token` when fusion is enabled.
  ConditionEmbedding<T> condition(const ObjectEncoding<T>& query, int token) const {
    if (!cfg_.fusion_enabled) return query.embedding;
    return fusion_.fuse(store_, query.embedding, encoder_.encode_text(store_, token));
  }

  /// Inference path. Never touches the target-object embedding.
  SegPrediction<T> predict(const Multiscale<T>& query_features, const BinaryMask& query_mask, int token,
                           const Multiscale<T>& target_features) const {
    const auto query = encoder_.encode_object(store_, query_features, query_mask);
    return segmenter_.predict_mask(store_, target_features, condition(query, token));
  }

  /// Embedding of the ground-truth target object; used only by the
  /// cross-view alignment loss during training.
  ObjectEncoding<T> encode_target_object(const Multiscale<T>& target_features, const BinaryMask& gt_mask) const {
    target_calls_.fetch_add(1, std::memory_order_relaxed);
    return encoder_.encode_object(store_, target_features, gt_mask);
  }

  std::int64_t target_embedding_calls() const { return target_calls_.load(); }
  void reset_instrumentation() const { target_calls_ = 0; }

 private:
  ModelConfig cfg_;
  ParamStore<T> store_;
  ConditionEncoder<T> encoder_;
  ConditionFusion<T> fusion_;
  Segmenter<T> segmenter_;
  mutable std::atomic<std::int64_t> target_calls_{0};
};

}  // namespace xvc
