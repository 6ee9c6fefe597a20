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
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xvc/dataset.hpp"
#include "xvc/metrics.hpp"
#include "xvc/model.hpp"
#include "xvc/text_provider.hpp"

namespace xvc {

/// Backbone features per frame. Valid while the backbone parameters do not
/// change; `bind` drops the cache when they do.
template <typename T>
class FeatureCache {
 public:
  void bind(const Model<T>& model) {
    std::vector<T> backbone;
    for (const auto& slot : model.params().slots()) {
      if (slot.group != ParamGroup::Backbone) continue;
      const auto s = slice(model.params().values(), slot);
      backbone.insert(backbone.end(), s.begin(), s.end());
    }
    if (backbone != backbone_) {
      cache_.clear();
      frames_.clear();
      backbone_ = std::move(backbone);
    }
    model_ = &model;
  }

  const Multiscale<T>& get(const std::shared_ptr<const Image>& frame) {
    auto it = cache_.find(frame.get());
    if (it != cache_.end()) return it->second;
    frames_.push_back(frame);
    return cache_.emplace(frame.get(), model_->features(*frame)).first->second;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  const Model<T>* model_ = nullptr;
  std::vector<T> backbone_;
  std::unordered_map<const Image*, Multiscale<T>> cache_;
  std::vector<std::shared_ptr<const Image>> frames_;
};

struct InferenceOptions {
  double text_noise_rate = 0.1;
  std::uint64_t text_seed = 0;
};

template <typename T>
FramePrediction predict_sample(const Model<T>& model, FeatureCache<T>& cache, const CorrespondenceSample& s,
                               const InferenceOptions& opts) {
  const int token = describe(s, opts.text_noise_rate, opts.text_seed).token_id;
  const auto pred = model.predict(cache.get(s.query_frame), s.query_mask, token, cache.get(s.target_frame));
  FramePrediction out;
  out.frame_index = s.frame_index;
  out.predicted_visible = pred.visible();
  if (out.predicted_visible) out.predicted_mask = pred.upsampled_mask;
  return out;
}

struct DirectionalReport {
  std::optional<MetricsReport> ego2exo;
  std::optional<MetricsReport> exo2ego;
  /// Mean IoU of both directions, when both are present.
  std::optional<double> final_score;

  /// Final score when available, otherwise the IoU of the single direction.
  double headline_iou() const {
    if (final_score) return *final_score;
    if (ego2exo && ego2exo->iou) return *ego2exo->iou;
    if (exo2ego && exo2ego->iou) return *exo2ego->iou;
    return 0.0;
  }
};

/// Scores predictions (parallel to `samples`). Each sample is a one-frame
/// track of its object in the query and target views.
inline DirectionalReport evaluate_predictions(const std::vector<CorrespondenceSample>& samples,
                                              const std::vector<FramePrediction>& predictions) {
  if (samples.size() != predictions.size()) {
    throw DimensionMismatch("evaluate: " + std::to_string(samples.size()) + " samples vs " +
                            std::to_string(predictions.size()) + " predictions");
  }
  std::vector<MaskTrack> queries(samples.size()), truths(samples.size());
  std::map<Direction, std::vector<TrackEvaluation>> by_direction;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    queries[i].object_id = truths[i].object_id = s.object_id;
    queries[i].frames[s.frame_index] = TrackFrame{s.query_mask, true};
    truths[i].frames[s.frame_index] = TrackFrame{s.gt_target_mask, s.gt_visible};
    by_direction[s.direction].push_back({{predictions[i]}, &truths[i], &queries[i], s.scenario});
  }
  DirectionalReport out;
  if (by_direction.contains(Direction::Ego2Exo)) out.ego2exo = evaluate_tracks(by_direction[Direction::Ego2Exo]);
  if (by_direction.contains(Direction::Exo2Ego)) out.exo2ego = evaluate_tracks(by_direction[Direction::Exo2Ego]);
  if (out.ego2exo && out.exo2ego && out.ego2exo->iou && out.exo2ego->iou) {
    out.final_score = final_score(*out.ego2exo->iou, *out.exo2ego->iou);
  }
  return out;
}

template <typename T>
std::vector<FramePrediction> predict_samples(const Model<T>& model, FeatureCache<T>& cache,
                                             const std::vector<CorrespondenceSample>& samples,
                                             const InferenceOptions& opts) {
  cache.bind(model);
  std::vector<FramePrediction> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict_sample(model, cache, s, opts));
  return out;
}

template <typename T>
DirectionalReport evaluate_model(const Model<T>& model, FeatureCache<T>& cache,
                                 const std::vector<CorrespondenceSample>& samples, const InferenceOptions& opts) {
  return evaluate_predictions(samples, predict_samples(model, cache, samples, opts));
}

/// Mean Euclidean distance between query and ground-truth target object
/// embeddings over samples whose target is visible.
template <typename T>
double mean_embedding_distance(const Model<T>& model, FeatureCache<T>& cache,
                               const std::vector<CorrespondenceSample>& samples) {
  cache.bind(model);
  double total = 0.0;
  std::int64_t n = 0;
  for (const auto& s : samples) {
    if (!s.gt_visible) continue;
    const auto q = model.encoder().encode_object(model.params(), cache.get(s.query_frame), s.query_mask);
    const auto t = model.encode_target_object(cache.get(s.target_frame), *s.gt_target_mask);
    double sq = 0.0;
    for (std::size_t k = 0; k < q.embedding.vector.size(); ++k) {
      const double d = static_cast<double>(q.embedding.vector[k]) - static_cast<double>(t.embedding.vector[k]);
      sq += d * d;
    }
    total += std::sqrt(sq);
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

inline nlohmann::json to_json(const DirectionalReport& r) {
  nlohmann::json j = nlohmann::json::object();
  if (r.ego2exo) j["ego2exo"] = to_json(*r.ego2exo);
  if (r.exo2ego) j["exo2ego"] = to_json(*r.exo2ego);
  j["final_score"] = r.final_score ? nlohmann::json(*r.final_score) : nlohmann::json(nullptr);
  return j;
}

}  // namespace xvc
