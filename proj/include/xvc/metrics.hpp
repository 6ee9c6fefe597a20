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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvc/errors.hpp"
#include "xvc/mask.hpp"

namespace xvc {

// Conventions that the challenge protocol leaves open. They are recorded in
// every serialized report so scores are only compared within this toolkit.
inline constexpr double kEmptyPredictionLocationError = 1.0;
inline constexpr double kEmptyPredictionContourAccuracy = 0.0;

namespace detail {
inline void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                            "x" + std::to_string(b.width()));
  }
}
}  // namespace detail

/// Intersection over union. Two empty masks score 1.0.
inline double iou(const BinaryMask& pred, const BinaryMask& gt) {
  detail::require_same_shape(pred, gt, "iou");
  std::int64_t inter = 0, uni = 0;
  const auto& a = pred.bits();
  const auto& b = gt.bits();
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] & b[i];
    uni += a[i] | b[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Centroid distance normalized by the image diagonal. Empty predictions
/// score the worst case, 1.0.
inline double location_error(const BinaryMask& pred, const BinaryMask& gt) {
  detail::require_same_shape(pred, gt, "location_error");
  if (area(gt) == 0) throw EmptyMask("location_error: ground truth is empty");
  if (area(pred) == 0) return kEmptyPredictionLocationError;
  const auto p = centroid(pred);
  const auto g = centroid(gt);
  const double h = gt.height(), w = gt.width();
  return std::hypot(p.row - g.row, p.col - g.col) / std::sqrt(h * h + w * w);
}

/// IoU after shifting the prediction by the rounded centroid offset so both
/// centroids coincide.
inline double contour_accuracy(const BinaryMask& pred, const BinaryMask& gt) {
  detail::require_same_shape(pred, gt, "contour_accuracy");
  if (area(gt) == 0) throw EmptyMask("contour_accuracy: ground truth is empty");
  if (area(pred) == 0) return kEmptyPredictionContourAccuracy;
  const auto p = centroid(pred);
  const auto g = centroid(gt);
  const int drow = static_cast<int>(std::lround(g.row - p.row));
  const int dcol = static_cast<int>(std::lround(g.col - p.col));
  return iou(translate(pred, drow, dcol), gt);
}

struct VisibilityAccuracy {
  double value = 0.0;
  /// Only one ground-truth class was present; `value` is plain accuracy.
  bool degenerate = false;
};

/// Balanced accuracy (TPR + TNR) / 2 over per-frame visibility decisions.
inline VisibilityAccuracy visibility_accuracy(const std::vector<bool>& predicted,
                                              const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) {
    throw DimensionMismatch("visibility_accuracy: " + std::to_string(predicted.size()) +
                            " predictions vs " + std::to_string(actual.size()) + " labels");
  }
  if (actual.empty()) throw DimensionMismatch("visibility_accuracy: no frames");
  std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i]) {
      predicted[i] ? ++tp : ++fn;
    } else {
      predicted[i] ? ++fp : ++tn;
    }
  }
  const auto pos = tp + fn;
  const auto neg = tn + fp;
  if (pos == 0 || neg == 0) {
    return {static_cast<double>(tp + tn) / static_cast<double>(pos + neg), true};
  }
  const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
  const double tnr = static_cast<double>(tn) / static_cast<double>(neg);
  return {(tpr + tnr) / 2.0, false};
}

inline double final_score(double ego2exo_iou, double exo2ego_iou) {
  return (ego2exo_iou + exo2ego_iou) / 2.0;
}

struct FramePrediction {
  int frame_index = 0;
  bool predicted_visible = false;
  std::optional<BinaryMask> predicted_mask;
};

struct ScenarioMetrics {
  std::optional<double> iou, le, ca, va;
  bool va_degenerate = false;
  std::int64_t n_eval_frames = 0;
  std::int64_t n_visibility_frames = 0;
};

/// IoU/LE/CA are averaged over co-visible frames; VA covers every frame that
/// has a query mask. Absent values mean the corresponding frame set was empty.
struct MetricsReport {
  std::optional<double> iou, le, ca, va;
  bool va_degenerate = false;
  std::map<std::string, ScenarioMetrics> per_scenario;
  std::int64_t n_eval_frames = 0;
  std::int64_t n_visibility_frames = 0;
};

/// One track to score: predictions in the target view, the target-view
/// ground truth, and the query-view track that defines the frame set.
struct TrackEvaluation {
  std::vector<FramePrediction> predictions;
  const MaskTrack* ground_truth = nullptr;
  const MaskTrack* query = nullptr;
  std::string scenario;
};

namespace detail {

struct FrameAccumulator {
  double iou_sum = 0, le_sum = 0, ca_sum = 0;
  std::int64_t n_eval = 0;
  std::vector<bool> vis_pred, vis_gt;

  ScenarioMetrics finish() const {
    ScenarioMetrics m;
    m.n_eval_frames = n_eval;
    m.n_visibility_frames = static_cast<std::int64_t>(vis_gt.size());
    if (n_eval > 0) {
      m.iou = iou_sum / static_cast<double>(n_eval);
      m.le = le_sum / static_cast<double>(n_eval);
      m.ca = ca_sum / static_cast<double>(n_eval);
    }
    if (!vis_gt.empty()) {
      const auto va = visibility_accuracy(vis_pred, vis_gt);
      m.va = va.value;
      m.va_degenerate = va.degenerate;
    }
    return m;
  }
};

inline void accumulate(const TrackEvaluation& track, FrameAccumulator& total,
                       FrameAccumulator& scenario) {
  std::map<int, const FramePrediction*> by_frame;
  for (const auto& p : track.predictions) {
    if (p.predicted_visible && !p.predicted_mask) {
      throw InvalidSpec("prediction for frame " + std::to_string(p.frame_index) +
                        " is visible but has no mask");
    }
    by_frame[p.frame_index] = &p;
  }
  for (const auto& [index, qframe] : track.query->frames) {
    if (!qframe.visible || !qframe.mask || area(*qframe.mask) == 0) continue;
    const auto git = track.ground_truth->frames.find(index);
    const bool gt_visible = git != track.ground_truth->frames.end() && git->second.visible;
    const auto pit = by_frame.find(index);
    const FramePrediction* pred = pit == by_frame.end() ? nullptr : pit->second;
    const bool pred_visible = pred != nullptr && pred->predicted_visible;

    for (auto* acc : {&total, &scenario}) {
      acc->vis_pred.push_back(pred_visible);
      acc->vis_gt.push_back(gt_visible);
    }
    if (!gt_visible) continue;

    const BinaryMask& gt = *git->second.mask;
    const BinaryMask pm = (pred_visible && pred->predicted_mask) ? *pred->predicted_mask
                                                                  : BinaryMask(gt.height(), gt.width());
    const double i = iou(pm, gt), l = location_error(pm, gt), c = contour_accuracy(pm, gt);
    for (auto* acc : {&total, &scenario}) {
      acc->iou_sum += i;
      acc->le_sum += l;
      acc->ca_sum += c;
      ++acc->n_eval;
    }
  }
}

}  // namespace detail

/// Pools frames across all tracks (frame-weighted means) and breaks the
/// result down by scenario tag.
inline MetricsReport evaluate_tracks(const std::vector<TrackEvaluation>& tracks) {
  detail::FrameAccumulator total;
  std::map<std::string, detail::FrameAccumulator> scenarios;
  for (const auto& t : tracks) {
    if (t.ground_truth == nullptr || t.query == nullptr) {
      throw InvalidSpec("track evaluation without ground truth or query track");
    }
    detail::accumulate(t, total, scenarios[t.scenario]);
  }
  const auto overall = total.finish();
  MetricsReport report;
  report.iou = overall.iou;
  report.le = overall.le;
  report.ca = overall.ca;
  report.va = overall.va;
  report.va_degenerate = overall.va_degenerate;
  report.n_eval_frames = overall.n_eval_frames;
  report.n_visibility_frames = overall.n_visibility_frames;
  for (const auto& [name, acc] : scenarios) report.per_scenario[name] = acc.finish();
  return report;
}

inline MetricsReport evaluate_track(const std::vector<FramePrediction>& predictions,
                                    const MaskTrack& ground_truth, const MaskTrack& query,
                                    const std::string& scenario = "all") {
  return evaluate_tracks({TrackEvaluation{predictions, &ground_truth, &query, scenario}});
}

namespace detail {
inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const ScenarioMetrics& m) {
  return {{"iou", detail::optional_number(m.iou)},
          {"le", detail::optional_number(m.le)},
          {"ca", detail::optional_number(m.ca)},
          {"va", detail::optional_number(m.va)},
          {"va_degenerate", m.va_degenerate},
          {"n_eval_frames", m.n_eval_frames},
          {"n_visibility_frames", m.n_visibility_frames}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, m] : r.per_scenario) per[name] = to_json(m);
  return {{"iou", detail::optional_number(r.iou)},
          {"le", detail::optional_number(r.le)},
          {"ca", detail::optional_number(r.ca)},
          {"va", detail::optional_number(r.va)},
          {"va_degenerate", r.va_degenerate},
          {"per_scenario", per},
          {"n_eval_frames", r.n_eval_frames},
          {"n_visibility_frames", r.n_visibility_frames},
          {"conventions",
           {{"le_normalization", "image_diagonal"},
            {"empty_prediction_le", kEmptyPredictionLocationError},
            {"empty_prediction_ca", kEmptyPredictionContourAccuracy},
            {"ca_alignment", "rounded_centroid_shift"},
            {"iou_both_empty", 1.0}}}};
}

}  // namespace xvc
