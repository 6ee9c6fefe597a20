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
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvc/cross_view_alignment.hpp"
#include "xvc/dataset.hpp"
#include "xvc/errors.hpp"
#include "xvc/evaluation.hpp"
#include "xvc/model.hpp"
#include "xvc/optimizer.hpp"
#include "xvc/text_provider.hpp"

namespace xvc {

struct TrainConfig {
  double stage1_fraction = 1.0 / 20.0;
  int epochs_per_stage = 3;
  int batch_size = 12;
  AdamWConfig optimizer;
  std::uint64_t seed = 0;
  bool enable_mcfuse = true;
  bool enable_xobjalign = true;
  double lambda_xobj = 1.0;
  /// Squared instead of plain Euclidean distance in the alignment loss.
  bool xobj_squared = false;
  double text_noise_rate = 0.1;
  int embed_dim = 64;

  // Data. An empty data_dir selects the built-in benchmark.
  std::string data_dir;
  int n_train = 2000;
  int n_val = 200;
  std::uint64_t data_seed = 0;

  void validate() const {
    if (!(stage1_fraction > 0.0 && stage1_fraction <= 1.0)) throw ConfigError("stage1_fraction must be in (0, 1]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs_per_stage < 0) throw ConfigError("epochs_per_stage must be >= 0");
    if (!(optimizer.learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be > 0");
    if (optimizer.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be >= 0");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
      throw ConfigError("optimizer betas must be in [0, 1)");
    }
    if (!(optimizer.epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be > 0");
    if (lambda_xobj < 0.0) throw ConfigError("lambda_xobj must be >= 0");
    if (!(text_noise_rate >= 0.0 && text_noise_rate <= 1.0)) throw ConfigError("text_noise_rate must be in [0, 1]");
    if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
    if (n_train < 1 || n_val < 1) throw ConfigError("n_train and n_val must be >= 1");
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.embed_dim = embed_dim;
    m.fusion_enabled = enable_mcfuse;
    return m;
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"stage1_fraction", c.stage1_fraction},
      {"epochs_per_stage", c.epochs_per_stage},
      {"batch_size", c.batch_size},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"weight_decay", c.optimizer.weight_decay},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon}}},
      {"seed", c.seed},
      {"enable_mcfuse", c.enable_mcfuse},
      {"enable_xobjalign", c.enable_xobjalign},
      {"lambda_xobj", c.lambda_xobj},
      {"xobj_squared", c.xobj_squared},
      {"text_noise_rate", c.text_noise_rate},
      {"embed_dim", c.embed_dim},
      {"data_dir", c.data_dir},
      {"n_train", c.n_train},
      {"n_val", c.n_val},
      {"data_seed", c.data_seed},
  };
}

namespace detail {

template <typename V>
void read_field(const nlohmann::json& j, const std::string& key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<V, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_same_v<V, std::string>) {
    ok = v.is_string();
  } else if constexpr (std::is_integral_v<V>) {
    ok = v.is_number_integer() && (std::is_signed_v<V> || v.get<std::int64_t>() >= 0);
  } else {
    ok = v.is_number();
  }
  if (!ok) throw SchemaError(where + ": field '" + key + "' has the wrong type");
  out = v.get<V>();
}

}  // namespace detail

/// Reads a config object; absent fields keep their defaults and unknown
/// fields are rejected. `where` names the source in error messages.
inline TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& where = "config") {
  if (!j.is_object()) throw SchemaError(where + ": config must be a JSON object");
  static const std::set<std::string> known{
      "stage1_fraction", "epochs_per_stage", "batch_size", "optimizer",  "seed",  "enable_mcfuse",
      "enable_xobjalign", "lambda_xobj",     "xobj_squared", "text_noise_rate", "embed_dim", "data_dir",
      "n_train",          "n_val",           "data_seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw SchemaError(where + ": unknown field '" + key + "'");
  }
  TrainConfig c;
  detail::read_field(j, "stage1_fraction", c.stage1_fraction, where);
  detail::read_field(j, "epochs_per_stage", c.epochs_per_stage, where);
  detail::read_field(j, "batch_size", c.batch_size, where);
  detail::read_field(j, "seed", c.seed, where);
  detail::read_field(j, "enable_mcfuse", c.enable_mcfuse, where);
  detail::read_field(j, "enable_xobjalign", c.enable_xobjalign, where);
  detail::read_field(j, "lambda_xobj", c.lambda_xobj, where);
  detail::read_field(j, "xobj_squared", c.xobj_squared, where);
  detail::read_field(j, "text_noise_rate", c.text_noise_rate, where);
  detail::read_field(j, "embed_dim", c.embed_dim, where);
  detail::read_field(j, "data_dir", c.data_dir, where);
  detail::read_field(j, "n_train", c.n_train, where);
  detail::read_field(j, "n_val", c.n_val, where);
  detail::read_field(j, "data_seed", c.data_seed, where);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    const std::string ow = where + ": optimizer";
    if (!o.is_object()) throw SchemaError(ow + " must be an object");
    static const std::set<std::string> known_opt{"learning_rate", "weight_decay", "beta1", "beta2", "epsilon"};
    for (const auto& [key, value] : o.items()) {
      if (!known_opt.contains(key)) throw SchemaError(ow + ": unknown field '" + key + "'");
    }
    detail::read_field(o, "learning_rate", c.optimizer.learning_rate, ow);
    detail::read_field(o, "weight_decay", c.optimizer.weight_decay, ow);
    detail::read_field(o, "beta1", c.optimizer.beta1, ow);
    detail::read_field(o, "beta2", c.optimizer.beta2, ow);
    detail::read_field(o, "epsilon", c.optimizer.epsilon, ow);
  }
  c.validate();
  return c;
}

/// Applies environment overrides: field `lambda_xobj` is read from
/// `<prefix>LAMBDA_XOBJ`, optimizer fields from `<prefix>OPTIMIZER_<NAME>`.
/// `getenv` is injectable for tests.
inline TrainConfig apply_env_overrides(const TrainConfig& base, const std::string& prefix = "XVC_",
                                       const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  auto j = to_json(base);
  auto upper = [](std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
  };
  auto apply = [&](nlohmann::json& obj, const std::string& key, const std::string& var) {
    const char* raw = getenv_fn(var.c_str());
    if (raw == nullptr) return;
    const std::string text(raw);
    nlohmann::json& slot = obj[key];
    try {
      if (slot.is_string()) {
        slot = text;
      } else {
        auto parsed = nlohmann::json::parse(text);
        if (slot.is_boolean() && !parsed.is_boolean()) throw ConfigError("");
        if (slot.is_number() && !parsed.is_number()) throw ConfigError("");
        slot = parsed;
      }
    } catch (const std::exception&) {
      throw ConfigError("environment variable " + var + "='" + text + "' is not a valid value for " + key);
    }
  };
  for (auto& [key, value] : j.items()) {
    if (key == "optimizer") continue;
    apply(j, key, prefix + upper(key));
  }
  for (auto& [key, value] : j["optimizer"].items()) apply(j["optimizer"], key, prefix + "OPTIMIZER_" + upper(key));
  return train_config_from_json(j, "environment");
}

struct StepLog {
  std::int64_t step = 0;
  int stage = 0;
  double l_mask = 0.0;
  double l_xobj = 0.0;
  double fusion_weight = 0.0;
  double embed_distance = 0.0;
};

inline nlohmann::json to_json(const StepLog& s) {
  return {{"step", s.step},       {"stage", s.stage},
          {"l_mask", s.l_mask},   {"l_xobj", s.l_xobj},
          {"fusion_weight", s.fusion_weight}, {"embed_distance", s.embed_distance}};
}

/// One row of the metric history. Epoch 0 of a stage is the evaluation
/// before any update in that stage; train_loss is the stage objective over
/// the stage's training pool after the epoch.
struct EpochRecord {
  std::string stage;
  int epoch = 0;
  std::int64_t step = 0;
  double train_loss = 0.0;
  double val_iou = 0.0;
  double val_embed_distance = 0.0;
  double fusion_weight = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"stage", r.stage},
          {"epoch", r.epoch},
          {"step", r.step},
          {"train_loss", r.train_loss},
          {"val_iou", r.val_iou},
          {"val_embed_distance", r.val_embed_distance},
          {"fusion_weight", r.fusion_weight}};
}

inline EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.stage = j.at("stage").get<std::string>();
  r.epoch = j.at("epoch").get<int>();
  r.step = j.at("step").get<std::int64_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_iou = j.at("val_iou").get<double>();
  r.val_embed_distance = j.at("val_embed_distance").get<double>();
  r.fusion_weight = j.at("fusion_weight").get<double>();
  return r;
}

template <typename T>
struct Checkpoint {
  Model<T> model;
  TrainConfig config;
  /// "init", "stage1" or "stage2".
  std::string stage = "init";
  std::int64_t step = 0;
  std::vector<EpochRecord> history;
  /// Hash of the sample ids each stage consumed, in order (index 0: stage
  /// 1, index 1: stage 2). Runtime bookkeeping only; not persisted.
  std::array<std::uint64_t, 2> order_hash{0, 0};
};

struct TrainData {
  std::vector<CorrespondenceSample> train;
  std::vector<CorrespondenceSample> val;
};

using StepSink = std::function<void(const StepLog&)>;

/// Seed of the text descriptions. Independent of the training seed so every
/// run of an ablation sees the same descriptions.
inline std::uint64_t text_seed(const TrainConfig& cfg) { return derive_seed(cfg.data_seed, fnv1a("text")); }

inline InferenceOptions inference_options(const TrainConfig& cfg) {
  return {cfg.text_noise_rate, text_seed(cfg)};
}

/// Indices of the stage-1 subset: ceil(fraction * n) samples drawn by a
/// seeded shuffle, returned in ascending order.
inline std::vector<std::size_t> stage1_subset(std::size_t n, double fraction, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, fnv1a("stage1-subset")));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Sample order of one epoch; depends only on the seed, stage, epoch and n.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int stage, int epoch) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(derive_seed(derive_seed(seed, fnv1a("order")), static_cast<std::uint64_t>(stage)),
                      static_cast<std::uint64_t>(epoch)));
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

/// Folds the ids of consumed samples, in order, into a running hash.
inline std::uint64_t mix_order(std::uint64_t h, const std::string& sample_id) { return mix64(h ^ fnv1a(sample_id)); }

template <typename T>
Checkpoint<T> init_checkpoint(const TrainConfig& cfg) {
  cfg.validate();
  return {Model<T>(cfg.model_config(), cfg.seed), cfg, "init", 0, {}};
}

namespace detail {

struct BatchResult {
  double l_mask = 0.0;
  double l_xobj = 0.0;
  double embed_distance = 0.0;
};

/// Forward and backward over one batch; accumulates the gradient of
/// mean(L_mask) + lambda * L_Xobj into `grad`.
template <typename T>
BatchResult batch_gradient(const Model<T>& model, FeatureCache<T>& cache, const TrainConfig& cfg,
                           const std::vector<const CorrespondenceSample*>& batch, bool use_xobj,
                           std::vector<T>& grad) {
  const auto& store = model.params();
  const auto& enc = model.encoder();
  const bool fusion = model.config().fusion_enabled;
  const T inv_b = T(1) / static_cast<T>(batch.size());
  const auto tseed = text_seed(cfg);
  BatchResult out;

  std::vector<ObjectEncoding<T>> queries, targets;
  for (const auto* s : batch) {
    const auto& qf = cache.get(s->query_frame);
    const auto& tf = cache.get(s->target_frame);
    const auto query = enc.encode_object(store, qf, s->query_mask);
    const int token = describe(*s, cfg.text_noise_rate, tseed).token_id;

    SegTrace<T> trace;
    ConditionEmbedding<T> text;
    ConditionEmbedding<T> cond = query.embedding;
    if (fusion) {
      text = enc.encode_text(store, token);
      cond = model.fusion().fuse(store, query.embedding, text);
    }
    const auto pred = model.segmenter().predict_mask(store, tf, cond, &trace);
    const BinaryMask* gt = s->gt_target_mask ? &*s->gt_target_mask : nullptr;
    auto loss = mask_loss(pred, gt, s->gt_visible);
    out.l_mask += static_cast<double>(loss.value);

    for (auto& g : loss.d_logits) g *= inv_b;
    auto d_cond =
        model.segmenter().backward(store, tf, trace, loss.d_logits, loss.d_visibility * inv_b, grad);
    if (fusion) {
      const auto g = model.fusion().backward(store, d_cond, text, grad);
      enc.encode_text_backward(store, token, g.text, grad);
      d_cond = g.visual;
    }
    enc.encode_object_backward(store, query, d_cond, grad);

    if (s->gt_visible) {
      targets.push_back(model.encode_target_object(tf, *s->gt_target_mask));
      queries.push_back(query);
    }
  }
  out.l_mask /= static_cast<double>(batch.size());

  if (!queries.empty()) {
    AlignmentBatch<T> ab;
    ab.batch = static_cast<int>(queries.size());
    ab.dim = model.config().embed_dim;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      ab.query.insert(ab.query.end(), queries[i].embedding.vector.begin(), queries[i].embedding.vector.end());
      ab.target.insert(ab.target.end(), targets[i].embedding.vector.begin(), targets[i].embedding.vector.end());
    }
    out.embed_distance = static_cast<double>(xobj_loss(ab, AlignmentDistance::Euclidean));
    if (use_xobj) {
      const auto kind = cfg.xobj_squared ? AlignmentDistance::SquaredEuclidean : AlignmentDistance::Euclidean;
      out.l_xobj = static_cast<double>(xobj_loss(ab, kind));
      auto g = xobj_loss_backward(ab, kind);
      const auto lambda = static_cast<T>(cfg.lambda_xobj);
      const auto d = static_cast<std::size_t>(ab.dim);
      std::vector<T> gq(d), gt(d);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) {
          gq[k] = lambda * g.query[i * d + k];
          gt[k] = lambda * g.target[i * d + k];
        }
        enc.encode_object_backward(store, queries[i], gq, grad);
        enc.encode_object_backward(store, targets[i], gt, grad);
      }
    }
  }
  return out;
}

template <typename T>
EpochRecord evaluate_epoch(const Model<T>& model, FeatureCache<T>& cache, const TrainConfig& cfg,
                           const std::vector<CorrespondenceSample>& val, const std::string& stage, int epoch,
                           std::int64_t step, double train_loss) {
  EpochRecord r;
  r.stage = stage;
  r.epoch = epoch;
  r.step = step;
  r.train_loss = train_loss;
  r.val_iou = evaluate_model(model, cache, val, inference_options(cfg)).headline_iou();
  r.val_embed_distance = mean_embedding_distance(model, cache, val);
  r.fusion_weight = static_cast<double>(model.fusion().weight(model.params()));
  return r;
}

/// Mean training objective over `samples` without updating anything.
template <typename T>
double mean_train_loss(const Model<T>& model, FeatureCache<T>& cache, const TrainConfig& cfg,
                       const std::vector<const CorrespondenceSample*>& samples, bool use_xobj) {
  auto scratch = model.params().zeros();
  double total = 0.0;
  int batches = 0;
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0; start < samples.size(); start += b) {
    std::vector<const CorrespondenceSample*> batch(
        samples.begin() + static_cast<std::ptrdiff_t>(start),
        samples.begin() + static_cast<std::ptrdiff_t>(std::min(samples.size(), start + b)));
    const auto r = batch_gradient(model, cache, cfg, batch, use_xobj, scratch);
    total += r.l_mask + cfg.lambda_xobj * r.l_xobj;
    ++batches;
  }
  return batches == 0 ? 0.0 : total / batches;
}

template <typename T>
void run_stage(Checkpoint<T>& ckpt, const TrainData& data, const std::vector<std::size_t>& subset, int stage,
               const std::set<ParamGroup>& trainable, bool use_xobj, FeatureCache<T>& cache, const StepSink& sink) {
  const auto& cfg = ckpt.config;
  auto& model = ckpt.model;
  const std::string tag = "stage" + std::to_string(stage);
  cache.bind(model);

  std::vector<const CorrespondenceSample*> pool;
  pool.reserve(subset.size());
  for (const auto i : subset) pool.push_back(&data.train[i]);

  ckpt.history.push_back(evaluate_epoch(model, cache, cfg, data.val, tag, 0, ckpt.step,
                                        mean_train_loss(model, cache, cfg, pool, use_xobj)));
  AdamW<T> opt(model.params(), cfg.optimizer, trainable);
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs_per_stage; ++epoch) {
    const auto order = epoch_order(pool.size(), cfg.seed, stage, epoch);
    for (std::size_t start = 0; start < order.size(); start += b) {
      std::vector<const CorrespondenceSample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + b); ++i) {
        batch.push_back(pool[order[i]]);
        ckpt.order_hash[stage - 1] = mix_order(ckpt.order_hash[stage - 1], pool[order[i]]->id);
      }
      auto grad = model.params().zeros();
      const auto r = batch_gradient(model, cache, cfg, batch, use_xobj, grad);
      opt.step(model.params(), grad);
      ++ckpt.step;
      if (sink) {
        sink({ckpt.step, stage, r.l_mask, r.l_xobj, static_cast<double>(model.fusion().weight(model.params())),
              r.embed_distance});
      }
    }
    ckpt.history.push_back(evaluate_epoch(model, cache, cfg, data.val, tag, epoch, ckpt.step,
                                          mean_train_loss(model, cache, cfg, pool, use_xobj)));
  }
  ckpt.stage = tag;
}

inline std::set<ParamGroup> stage2_groups(bool fusion) {
  std::set<ParamGroup> g{ParamGroup::Projector, ParamGroup::Decoder, ParamGroup::MaskToken, ParamGroup::Visibility};
  if (fusion) {
    g.insert(ParamGroup::Fusion);
    g.insert(ParamGroup::TextTable);
  }
  return g;
}

}  // namespace detail

/// Stage 1: only the fusion parameters learn, on a stage1_fraction subset of
/// the joint training set, with L_mask alone.
template <typename T>
Checkpoint<T> train_stage1(const TrainConfig& cfg, const TrainData& data, const StepSink& sink = {},
                           FeatureCache<T>* cache = nullptr) {
  cfg.validate();
  if (!cfg.enable_mcfuse) throw ConfigError("stage 1 trains the fusion weights and needs enable_mcfuse");
  auto ckpt = init_checkpoint<T>(cfg);
  FeatureCache<T> local;
  const auto subset = stage1_subset(data.train.size(), cfg.stage1_fraction, cfg.seed);
  detail::run_stage(ckpt, data, subset, 1, {ParamGroup::Fusion}, false, cache ? *cache : local, sink);
  return ckpt;
}

/// Stage 2: everything except the visual backbone learns on the full joint
/// training set with L_mask (+ lambda * L_Xobj when enabled).
template <typename T>
Checkpoint<T> train_stage2(const TrainConfig& cfg, const TrainData& data, Checkpoint<T> ckpt,
                           const StepSink& sink = {}, FeatureCache<T>* cache = nullptr) {
  cfg.validate();
  if (ckpt.model.config().embed_dim != cfg.embed_dim) throw ConfigError("checkpoint embed_dim differs from config");
  ckpt.config = cfg;
  ckpt.model.set_fusion_enabled(cfg.enable_mcfuse);
  FeatureCache<T> local;
  std::vector<std::size_t> all(data.train.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  detail::run_stage(ckpt, data, all, 2, detail::stage2_groups(cfg.enable_mcfuse), cfg.enable_xobjalign,
                    cache ? *cache : local, sink);
  return ckpt;
}

/// Both stages; stage 1 is skipped when fusion is disabled.
template <typename T>
Checkpoint<T> train(const TrainConfig& cfg, const TrainData& data, const StepSink& sink = {},
                    FeatureCache<T>* cache = nullptr) {
  auto ckpt = cfg.enable_mcfuse ? train_stage1<T>(cfg, data, sink, cache) : init_checkpoint<T>(cfg);
  return train_stage2<T>(cfg, data, std::move(ckpt), sink, cache);
}

struct AblationRow {
  std::string name;
  bool mcfuse = false;
  bool xobjalign = false;
  double val_iou = 0.0;
  double val_embed_distance = 0.0;
  double fusion_weight = 0.0;
  /// Order of the joint-training samples, shared by all four rows.
  std::uint64_t data_order_hash = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
};

/// Trains the four flag combinations from one base config and reports the
/// final validation IoU of each.
inline AblationTable run_ablation(const TrainConfig& base, const TrainData& data) {
  static const std::array<std::tuple<const char*, bool, bool>, 4> kRows{{
      {"Base", false, false}, {"+MCFuse", true, false}, {"+XObjAlign", false, true}, {"Full", true, true}}};
  AblationTable table;
  FeatureCache<float> cache;
  for (const auto& [name, mcfuse, xobj] : kRows) {
    auto cfg = base;
    cfg.enable_mcfuse = mcfuse;
    cfg.enable_xobjalign = xobj;
    const auto ckpt = train<float>(cfg, data, {}, &cache);
    const auto& last = ckpt.history.back();
    table.rows.push_back({name, mcfuse, xobj, last.val_iou, last.val_embed_distance, last.fusion_weight,
                          ckpt.order_hash[1]});
  }
  return table;
}

inline nlohmann::json to_json(const AblationTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"name", r.name},
                    {"mcfuse", r.mcfuse},
                    {"xobjalign", r.xobjalign},
                    {"val_iou", r.val_iou},
                    {"val_embed_distance", r.val_embed_distance},
                    {"fusion_weight", r.fusion_weight},
                    {"data_order_hash", r.data_order_hash}});
  }
  return {{"rows", rows}};
}

inline std::string to_markdown(const AblationTable& t) {
  std::string out = "| Method | MCFuse | XObjAlign | IoU |\n|---|:-:|:-:|--:|\n";
  char buf[32];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.val_iou);
    out += "| " + r.name + " | " + (r.mcfuse ? "✓" : "✗") + " | " + (r.xobjalign ? "✓" : "✗") + " | " + buf + " |\n";
  }
  return out;
}

}  // namespace xvc
