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

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvc/annotation_io.hpp"
#include "xvc/dataset.hpp"
#include "xvc/image.hpp"

namespace xvc {

// Directory layout:
//   frames/sceneNNNN_{ego,exo}.ppm
//   annotations/{ego,exo}.json   one track per object, frame_index = scene index
//   manifest.json                samples with split, direction, scenario, category

struct GenerateOptions {
  std::uint64_t seed = 0;
  int n_scenes = 10;
  int height = 64;
  int width = 64;
  SplitFractions fractions;
};

struct DatasetDirectory {
  int height = 0;
  int width = 0;
  std::vector<CorrespondenceSample> samples;
  /// Split name per sample, parallel to `samples`.
  std::vector<std::string> splits;
  std::map<std::string, std::string> scenario_of_object;

  std::vector<CorrespondenceSample> subset(const std::string& split_name) const {
    std::vector<CorrespondenceSample> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (split_name == "all" || splits[i] == split_name) out.push_back(samples[i]);
    }
    return out;
  }
};

inline std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene%04d", index);
  return buf;
}

inline const char* view_name(View v) { return v == View::Ego ? "ego" : "exo"; }

/// Scene `i` uses scenario i mod 6 and seed derive_seed(seed, i).
inline SceneSpec dataset_scene_spec(const GenerateOptions& opts, int index) {
  return scenario_spec(kScenarios[static_cast<std::size_t>(index) % kScenarios.size()],
                       derive_seed(opts.seed, static_cast<std::uint64_t>(index)), opts.height, opts.width);
}

/// Writes the dataset and returns the written paths relative to `dir`.
inline std::vector<std::string> write_dataset(const std::string& dir, const GenerateOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.n_scenes < 1) throw InvalidSpec("n_scenes must be >= 1");
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "annotations");

  std::vector<std::string> written;
  std::array<AnnotationFile, 2> ann;
  for (auto& a : ann) a.height = opts.height, a.width = opts.width;
  std::vector<CorrespondenceSample> samples;
  nlohmann::json scenes = nlohmann::json::array();
  for (int i = 0; i < opts.n_scenes; ++i) {
    const auto spec = dataset_scene_spec(opts, i);
    const auto scene = render_scene(spec);
    const auto name = scene_name(i);
    for (const View v : {View::Ego, View::Exo}) {
      const auto rel = "frames/" + name + "_" + view_name(v) + ".ppm";
      write_ppm((fs::path(dir) / rel).string(), *scene.frames[static_cast<int>(v)]);
      written.push_back(rel);
    }
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      const auto& o = scene.objects[k];
      for (const View v : {View::Ego, View::Exo}) {
        const int vi = static_cast<int>(v);
        MaskTrack track;
        track.object_id = name + "_obj" + std::to_string(k);
        TrackFrame frame;
        frame.visible = o.visible[vi];
        if (frame.visible) frame.mask = o.masks[vi];
        track.frames.emplace(i, std::move(frame));
        ann[vi].tracks.push_back(std::move(track));
      }
    }
    for (auto& s : scene_samples(scene, name, i)) samples.push_back(std::move(s));
    scenes.push_back({{"name", name}, {"scenario", spec.scenario}, {"seed", spec.seed}});
  }
  for (const View v : {View::Ego, View::Exo}) {
    const auto rel = std::string("annotations/") + view_name(v) + ".json";
    write_annotation((fs::path(dir) / rel).string(), ann[static_cast<int>(v)]);
    written.push_back(rel);
  }

  const auto parts = split(samples, opts.fractions, opts.seed);
  std::map<std::string, std::string> split_of;
  for (const auto& [label, part] : {std::pair{"train", &parts.train}, {"val", &parts.val}, {"test", &parts.test}}) {
    for (const auto& s : *part) split_of[s.id] = label;
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : samples) {
    entries.push_back({{"id", s.id},
                       {"object_id", s.object_id},
                       {"frame_index", s.frame_index},
                       {"direction", to_string(s.direction)},
                       {"scenario", s.scenario},
                       {"category", s.category},
                       {"category_name", categories()[static_cast<std::size_t>(s.category)].name},
                       {"gt_visible", s.gt_visible},
                       {"split", split_of.at(s.id)}});
  }
  const nlohmann::json manifest = {
      {"seed", opts.seed},
      {"n_scenes", opts.n_scenes},
      {"height", opts.height},
      {"width", opts.width},
      {"fractions", {{"train", opts.fractions.train}, {"val", opts.fractions.val}, {"test", opts.fractions.test}}},
      {"counts", {{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}}},
      {"scenes", scenes},
      {"samples", entries},
  };
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n");
  written.push_back("manifest.json");
  return written;
}

/// Rebuilds the correspondence samples of a generated dataset directory.
inline DatasetDirectory load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest_path = (fs::path(dir) / "manifest.json").string();
  const auto manifest = read_json_file(manifest_path);
  DatasetDirectory out;
  std::array<AnnotationFile, 2> ann;
  for (const View v : {View::Ego, View::Exo}) {
    ann[static_cast<int>(v)] =
        read_annotation((fs::path(dir) / "annotations" / (std::string(view_name(v)) + ".json")).string());
  }
  try {
    out.height = manifest.at("height").get<int>();
    out.width = manifest.at("width").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(manifest_path + ": fields 'height' and 'width' must be integers");
  }
  for (const auto& a : ann) {
    if (a.height != out.height || a.width != out.width) {
      throw SchemaError(dir + ": annotation size does not match manifest.json");
    }
  }

  std::map<std::string, std::shared_ptr<const Image>> frames;
  auto frame = [&](const std::string& scene, View v) {
    const auto rel = "frames/" + scene + "_" + view_name(v) + ".ppm";
    auto it = frames.find(rel);
    if (it == frames.end()) {
      it = frames.emplace(rel, std::make_shared<const Image>(read_ppm((fs::path(dir) / rel).string()))).first;
    }
    return it->second;
  };
  auto lookup = [&](View v, const std::string& object_id, int index, const std::string& where) -> const TrackFrame& {
    const auto* track = ann[static_cast<int>(v)].find(object_id);
    if (track == nullptr || !track->frames.contains(index)) {
      throw SchemaError(where + ": no " + view_name(v) + " annotation for " + object_id);
    }
    return track->frames.at(index);
  };

  if (!manifest.contains("samples") || !manifest["samples"].is_array()) {
    throw SchemaError(manifest_path + ": field 'samples' must be an array");
  }
  const auto& entries = manifest["samples"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = manifest_path + ": samples[" + std::to_string(i) + "]";
    const auto& e = entries[i];
    CorrespondenceSample s;
    std::string split_name;
    try {
      s.id = e.at("id").get<std::string>();
      s.object_id = e.at("object_id").get<std::string>();
      s.frame_index = e.at("frame_index").get<int>();
      s.direction = parse_direction(e.at("direction").get<std::string>());
      s.scenario = e.at("scenario").get<std::string>();
      s.category = e.at("category").get<int>();
      split_name = e.at("split").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(where + ": " + ex.what());
    } catch (const InvalidSpec& ex) {
      throw SchemaError(where + ": field 'direction': " + ex.what());
    }
    if (s.category < 0 || s.category >= kNumCategories) throw SchemaError(where + ": field 'category' out of range");
    const auto scene = s.object_id.substr(0, s.object_id.find("_obj"));
    const auto q = query_view(s.direction), t = target_view(s.direction);
    const auto& qf = lookup(q, s.object_id, s.frame_index, where);
    if (!qf.visible) throw SchemaError(where + ": query object is not visible");
    s.query_mask = *qf.mask;
    const auto& tf = lookup(t, s.object_id, s.frame_index, where);
    s.gt_visible = tf.visible;
    if (tf.visible) s.gt_target_mask = *tf.mask;
    s.query_frame = frame(scene, q);
    s.target_frame = frame(scene, t);
    out.scenario_of_object[s.object_id] = s.scenario;
    out.samples.push_back(std::move(s));
    out.splits.push_back(split_name);
  }
  return out;
}

}  // namespace xvc
