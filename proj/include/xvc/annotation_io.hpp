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

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvc/errors.hpp"
#include "xvc/mask.hpp"

namespace xvc {

/// In-memory form of the annotation / prediction file:
///   {height, width, tracks: [{object_id, frames: [{frame_index, visible, rle}]}]}
/// Prediction files additionally carry `direction` and `split`.
struct AnnotationFile {
  int height = 0;
  int width = 0;
  std::vector<MaskTrack> tracks;
  std::optional<std::string> direction;
  std::optional<std::string> split;

  const MaskTrack* find(const std::string& object_id) const {
    for (const auto& t : tracks) {
      if (t.object_id == object_id) return &t;
    }
    return nullptr;
  }
};

inline nlohmann::json to_json(const AnnotationFile& file) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& track : file.tracks) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& [index, frame] : track.frames) {
      nlohmann::json rle = nullptr;
      if (frame.mask) rle = rle_encode(*frame.mask).runs;
      frames.push_back({{"frame_index", index}, {"visible", frame.visible}, {"rle", rle}});
    }
    tracks.push_back({{"object_id", track.object_id}, {"frames", frames}});
  }
  nlohmann::json j = {{"height", file.height}, {"width", file.width}, {"tracks", tracks}};
  if (file.direction) j["direction"] = *file.direction;
  if (file.split) j["split"] = *file.split;
  return j;
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* field,
                                     const std::string& where) {
  if (!j.is_object() || !j.contains(field)) {
    throw SchemaError(where + ": missing field '" + field + "'");
  }
  return j.at(field);
}

inline int require_int(const nlohmann::json& j, const char* field, const std::string& where) {
  const auto& v = require(j, field, where);
  if (!v.is_number_integer()) throw SchemaError(where + ": field '" + field + "' must be an integer");
  return v.get<int>();
}

}  // namespace detail

/// Parses and validates an annotation document. `source` names the file in
/// error messages.
/// Ground-truth files require a nonempty mask on every visible frame.
/// Prediction files carry visibility as a separate decision, so a visible
/// frame may hold an empty mask there.
enum class AnnotationKind { GroundTruth, Prediction };

inline AnnotationFile annotation_from_json(const nlohmann::json& j, const std::string& source,
                                           AnnotationKind kind = AnnotationKind::GroundTruth) {
  AnnotationFile file;
  file.height = detail::require_int(j, "height", source);
  file.width = detail::require_int(j, "width", source);
  if (file.height < 1 || file.width < 1) throw SchemaError(source + ": height/width must be >= 1");
  if (j.contains("direction") && j["direction"].is_string()) file.direction = j["direction"].get<std::string>();
  if (j.contains("split") && j["split"].is_string()) file.split = j["split"].get<std::string>();

  const auto& tracks = detail::require(j, "tracks", source);
  if (!tracks.is_array()) throw SchemaError(source + ": field 'tracks' must be an array");
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const std::string where = source + ": tracks[" + std::to_string(t) + "]";
    MaskTrack track;
    const auto& id = detail::require(tracks[t], "object_id", where);
    if (!id.is_string()) throw SchemaError(where + ": field 'object_id' must be a string");
    track.object_id = id.get<std::string>();
    const auto& frames = detail::require(tracks[t], "frames", where);
    if (!frames.is_array()) throw SchemaError(where + ": field 'frames' must be an array");
    int last = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const std::string fwhere = where + ".frames[" + std::to_string(f) + "]";
      const int index = detail::require_int(frames[f], "frame_index", fwhere);
      if (f > 0 && index <= last) {
        throw SchemaError(fwhere + ": frame_index must be strictly increasing");
      }
      last = index;
      const auto& vis = detail::require(frames[f], "visible", fwhere);
      if (!vis.is_boolean()) throw SchemaError(fwhere + ": field 'visible' must be a boolean");
      TrackFrame frame;
      frame.visible = vis.get<bool>();
      const auto& rle = detail::require(frames[f], "rle", fwhere);
      if (!rle.is_null()) {
        if (!rle.is_array()) throw SchemaError(fwhere + ": field 'rle' must be an array or null");
        RleMask r{file.height, file.width, {}};
        for (const auto& v : rle) {
          if (!v.is_number_integer()) throw SchemaError(fwhere + ": 'rle' must contain integers only");
          r.runs.push_back(v.get<std::int64_t>());
        }
        try {
          frame.mask = rle_decode(r);
        } catch (const MalformedRle& e) {
          throw SchemaError(fwhere + ": field 'rle': " + e.what());
        }
      }
      const bool nonempty = frame.mask && area(*frame.mask) > 0;
      if (kind == AnnotationKind::GroundTruth && frame.visible && !nonempty) {
        throw SchemaError(fwhere + ": visible frame requires a nonempty 'rle'");
      }
      if (frame.visible && !frame.mask) throw SchemaError(fwhere + ": visible frame requires an 'rle'");
      track.frames.emplace(index, std::move(frame));
    }
    file.tracks.push_back(std::move(track));
  }
  return file;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

inline AnnotationFile read_annotation(const std::string& path,
                                      AnnotationKind kind = AnnotationKind::GroundTruth) {
  return annotation_from_json(read_json_file(path), path, kind);
}

inline void write_annotation(const std::string& path, const AnnotationFile& file) {
  write_text_file(path, to_json(file).dump() + "\n");
}

}  // namespace xvc
