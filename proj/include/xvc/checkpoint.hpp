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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvc/errors.hpp"
#include "xvc/training.hpp"

namespace xvc {

// Layout: "XVCK", u32 version, u64 header size, JSON header, then every
// parameter as little-endian float32 in store order.
inline constexpr char kCheckpointMagic[4] = {'X', 'V', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos, const std::string& path) {
  if (pos + sizeof(U) > in.size()) throw IoError(path + ": truncated checkpoint");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

inline nlohmann::json arch_json(const ModelConfig& m) {
  return {{"height", m.height},
          {"width", m.width},
          {"embed_dim", m.embed_dim},
          {"channels", m.channels},
          {"vocab_size", m.vocab_size},
          {"fusion_enabled", m.fusion_enabled}};
}

}  // namespace detail

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt) {
  nlohmann::json header;
  header["arch"] = detail::arch_json(ckpt.model.config());
  header["config"] = to_json(ckpt.config);
  header["stage"] = ckpt.stage;
  header["step"] = ckpt.step;
  header["history"] = nlohmann::json::array();
  for (const auto& r : ckpt.history) header["history"].push_back(to_json(r));
  header["tensors"] = nlohmann::json::array();
  for (const auto& s : ckpt.model.params().slots()) {
    header["tensors"].push_back({{"name", s.name}, {"shape", s.shape}, {"offset", s.offset}});
  }
  const std::string head = header.dump();

  std::string out(kCheckpointMagic, 4);
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, head.size());
  out += head;
  for (const T v : ckpt.model.params().values()) {
    detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

template <typename T>
Checkpoint<T> deserialize_checkpoint(const std::string& bytes, const std::string& path = "checkpoint") {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw IoError(path + ": not a checkpoint file");
  }
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos, path);
  if (version != kCheckpointVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto head_size = detail::get_le<std::uint64_t>(bytes, pos, path);
  if (pos + head_size > bytes.size()) throw IoError(path + ": truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, head_size));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": bad checkpoint header: " + e.what());
  }
  pos += head_size;

  try {
    const auto& a = header.at("arch");
    ModelConfig m;
    m.height = a.at("height").get<int>();
    m.width = a.at("width").get<int>();
    m.embed_dim = a.at("embed_dim").get<int>();
    m.channels = a.at("channels").get<std::array<int, 3>>();
    m.vocab_size = a.at("vocab_size").get<int>();
    m.fusion_enabled = a.at("fusion_enabled").get<bool>();

    Checkpoint<T> ckpt{Model<T>(m, 0), train_config_from_json(header.at("config"), path + ": config"),
                       header.at("stage").get<std::string>(), header.at("step").get<std::int64_t>(), {}};
    for (const auto& r : header.at("history")) ckpt.history.push_back(epoch_record_from_json(r));

    const auto& slots = ckpt.model.params().slots();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != slots.size()) throw SchemaError(path + ": tensor count does not match the architecture");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (tensors[i].at("name").get<std::string>() != slots[i].name ||
          tensors[i].at("shape").get<std::vector<int>>() != slots[i].shape) {
        throw SchemaError(path + ": tensor '" + tensors[i].at("name").get<std::string>() +
                          "' does not match the architecture");
      }
    }
    auto& values = ckpt.model.params().values();
    if (bytes.size() - pos != values.size() * 4) throw IoError(path + ": parameter data has the wrong size");
    for (auto& v : values) v = static_cast<T>(std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, pos, path)));
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": bad checkpoint header: " + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  const auto bytes = serialize_checkpoint(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint<T>(ss.str(), path);
}

}  // namespace xvc
