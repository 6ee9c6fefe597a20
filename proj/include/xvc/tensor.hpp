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
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "xvc/errors.hpp"
#include "xvc/random.hpp"

namespace xvc {

/// H x W x C feature map, channels innermost.
template <typename T>
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, T(0)) {}

  T* pixel(int r, int c) { return data.data() + (static_cast<std::size_t>(r) * width + c) * channels; }
  const T* pixel(int r, int c) const {
    return data.data() + (static_cast<std::size_t>(r) * width + c) * channels;
  }
};

/// Module that owns a parameter, used to select trainable subsets.
enum class ParamGroup { Backbone, Projector, TextTable, Fusion, Decoder, MaskToken, Visibility };

inline const char* to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::Backbone: return "backbone";
    case ParamGroup::Projector: return "projector";
    case ParamGroup::TextTable: return "text_table";
    case ParamGroup::Fusion: return "fusion";
    case ParamGroup::Decoder: return "decoder";
    case ParamGroup::MaskToken: return "mask_token";
    case ParamGroup::Visibility: return "visibility";
  }
  return "unknown";
}

struct ParamSlot {
  std::string name;
  ParamGroup group;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  /// Subject to decoupled weight decay (matrices yes; biases and scalars no).
  bool decay = true;
};

/// Flat parameter storage with named, shaped slices. Gradients use a buffer
/// of the same length so every slot addresses both.
template <typename T>
class ParamStore {
 public:
  using Slot = std::size_t;

  Slot add(std::string name, ParamGroup group, std::vector<int> shape, bool decay) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    slots_.push_back({std::move(name), group, std::move(shape), values_.size(), n, decay});
    values_.resize(values_.size() + n, T(0));
    return slots_.size() - 1;
  }

  std::span<T> operator[](Slot s) { return {values_.data() + slots_[s].offset, slots_[s].size}; }
  std::span<const T> operator[](Slot s) const { return {values_.data() + slots_[s].offset, slots_[s].size}; }

  std::vector<T>& values() noexcept { return values_; }
  const std::vector<T>& values() const noexcept { return values_; }
  const std::vector<ParamSlot>& slots() const noexcept { return slots_; }
  const ParamSlot& slot(Slot s) const { return slots_.at(s); }
  std::size_t size() const noexcept { return values_.size(); }

  const ParamSlot* find(const std::string& name) const {
    for (const auto& s : slots_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  std::vector<T> zeros() const { return std::vector<T>(values_.size(), T(0)); }

  void fill_normal(Slot s, Rng& rng, double stddev, double mean = 0.0) {
    for (auto& v : (*this)[s]) v = static_cast<T>(normal(rng, mean, stddev));
  }

 private:
  std::vector<ParamSlot> slots_;
  std::vector<T> values_;
};

template <typename T>
std::span<T> slice(std::vector<T>& buffer, const ParamSlot& slot) {
  return {buffer.data() + slot.offset, slot.size};
}

template <typename T>
std::span<const T> slice(const std::vector<T>& buffer, const ParamSlot& slot) {
  return {buffer.data() + slot.offset, slot.size};
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

/// log(1 + exp(x)) without overflow.
template <typename T>
T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::fabs(x)));
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace xvc
