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
#include <vector>

#include "xvc/errors.hpp"

namespace xvc {

/// Query and target object embeddings, B x d each, row-major.
template <typename T>
struct AlignmentBatch {
  int batch = 0;
  int dim = 0;
  std::vector<T> query;
  std::vector<T> target;

  void validate() const {
    if (batch < 0 || dim < 1 || query.size() != static_cast<std::size_t>(batch) * dim ||
        target.size() != query.size()) {
      throw ShapeMismatch("alignment batch: B=" + std::to_string(batch) + " d=" + std::to_string(dim) +
                          " query=" + std::to_string(query.size()) +
                          " target=" + std::to_string(target.size()));
    }
    for (std::size_t i = 0; i < query.size(); ++i) {
      if (!std::isfinite(query[i]) || !std::isfinite(target[i])) {
        throw ShapeMismatch("alignment batch contains non-finite values");
      }
    }
  }
};

enum class AlignmentDistance { Euclidean, SquaredEuclidean };

/// Mean over the batch of the (optionally squared) Euclidean distance
/// between query and target embeddings. An empty batch contributes 0.
template <typename T>
T xobj_loss(const AlignmentBatch<T>& b, AlignmentDistance kind = AlignmentDistance::Euclidean) {
  b.validate();
  if (b.batch == 0) return T(0);
  T total = 0;
  for (int i = 0; i < b.batch; ++i) {
    T sq = 0;
    for (int k = 0; k < b.dim; ++k) {
      const T diff = b.query[i * b.dim + k] - b.target[i * b.dim + k];
      sq += diff * diff;
    }
    total += kind == AlignmentDistance::Euclidean ? std::sqrt(sq) : sq;
  }
  return total / static_cast<T>(b.batch);
}

template <typename T>
struct AlignmentGradients {
  std::vector<T> query;
  std::vector<T> target;
};

/// Analytic gradient; coincident pairs take the zero subgradient.
template <typename T>
AlignmentGradients<T> xobj_loss_backward(const AlignmentBatch<T>& b,
                                         AlignmentDistance kind = AlignmentDistance::Euclidean) {
  b.validate();
  AlignmentGradients<T> g{std::vector<T>(b.query.size(), T(0)), std::vector<T>(b.query.size(), T(0))};
  if (b.batch == 0) return g;
  const T inv_b = T(1) / static_cast<T>(b.batch);
  for (int i = 0; i < b.batch; ++i) {
    T sq = 0;
    for (int k = 0; k < b.dim; ++k) {
      const T diff = b.query[i * b.dim + k] - b.target[i * b.dim + k];
      sq += diff * diff;
    }
    T scale;
    if (kind == AlignmentDistance::Euclidean) {
      const T norm = std::sqrt(sq);
      if (norm == T(0)) continue;
      scale = inv_b / norm;
    } else {
      scale = T(2) * inv_b;
    }
    for (int k = 0; k < b.dim; ++k) {
      const T diff = b.query[i * b.dim + k] - b.target[i * b.dim + k];
      g.query[i * b.dim + k] = scale * diff;
      g.target[i * b.dim + k] = -scale * diff;
    }
  }
  return g;
}

}  // namespace xvc
