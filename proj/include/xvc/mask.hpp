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
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xvc/errors.hpp"

namespace xvc {

/// Row-major boolean pixel grid. Pixel (r, c) has its center at exactly
/// (r, c), which makes centroids analytically checkable.
class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int height, int width, bool fill = false) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw InvalidSpec("mask dimensions must be >= 1, got " + std::to_string(height) + "x" +
                        std::to_string(width));
    }
    bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
  }

  BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
      : height_(height), width_(width), bits_(std::move(bits)) {
    if (height < 1 || width < 1) {
      throw InvalidSpec("mask dimensions must be >= 1");
    }
    if (bits_.size() != static_cast<std::size_t>(height) * width) {
      throw DimensionMismatch("bit count " + std::to_string(bits_.size()) + " != " +
                              std::to_string(height) + "x" + std::to_string(width));
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty_grid() const noexcept { return bits_.empty(); }

  bool operator()(int r, int c) const { return bits_[index(r, c)] != 0; }
  void set(int r, int c, bool v = true) { bits_[index(r, c)] = v ? 1 : 0; }

  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < height_ && c < width_; }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  bool same_shape(const BinaryMask& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * width_ + c; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Column-major run lengths, alternating 0-runs and 1-runs, starting with a
/// 0-run that may be empty.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::int64_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

struct TrackFrame {
  std::optional<BinaryMask> mask;
  bool visible = false;
};

/// Frame-indexed masks of one object in one view.
struct MaskTrack {
  std::string object_id;
  std::map<int, TrackFrame> frames;
};

struct Centroid {
  double row = 0.0;
  double col = 0.0;
};

/// Inclusive pixel bounds.
struct BoundingBox {
  int row0 = 0, col0 = 0, row1 = -1, col1 = -1;
  bool empty() const noexcept { return row1 < row0 || col1 < col0; }
};

inline std::int64_t area(const BinaryMask& mask) {
  return std::count(mask.bits().begin(), mask.bits().end(), std::uint8_t{1});
}

inline Centroid centroid(const BinaryMask& mask) {
  double sr = 0.0, sc = 0.0;
  std::int64_t n = 0;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c)) {
        sr += r;
        sc += c;
        ++n;
      }
    }
  }
  if (n == 0) throw EmptyMask("centroid of an empty mask");
  return {sr / static_cast<double>(n), sc / static_cast<double>(n)};
}

inline BoundingBox bounding_box(const BinaryMask& mask) {
  BoundingBox box{mask.height(), mask.width(), -1, -1};
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c)) continue;
      box.row0 = std::min(box.row0, r);
      box.col0 = std::min(box.col0, c);
      box.row1 = std::max(box.row1, r);
      box.col1 = std::max(box.col1, c);
    }
  }
  return box;
}

/// Shifts every pixel by (drow, dcol). Pixels leaving the frame are dropped.
inline BinaryMask translate(const BinaryMask& mask, int drow, int dcol) {
  BinaryMask out(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c) && mask.contains(r + drow, c + dcol)) out.set(r + drow, c + dcol);
    }
  }
  return out;
}

/// Square dilation with the given radius (Chebyshev distance).
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
  BinaryMask out(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c)) continue;
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          if (mask.contains(r + dr, c + dc)) out.set(r + dr, c + dc);
        }
      }
    }
  }
  return out;
}

inline RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::int64_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int r = 0; r < mask.height(); ++r) {
      const std::uint8_t v = mask(r, c) ? 1 : 0;
      if (v != current) {
        rle.runs.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.runs.push_back(run);
  return rle;
}

/// Throws MalformedRle when the run list violates the codec invariants.
inline void validate(const RleMask& rle) {
  if (rle.height < 1 || rle.width < 1) {
    throw MalformedRle("dimensions must be >= 1");
  }
  if (rle.runs.empty()) throw MalformedRle("run list is empty");
  std::int64_t total = 0;
  for (std::size_t i = 0; i < rle.runs.size(); ++i) {
    const auto run = rle.runs[i];
    if (run < 0) throw MalformedRle("negative run length at index " + std::to_string(i));
    if (run == 0 && i != 0) {
      throw MalformedRle("zero-length run at index " + std::to_string(i));
    }
    total += run;
  }
  const auto expected = static_cast<std::int64_t>(rle.height) * rle.width;
  if (total != expected) {
    throw MalformedRle("runs sum to " + std::to_string(total) + ", expected " +
                       std::to_string(expected));
  }
}

inline BinaryMask rle_decode(const RleMask& rle) {
  validate(rle);
  BinaryMask mask(rle.height, rle.width);
  std::int64_t pos = 0;
  bool value = false;
  for (const auto run : rle.runs) {
    if (value) {
      for (std::int64_t k = pos; k < pos + run; ++k) {
        mask.set(static_cast<int>(k % rle.height), static_cast<int>(k / rle.height));
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

/// Checks the track invariants: visible frames carry a nonempty mask and
/// invisible frames carry no mask or an empty one.
inline void validate(const MaskTrack& track) {
  for (const auto& [index, frame] : track.frames) {
    const bool nonempty = frame.mask && area(*frame.mask) > 0;
    if (frame.visible && !nonempty) {
      throw InvalidSpec("track " + track.object_id + " frame " + std::to_string(index) +
                        ": visible frame without a nonempty mask");
    }
    if (!frame.visible && nonempty) {
      throw InvalidSpec("track " + track.object_id + " frame " + std::to_string(index) +
                        ": invisible frame carries a nonempty mask");
    }
  }
}

}  // namespace xvc
