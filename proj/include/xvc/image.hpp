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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "xvc/errors.hpp"

namespace xvc {

/// H x W x 3 image, row-major interleaved RGB, values in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width * kChannels, 0.0f) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  float& at(int r, int c, int ch) { return data_[offset(r, c) + ch]; }
  float at(int r, int c, int ch) const { return data_[offset(r, c) + ch]; }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int r, int c) const {
    return (static_cast<std::size_t>(r) * width_ + c) * kChannels;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// Snaps every value to the nearest 8-bit level so PPM storage is lossless.
inline void quantize(Image& image) {
  for (auto& v : image.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
}

inline void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<char> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(),
                 [](float v) { return static_cast<char>(to_byte(v)); });
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P6" || width < 1 || height < 1 || maxval != 255) {
    throw IoError(path + ": unsupported PPM header");
  }
  in.get();
  Image image(height, width);
  std::vector<char> bytes(image.data().size());
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path + ": truncated pixel data");
  }
  std::transform(bytes.begin(), bytes.end(), image.data().begin(), [](char b) {
    return static_cast<float>(static_cast<unsigned char>(b)) / 255.0f;
  });
  return image;
}

}  // namespace xvc
