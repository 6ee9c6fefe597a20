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

#include <stdexcept>
#include <string>

namespace xvc {

/// Base class for every error raised by the library. `kind()` is a stable
/// identifier (e.g. "EmptyMask") that the CLI surfaces in its messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define XVC_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

XVC_DEFINE_ERROR(EmptyMask);
XVC_DEFINE_ERROR(MalformedRle);
XVC_DEFINE_ERROR(DimensionMismatch);
XVC_DEFINE_ERROR(ShapeMismatch);
XVC_DEFINE_ERROR(InvalidSpec);
XVC_DEFINE_ERROR(UnknownToken);
XVC_DEFINE_ERROR(BadInputRange);
XVC_DEFINE_ERROR(ConfigError);
XVC_DEFINE_ERROR(SchemaError);
XVC_DEFINE_ERROR(IoError);

#undef XVC_DEFINE_ERROR

}  // namespace xvc
