// Copyright 2026 The APT Toolkit Authors
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
#include <string_view>

namespace apt {

enum class Errc {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  InvalidDimensions,
  EmptyRegion,
  IndivisibleRegion,
  IndivisibleImage,
  CellOutOfBounds,
  DimensionMismatch,
  EmptyBatch,
  ShapeMismatch,
  IndivisibleWindow,
  EmptySequence,
  CountMismatch,
  NoImagesFound,
  InvalidConfig,
  UnwritableOutput,
  InvariantViolation,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptData: return "CorruptData";
    case Errc::InvalidDimensions: return "InvalidDimensions";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::IndivisibleRegion: return "IndivisibleRegion";
    case Errc::IndivisibleImage: return "IndivisibleImage";
    case Errc::CellOutOfBounds: return "CellOutOfBounds";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IndivisibleWindow: return "IndivisibleWindow";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::NoImagesFound: return "NoImagesFound";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::UnwritableOutput: return "UnwritableOutput";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every failure raised by the toolkit carries one of the codes above so
/// callers (the CLI in particular) can map them to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace apt
