// Copyright 2026 The ipa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deterministic text formatting for artifacts. Doubles are rendered with 17
// significant digits so that re-parsing reproduces the exact bit pattern and
// artifact files can be compared byte for byte across runs.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "ipa/error.hpp"

namespace ipa {

// Renders a double with 17 significant digits (lossless round-trip).
// Non-finite values render as inf/-inf/nan for CSV diagnostics.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
  char buffer[48];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

// Line-oriented CSV emission with '\n' endings and no quoting; cell content
// is the caller's responsibility (the library never emits commas in cells).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), file_(path) {
    if (!file_) {
      throw ParameterError("CsvWriter: cannot open '" + path +
                           "' for writing");
    }
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) file_ << ',';
      file_ << cells[i];
    }
    file_ << '\n';
  }

  // Flushes and verifies the stream; call once when done writing.
  void close() {
    file_.flush();
    if (!file_.good()) {
      throw ParameterError("CsvWriter: write to '" + path_ + "' failed");
    }
    file_.close();
  }

 private:
  std::string path_;
  std::ofstream file_;
};

}  // namespace ipa
