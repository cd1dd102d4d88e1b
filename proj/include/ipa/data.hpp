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
// Desk-scale tabular datasets for the training experiments: CSV ingestion
// (numeric feature columns, final label column), CSV emission, a synthetic
// two-blob generator, and a deterministic train/test split.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "ipa/error.hpp"
#include "ipa/rng.hpp"

namespace ipa {

// A fixed-width numeric dataset: one feature row and one label per point.
struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<double> labels;

  std::size_t n() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }
};

namespace internal {

inline double parse_csv_number(const std::string& cell, std::size_t line_no,
                               const std::string& path) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                           *(last - 1) == '\r')) {
    --last;
  }
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc() || result.ptr != last || first == last) {
    throw ParameterError("load_csv_dataset: " + path + " line " +
                         std::to_string(line_no) + ": cannot parse '" + cell +
                         "' as a number");
  }
  return value;
}

inline bool looks_like_header(const std::string& line) {
  // A header row contains at least one cell that does not parse as a number.
  std::stringstream row(line);
  std::string cell;
  while (std::getline(row, cell, ',')) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                             *(last - 1) == '\r')) {
      --last;
    }
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last || first == last) {
      return true;
    }
  }
  return false;
}

}  // namespace internal

// Loads a CSV dataset: optional header row, numeric feature columns, final
// column interpreted as the label. Blank lines and lines starting with '#'
// are skipped. Every data row must have the same number of columns and at
// least two (one feature plus the label).
inline Dataset load_csv_dataset(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ParameterError("load_csv_dataset: cannot open '" + path + "'");
  }

  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  bool saw_first_content_row = false;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;

    if (!saw_first_content_row) {
      saw_first_content_row = true;
      if (internal::looks_like_header(line)) continue;
    }

    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      row.push_back(internal::parse_csv_number(cell, line_no, path));
    }
    if (row.size() < 2) {
      throw ParameterError("load_csv_dataset: " + path + " line " +
                           std::to_string(line_no) +
                           ": need at least one feature and a label");
    }
    if (!dataset.features.empty() &&
        row.size() != dataset.features[0].size() + 1) {
      throw DimensionError("load_csv_dataset: " + path + " line " +
                           std::to_string(line_no) + ": expected " +
                           std::to_string(dataset.features[0].size() + 1) +
                           " columns, found " + std::to_string(row.size()));
    }
    dataset.labels.push_back(row.back());
    row.pop_back();
    dataset.features.push_back(std::move(row));
  }
  if (dataset.n() == 0) {
    throw ParameterError("load_csv_dataset: '" + path +
                         "' contains no data rows");
  }
  return dataset;
}

// Writes a dataset as CSV with a header row (f0,...,f{d-1},label). Doubles
// are rendered with enough digits for a lossless round-trip.
inline void save_csv_dataset(const std::string& path, const Dataset& dataset) {
  if (dataset.n() == 0) {
    throw ParameterError("save_csv_dataset: dataset is empty");
  }
  std::ofstream file(path);
  if (!file) {
    throw ParameterError("save_csv_dataset: cannot open '" + path +
                         "' for writing");
  }
  for (std::size_t j = 0; j < dataset.dim(); ++j) {
    file << 'f' << j << ',';
  }
  file << "label\n";
  char buffer[64];
  const auto render = [&buffer](double value) {
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
  };
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    if (dataset.features[i].size() != dataset.dim()) {
      throw DimensionError("save_csv_dataset: ragged feature rows");
    }
    for (const double value : dataset.features[i]) {
      file << render(value) << ',';
    }
    file << render(dataset.labels[i]) << '\n';
  }
  if (!file.good()) {
    throw ParameterError("save_csv_dataset: write to '" + path + "' failed");
  }
}

// Generates a two-class dataset of n points in d dimensions: class c's
// points are N(mu_c, I) with the class means separated by `separation` in
// Euclidean distance. Labels are 0/1 and alternate with the point index, so
// every contiguous slice is (near-)balanced and a deterministic split needs
// no shuffling.
inline Dataset make_blobs(std::size_t n, std::size_t d, double separation,
                          std::uint64_t seed) {
  if (n == 0 || d == 0) {
    throw ParameterError("make_blobs: n and d must be positive");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw ParameterError("make_blobs: separation must be finite and >= 0");
  }
  const double offset = separation / (2.0 * std::sqrt(static_cast<double>(d)));
  Rng rng(seed);
  Dataset dataset;
  dataset.features.reserve(n);
  dataset.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = static_cast<double>(i % 2);
    const double center = label == 1.0 ? offset : -offset;
    std::vector<double> row(d);
    for (double& value : row) value = center + rng.gaussian();
    dataset.features.push_back(std::move(row));
    dataset.labels.push_back(label);
  }
  return dataset;
}

// Splits off the trailing fraction of points as a test set. The generator's
// alternating labels keep both slices balanced.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset,
                                                    double test_fraction) {
  if (!(test_fraction >= 0.0) || !(test_fraction < 1.0)) {
    throw ParameterError("train_test_split: fraction must lie in [0, 1)");
  }
  const std::size_t n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(dataset.n()) * test_fraction));
  const std::size_t n_train = dataset.n() - n_test;
  if (n_train == 0) {
    throw ParameterError("train_test_split: training slice is empty");
  }
  Dataset train;
  Dataset test;
  train.features.assign(dataset.features.begin(),
                        dataset.features.begin() + n_train);
  train.labels.assign(dataset.labels.begin(),
                      dataset.labels.begin() + n_train);
  test.features.assign(dataset.features.begin() + n_train,
                       dataset.features.end());
  test.labels.assign(dataset.labels.begin() + n_train, dataset.labels.end());
  return {std::move(train), std::move(test)};
}

}  // namespace ipa
