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

#include "ipa/data.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "ipa/error.hpp"

namespace ipa {
namespace {

class TempCsv {
 public:
  explicit TempCsv(const std::string& contents) {
    path_ = std::string(::testing::TempDir()) + "ipa_data_test_" +
            std::to_string(counter_++) + ".csv";
    std::ofstream file(path_);
    file << contents;
  }
  ~TempCsv() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  static int counter_;
  std::string path_;
};

int TempCsv::counter_ = 0;

TEST(CsvTest, LoadsHeaderCommentsAndBlankLines) {
  TempCsv file(
      "f0,f1,label\n"
      "# synthetic fixture\n"
      "\n"
      "0.5, 1.25, 1\n"
      "-2.0,0.0,0\n");
  const Dataset dataset = load_csv_dataset(file.path());
  ASSERT_EQ(dataset.n(), 2u);
  ASSERT_EQ(dataset.dim(), 2u);
  EXPECT_EQ(dataset.features[0][0], 0.5);
  EXPECT_EQ(dataset.features[0][1], 1.25);
  EXPECT_EQ(dataset.labels[0], 1.0);
  EXPECT_EQ(dataset.features[1][0], -2.0);
  EXPECT_EQ(dataset.labels[1], 0.0);
}

TEST(CsvTest, HeaderlessFilesLoadEveryRow) {
  TempCsv file("1.0,2.0,1\n3.0,4.0,0\n");
  const Dataset dataset = load_csv_dataset(file.path());
  EXPECT_EQ(dataset.n(), 2u);
  EXPECT_EQ(dataset.features[0][0], 1.0);
}

TEST(CsvTest, RejectsMalformedInput) {
  TempCsv bad_cell("1.0,abc,1\n");
  EXPECT_THROW(load_csv_dataset(bad_cell.path()), ParameterError);

  TempCsv ragged("1.0,2.0,1\n1.0,1\n");
  EXPECT_THROW(load_csv_dataset(ragged.path()), DimensionError);

  TempCsv single_column("1.0\n");
  EXPECT_THROW(load_csv_dataset(single_column.path()), ParameterError);

  TempCsv empty("# nothing here\n");
  EXPECT_THROW(load_csv_dataset(empty.path()), ParameterError);

  EXPECT_THROW(load_csv_dataset("/nonexistent/path.csv"), ParameterError);
}

TEST(CsvTest, SaveThenLoadRoundTripsBitwise) {
  Dataset dataset = make_blobs(25, 3, 2.5, 99u);
  TempCsv placeholder("");  // reserve a unique temp path
  save_csv_dataset(placeholder.path(), dataset);
  const Dataset loaded = load_csv_dataset(placeholder.path());
  ASSERT_EQ(loaded.n(), dataset.n());
  ASSERT_EQ(loaded.dim(), dataset.dim());
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    EXPECT_EQ(loaded.labels[i], dataset.labels[i]);
    for (std::size_t j = 0; j < dataset.dim(); ++j) {
      EXPECT_EQ(loaded.features[i][j], dataset.features[i][j])
          << "row " << i << " col " << j;
    }
  }
}

TEST(BlobTest, GeneratorIsDeterministicPerSeed) {
  const Dataset a = make_blobs(40, 4, 3.0, 7u);
  const Dataset b = make_blobs(40, 4, 3.0, 7u);
  const Dataset c = make_blobs(40, 4, 3.0, 8u);
  ASSERT_EQ(a.n(), 40u);
  ASSERT_EQ(a.dim(), 4u);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.n(); ++i) {
    EXPECT_EQ(a.labels[i], static_cast<double>(i % 2));
    for (std::size_t j = 0; j < a.dim(); ++j) {
      EXPECT_EQ(a.features[i][j], b.features[i][j]);
      any_difference = any_difference || a.features[i][j] != c.features[i][j];
    }
  }
  EXPECT_TRUE(any_difference);
}

TEST(BlobTest, ClassMeansAreSeparated) {
  const Dataset data = make_blobs(4000, 6, 5.0, 123u);
  std::vector<double> mean0(6, 0.0);
  std::vector<double> mean1(6, 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<double>& mean = data.labels[i] == 1.0 ? mean1 : mean0;
    for (std::size_t j = 0; j < 6; ++j) mean[j] += data.features[i][j] / 2000.0;
  }
  double gap_sq = 0.0;
  for (std::size_t j = 0; j < 6; ++j) {
    gap_sq += (mean1[j] - mean0[j]) * (mean1[j] - mean0[j]);
  }
  // Empirical class-mean distance concentrates around the requested 5.0.
  EXPECT_NEAR(std::sqrt(gap_sq), 5.0, 0.2);
}

TEST(SplitTest, TrailingFractionBecomesTest) {
  const Dataset data = make_blobs(100, 2, 2.0, 1u);
  const auto [train, test] = train_test_split(data, 0.2);
  ASSERT_EQ(train.n(), 80u);
  ASSERT_EQ(test.n(), 20u);
  EXPECT_EQ(test.features[0][0], data.features[80][0]);
  // Alternating labels keep both slices balanced.
  double train_mean = 0.0;
  for (const double y : train.labels) train_mean += y / 80.0;
  EXPECT_DOUBLE_EQ(train_mean, 0.5);

  EXPECT_THROW(train_test_split(data, 1.0), ParameterError);
  EXPECT_THROW(train_test_split(data, -0.1), ParameterError);
}

TEST(BlobTest, RejectsBadArguments) {
  EXPECT_THROW(make_blobs(0, 3, 1.0, 1u), ParameterError);
  EXPECT_THROW(make_blobs(10, 0, 1.0, 1u), ParameterError);
  EXPECT_THROW(make_blobs(10, 3, -1.0, 1u), ParameterError);
}

}  // namespace
}  // namespace ipa
