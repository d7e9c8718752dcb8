#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedboost/core.hpp"

namespace fedboost {

struct LabeledDataset {
  DatasetShard shard;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;  // index = class id
};

/// Header row, numeric feature columns, label in the last column. Labels get
/// dense ids in lexicographic order unless `labels` fixes the vocabulary.
/// Throws EmptyFile, RaggedRow(line), NonNumericFeature(line, column), BadValue
/// (label outside the fixed vocabulary), IoError.
LabeledDataset ingest_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& labels = {});
LabeledDataset parse_csv(std::string_view text, const std::vector<std::string>& labels = {});

/// Random partition into n parts whose sizes differ by at most one (larger
/// parts first). Rows keep their original relative order inside a part, so
/// n = 1 returns the input unchanged. Throws TooManyParts.
std::vector<DatasetShard> split_iid(const DatasetShard& data, std::uint32_t n, std::uint64_t seed);

struct TrainTest {
  DatasetShard train;
  DatasetShard test;
};
/// Holds out round(test_fraction * N) random rows; order preserved on both sides.
TrainTest train_test_split(const DatasetShard& data, double test_fraction, std::uint64_t seed);

}  // namespace fedboost
