#include "fedboost/orchestrator/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace fedboost {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

LabeledDataset parse_csv(std::string_view text, const std::vector<std::string>& labels) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (1-based line number, text)
  std::size_t pos = 0, number = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++number;
    if (!trim(line).empty()) lines.emplace_back(number, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (lines.size() < 2) throw Error(ErrorCode::kEmptyFile, "CSV has no data rows");

  LabeledDataset out;
  auto header = split_fields(lines.front().second);
  if (header.size() < 2) {
    throw Error(ErrorCode::kRaggedRow, "header needs at least one feature and the label",
                {.row = lines.front().first});
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) out.feature_names.emplace_back(header[j]);

  std::vector<double> values;
  values.reserve((lines.size() - 1) * d);
  std::vector<std::string> raw_labels;
  raw_labels.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line_no, line] = lines[i];
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kRaggedRow,
                  fmt::format("line {} has {} fields, header has {}", line_no, fields.size(),
                              header.size()),
                  {.row = line_no});
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto f = fields[j];
      double v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw Error(ErrorCode::kNonNumericFeature,
                    fmt::format("line {} column {}: '{}' is not a number", line_no, j + 1, f),
                    {.row = line_no, .col = j + 1});
      }
      values.push_back(v);
    }
    raw_labels.emplace_back(fields.back());
  }

  std::map<std::string, ClassId> ids;
  if (labels.empty()) {
    for (const auto& l : raw_labels) ids.emplace(l, 0);
    ClassId next = 0;
    for (auto& [name, id] : ids) {
      id = next++;
      out.label_names.push_back(name);
    }
  } else {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (!ids.emplace(labels[c], static_cast<ClassId>(c)).second) {
        throw Error(ErrorCode::kBadValue, fmt::format("label '{}' listed twice", labels[c]));
      }
    }
    out.label_names = labels;
  }

  const std::size_t n = raw_labels.size();
  out.shard.features = FeatureMatrix(n, d, std::move(values));
  out.shard.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = ids.find(raw_labels[i]);
    if (it == ids.end()) {
      throw Error(ErrorCode::kBadValue,
                  fmt::format("line {}: label '{}' is not in the plan's label list",
                              lines[i + 1].first, raw_labels[i]),
                  {.row = lines[i + 1].first});
    }
    out.shard.labels[i] = it->second;
  }
  out.shard.num_classes = static_cast<std::uint32_t>(out.label_names.size());
  validate_shard(out.shard);
  return out;
}

LabeledDataset ingest_csv(const std::filesystem::path& path, const std::vector<std::string>& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), labels);
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

std::vector<DatasetShard> split_iid(const DatasetShard& data, std::uint32_t n, std::uint64_t seed) {
  if (n == 0 || n > data.size()) {
    throw Error(ErrorCode::kTooManyParts,
                fmt::format("cannot split {} samples into {} parts", data.size(), n));
  }
  const auto perm = shuffled_indices(data.size(), seed);
  const std::size_t base = data.size() / n, extra = data.size() % n;
  std::vector<DatasetShard> parts;
  std::size_t at = 0;
  for (std::uint32_t p = 0; p < n; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    std::vector<std::size_t> rows(perm.begin() + static_cast<std::ptrdiff_t>(at),
                                  perm.begin() + static_cast<std::ptrdiff_t>(at + size));
    std::sort(rows.begin(), rows.end());
    parts.push_back(data.select(rows));
    at += size;
  }
  return parts;
}

TrainTest train_test_split(const DatasetShard& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0 && test_fraction < 1)) {
    throw Error(ErrorCode::kBadValue, "test fraction must be in [0, 1)");
  }
  const auto test_size = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
  if (test_size >= data.size()) throw Error(ErrorCode::kBadValue, "test split leaves no training data");
  // A distinct stream from split_iid's so the two draws are independent.
  auto perm = shuffled_indices(data.size(), seed ^ 0x7E57'5EED'0000'0001ull);
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_size));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(test_size), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.select(train), data.select(test)};
}

}  // namespace fedboost
