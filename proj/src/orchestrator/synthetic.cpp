#include "fedboost/orchestrator/synthetic.hpp"

#include <random>

namespace fedboost {

DatasetShard make_blobs(std::size_t samples, std::size_t features, std::uint32_t classes,
                        double spread, std::uint64_t seed, double center_box) {
  if (classes < 2 || samples < classes || features == 0) {
    throw Error(ErrorCode::kInvalidArgument, "make_blobs needs >= 2 classes, one sample each");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-center_box, center_box);
  std::normal_distribution<double> noise(0.0, spread);
  FeatureMatrix centers(classes, features);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < features; ++j) centers(c, j) = box(rng);
  }
  DatasetShard out;
  out.num_classes = classes;
  out.features = FeatureMatrix(samples, features);
  out.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto c = static_cast<ClassId>(i % classes);
    out.labels[i] = c;
    for (std::size_t j = 0; j < features; ++j) out.features(i, j) = centers(c, j) + noise(rng);
  }
  return out;
}

DatasetShard make_vowel_like(std::uint64_t seed, std::size_t samples) {
  return make_blobs(samples, 10, 10, 2.0, seed, 3.0);
}

DatasetShard make_separable_1d(std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  DatasetShard out;
  out.num_classes = 2;
  out.features = FeatureMatrix(samples, 1);
  out.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const bool positive = i % 2 == 1;
    out.features(i, 0) = positive ? mag(rng) : -mag(rng);
    out.labels[i] = positive ? 1 : 0;
  }
  return out;
}

}  // namespace fedboost
