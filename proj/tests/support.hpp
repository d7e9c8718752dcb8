#pragma once

#include <cmath>
#include <random>
#include <string>

#include "fedboost/orchestrator/dataset.hpp"
#include "fedboost/orchestrator/plan.hpp"
#include "fedboost/orchestrator/synthetic.hpp"

namespace fedboost::testing {

inline std::string data_path(const std::string& name) {
  return std::string(FEDBOOST_DATA_DIR) + "/" + name;
}

// AdaBoost plan with fast polling, suitable for in-process runs.
inline Plan make_plan(const std::string& family, std::uint32_t n, std::uint32_t rounds,
                      std::uint64_t seed, std::map<std::string, double> hyper = {}) {
  Plan p;
  p.federation.num_collaborators = n;
  p.federation.rounds = rounds;
  p.federation.seed = seed;
  p.federation.learner = {family, std::move(hyper)};
  p.tasks = adaboost_tasks();
  p.protocol.poll_interval = 0.001;
  p.protocol.wait_interval = 0.001;
  p.data.seed = seed;
  return p;
}

// Four Gaussian clusters on the corners of a square, labelled by XOR of the quadrant.
inline DatasetShard make_xor(std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  DatasetShard s;
  s.num_classes = 2;
  s.features = FeatureMatrix(samples, 2);
  s.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const int qx = static_cast<int>(i % 2);
    const int qy = static_cast<int>((i / 2) % 2);
    s.features(i, 0) = (qx ? 1.0 : -1.0) + noise(rng);
    s.features(i, 1) = (qy ? 1.0 : -1.0) + noise(rng);
    s.labels[i] = static_cast<ClassId>(qx ^ qy);
  }
  return s;
}

inline bool rel_close(double a, double b, double tol) {
  return a == b || std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace fedboost::testing
