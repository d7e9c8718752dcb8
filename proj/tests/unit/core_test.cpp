#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "fedboost/ensemble.hpp"
#include "fedboost/learners.hpp"
#include "support.hpp"

namespace fedboost {
namespace {

DatasetShard tiny_shard(std::vector<ClassId> labels, std::uint32_t k) {
  DatasetShard s;
  s.features = FeatureMatrix(labels.size(), 2);
  s.labels = std::move(labels);
  s.num_classes = k;
  return s;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Shard, MinimalShardIsValid) {
  EXPECT_NO_THROW(validate_shard(tiny_shard({0, 1, 0}, 2)));
}

TEST(Shard, LabelOutOfRangeReportsRow) {
  try {
    validate_shard(tiny_shard({0, 2, 0}, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLabelOutOfRange);
    EXPECT_EQ(e.where().row, 1u);
  }
}

TEST(Shard, NonFiniteFeatureReportsCell) {
  auto s = tiny_shard({0, 1, 0}, 2);
  s.features(1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_shard(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteFeature);
    EXPECT_EQ(e.where().row, 1u);
    EXPECT_EQ(e.where().col, 1u);
  }
}

TEST(Shard, ShapeAndClassCount) {
  auto s = tiny_shard({0, 1, 0}, 2);
  s.labels.pop_back();
  EXPECT_EQ(code_of([&] { validate_shard(s); }), ErrorCode::kShapeMismatch);
  EXPECT_ANY_THROW(validate_shard(tiny_shard({0, 0}, 1)));
}

TEST(Weights, NormIsExactSum) {
  WeightVector w({0.1, 0.2, 0.3});
  EXPECT_NEAR(w.norm(), 0.6, 0.6 * 1e-12);
  EXPECT_EQ(WeightVector::uniform(1000, 7.0).norm(), 7000.0);
  EXPECT_ANY_THROW(WeightVector({1.0, 0.0}));
  EXPECT_ANY_THROW(WeightVector({1.0, -1.0}));
  EXPECT_ANY_THROW(WeightVector({1.0, std::numeric_limits<double>::infinity()}));
}

TEST(Bitmap, PackedRoundTrip) {
  Bitmap b(13);
  b.set(0);
  b.set(12);
  EXPECT_EQ(b.count(), 2u);
  Bitmap c(13, b.packed());
  EXPECT_EQ(b, c);
  EXPECT_TRUE(c.test(12));
  EXPECT_FALSE(c.test(11));
}

TEST(Seeds, DerivedSeedsDifferAndRepeat) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0, 1), derive_seed(2, 0, 1));
}

TEST(Config, Validation) {
  FederationConfig c;
  c.learner = {"stump", {}};
  EXPECT_NO_THROW(validate_config(c));
  c.rounds = 0;
  EXPECT_ANY_THROW(validate_config(c));
  c.rounds = 1;
  c.num_collaborators = 0;
  EXPECT_ANY_THROW(validate_config(c));
  c.num_collaborators = 1;
  c.learner.family_id = "svm";
  EXPECT_EQ(code_of([&] { validate_config(c); }), ErrorCode::kUnknownFamily);
}

// Envelopes for every family survive the canonical encoding unchanged.
TEST(Envelope, RoundTripManyModels) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> families = {"stump", "tree", "gaussian_nb", "knn"};
  auto data = make_blobs(60, 3, 3, 1.0, 11);
  auto probe = make_blobs(50, 3, 3, 2.0, 12);
  for (int i = 0; i < 1000; ++i) {
    const auto& family = families[static_cast<std::size_t>(i) % families.size()];
    std::vector<double> w(data.size());
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (auto& x : w) x = u(rng);
    auto model = fit_model({family, {}}, data, WeightVector(w), rng());
    auto env = to_envelope(*model, static_cast<CollaboratorId>(i % 7), static_cast<std::uint32_t>(i));
    auto bytes = encode_envelope(env);
    auto back = decode_envelope(bytes);
    EXPECT_EQ(back.family_id, env.family_id);
    EXPECT_EQ(back.format_version, env.format_version);
    EXPECT_EQ(back.payload, env.payload);
    auto model2 = decode_model(back);
    for (std::size_t r = 0; r < probe.size(); ++r) {
      ASSERT_EQ(model->predict(probe.features.row(r)), model2->predict(probe.features.row(r)));
    }
  }
}

TEST(Envelope, TruncatedIsRejected) {
  auto model = std::make_shared<StumpModel>(2, 1, 0.5, 0, 1);
  auto bytes = encode_envelope(to_envelope(*model));
  bytes.pop_back();
  EXPECT_ANY_THROW(decode_envelope(bytes));
}

// Constant-prediction helper models.
WeakModelEnvelope constant(ClassId c, std::uint32_t arity = 2) {
  return to_envelope(StumpModel(arity, c));
}

TEST(Strong, SingleTerm) {
  StrongHypothesis h(2);
  h.append(constant(1), 0.7);
  const double x[] = {3.0, -4.0};
  EXPECT_EQ(predict_strong(h, x), 1u);
}

TEST(Strong, TieGoesToSmallestClass) {
  StrongHypothesis h(2);
  h.append(constant(1), 0.5);
  h.append(constant(0), 0.5);
  const double x[] = {0.0, 0.0};
  EXPECT_EQ(predict_strong(h, x), 0u);
}

TEST(Strong, EmptyAndArityErrors) {
  StrongHypothesis h(2);
  const double x[] = {0.0, 0.0};
  EXPECT_EQ(code_of([&] { predict_strong(h, x); }), ErrorCode::kEmptyEnsemble);
  h.append(constant(1, 3), 1.0);
  EXPECT_EQ(code_of([&] { predict_strong(h, x); }), ErrorCode::kArityMismatch);
  EXPECT_ANY_THROW(h.append(constant(1, 3), std::numeric_limits<double>::quiet_NaN()));
}

// Three stumps with different splits, checked against a vote table tallied by hand per sample.
TEST(Strong, ThreeTermVoteMatchesBruteForce) {
  auto data = make_blobs(20, 2, 3, 1.5, 3);
  StrongHypothesis h(3);
  const StumpModel a(2, 0, 0.0, 0, 1), b(2, 1, 0.5, 2, 1), c(2, 0, -1.0, 2, 0);
  const double alphas[] = {0.9, 0.6, 0.4};
  h.append(to_envelope(a), alphas[0]);
  h.append(to_envelope(b), alphas[1]);
  h.append(to_envelope(c), alphas[2]);
  VoteTally tally(data.features, 3);
  tally.add(a, alphas[0]);
  tally.add(b, alphas[1]);
  tally.add(c, alphas[2]);
  auto fast = tally.predictions();
  auto batch = predict_strong(h, data.features);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double votes[3] = {0, 0, 0};
    auto x = data.features.row(i);
    votes[x[0] <= 0.0 ? 0 : 1] += alphas[0];
    votes[x[1] <= 0.5 ? 2 : 1] += alphas[1];
    votes[x[0] <= -1.0 ? 2 : 0] += alphas[2];
    ClassId best = 0;
    for (ClassId k = 1; k < 3; ++k) {
      if (votes[k] > votes[best]) best = k;
    }
    EXPECT_EQ(batch[i], best) << "sample " << i;
    EXPECT_EQ(fast[i], best) << "sample " << i;
  }
}

TEST(Strong, FileRoundTrip) {
  auto data = make_blobs(40, 3, 2, 1.0, 8);
  StrongHypothesis h(2);
  for (int t = 0; t < 5; ++t) {
    auto m = fit_model({"tree", {{"max_leaves", 4}}}, data, WeightVector::uniform(40), t);
    h.append(to_envelope(*m, 0, t + 1), 0.3 * (t + 1));
  }
  auto path = std::filesystem::temp_directory_path() / "fedboost_core_test.ensemble";
  save_ensemble(h, path);
  auto back = load_ensemble(path, 2);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), h.size());
  for (std::size_t t = 0; t < h.size(); ++t) EXPECT_EQ(back.term(t).alpha, h.term(t).alpha);
  EXPECT_EQ(predict_strong(back, data.features), predict_strong(h, data.features));

  auto bytes = encode_ensemble(h);
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MAFL");
  bytes[0] = 'X';
  EXPECT_ANY_THROW(decode_ensemble(bytes));
}

}  // namespace
}  // namespace fedboost
