#include "fedboost/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace fedboost {

namespace {
constexpr std::uint8_t kMagic[4] = {'M', 'A', 'F', 'L'};

ClassId argmax_votes(std::span<const double> votes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<ClassId>(best);
}
}  // namespace

void StrongHypothesis::append(WeakModelEnvelope envelope, double alpha) {
  auto model = decode_model(envelope);
  append(std::move(envelope), std::move(model), alpha);
}

void StrongHypothesis::append(WeakModelEnvelope envelope, WeakModelPtr model, double alpha) {
  if (!std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("non-finite alpha {}", alpha));
  }
  if (!model) throw Error(ErrorCode::kInvalidArgument, "null weak model");
  terms_.push_back(Term{std::move(envelope), std::move(model), alpha});
}

ClassId predict_strong(const StrongHypothesis& h, std::span<const double> x) {
  if (h.empty()) throw Error(ErrorCode::kEmptyEnsemble, "strong hypothesis has no terms");
  std::vector<double> votes(std::max<std::uint32_t>(h.num_classes(), 1), 0.0);
  for (const auto& t : h.terms()) {
    const ClassId y = t.model->predict(x);
    if (y >= votes.size()) votes.resize(y + 1, 0.0);
    votes[y] += t.alpha;
  }
  return argmax_votes(votes);
}

std::vector<ClassId> predict_strong(const StrongHypothesis& h, const FeatureMatrix& x) {
  std::vector<ClassId> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_strong(h, x.row(i));
  return out;
}

VoteTally::VoteTally(const FeatureMatrix& samples, std::uint32_t num_classes)
    : samples_(&samples), num_classes_(num_classes),
      votes_(samples.rows() * num_classes, 0.0) {
  if (num_classes == 0) throw Error(ErrorCode::kInvalidArgument, "VoteTally needs num_classes");
}

void VoteTally::add(const WeakModel& model, double alpha) {
  for (std::size_t i = 0; i < samples_->rows(); ++i) {
    const ClassId y = model.predict(samples_->row(i));
    if (y >= num_classes_) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  fmt::format("weak model predicted class {} of {}", y, num_classes_), {.row = i});
    }
    votes_[i * num_classes_ + y] += alpha;
  }
  ++terms_;
}

std::vector<ClassId> VoteTally::predictions() const {
  if (terms_ == 0) throw Error(ErrorCode::kEmptyEnsemble, "no terms tallied");
  std::vector<ClassId> out(samples_->rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = argmax_votes(std::span<const double>(votes_).subspan(i * num_classes_, num_classes_));
  }
  return out;
}

Bytes encode_ensemble(const StrongHypothesis& h) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kEnsembleFormatVersion);
  w.u64(h.size());
  for (const auto& t : h.terms()) {
    w.f64(t.alpha);
    write_envelope(w, t.envelope);
  }
  return std::move(w).take();
}

StrongHypothesis decode_ensemble(std::span<const std::uint8_t> bytes, std::uint32_t num_classes) {
  ByteReader r(bytes);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw Error(ErrorCode::kMalformedPayload, "ensemble file: bad magic");
  }
  auto version = r.u32();
  if (version != kEnsembleFormatVersion) {
    throw Error(ErrorCode::kVersionUnsupported, fmt::format("ensemble format version {}", version));
  }
  auto count = r.u64();
  StrongHypothesis h(num_classes);
  for (std::uint64_t i = 0; i < count; ++i) {
    double alpha = r.f64();
    h.append(read_envelope(r), alpha);
  }
  r.expect_done("ensemble");
  return h;
}

void save_ensemble(const StrongHypothesis& h, const std::filesystem::path& path) {
  auto bytes = encode_ensemble(h);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("short write to {}", path.string()));
}

StrongHypothesis load_ensemble(const std::filesystem::path& path, std::uint32_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read {}", path.string()));
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ensemble(bytes, num_classes);
}

}  // namespace fedboost
