#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/error.hpp"
#include "fedboost/wide.hpp"

namespace fedboost {

using Bytes = std::vector<std::uint8_t>;

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

// Little-endian append-only writer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes buffer) : buf_(std::move(buffer)) {}

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f128(WideReal v) { raw(&v, sizeof v); }

  /// u8-length-prefixed UTF-8.
  void str8(std::string_view s);
  /// u64-length-prefixed blob.
  void blob(std::span<const std::uint8_t> b);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  std::size_t size() const { return buf_.size(); }
  const Bytes& view() const { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  Bytes buf_;
};

// Bounds-checked little-endian reader. Running past the end throws an Error
// carrying `underflow_code`.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data,
                      ErrorCode underflow_code = ErrorCode::kMalformedPayload)
      : data_(data), code_(underflow_code) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  double f64() { return get<double>(); }
  WideReal f128() { return get<WideReal>(); }

  std::string str8();
  Bytes blob();
  std::span<const std::uint8_t> take(std::size_t n);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  /// Throws unless every byte was consumed.
  void expect_done(std::string_view what) const;

 private:
  template <typename T>
  T get() {
    auto s = take(sizeof(T));
    T v;
    std::memcpy(&v, s.data(), sizeof(T));
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

}  // namespace fedboost
