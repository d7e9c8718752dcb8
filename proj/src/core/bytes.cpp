#include "fedboost/bytes.hpp"

#include <fmt/format.h>

namespace fedboost {

void ByteWriter::str8(std::string_view s) {
  if (s.size() > 0xFF) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("string of {} bytes exceeds u8 length prefix", s.size()));
  }
  u8(static_cast<std::uint8_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::blob(std::span<const std::uint8_t> b) {
  u64(b.size());
  bytes(b);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (n > remaining()) {
    throw Error(code_, fmt::format("truncated input: need {} bytes at offset {}, have {}", n,
                                   pos_, remaining()));
  }
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::string ByteReader::str8() {
  auto n = u8();
  auto s = take(n);
  return std::string(s.begin(), s.end());
}

Bytes ByteReader::blob() {
  auto n = u64();
  if (n > remaining()) {
    throw Error(code_, fmt::format("blob length {} exceeds remaining {}", n, remaining()));
  }
  auto s = take(static_cast<std::size_t>(n));
  return Bytes(s.begin(), s.end());
}

void ByteReader::expect_done(std::string_view what) const {
  if (!done()) {
    throw Error(code_, fmt::format("{}: {} trailing bytes", what, remaining()));
  }
}

}  // namespace fedboost
