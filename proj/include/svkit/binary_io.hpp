// Copyright 2026  The svkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "svkit/error.hpp"

namespace svkit::binio {

// Explicit little-endian encoding, independent of host byte order.

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  require(in.gcount() == static_cast<std::streamsize>(bytes.size()), Errc::kTruncatedFile,
          std::string("while reading ") + what);
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline void put_f32(std::ostream& out, double value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

inline double get_f32(std::istream& in, const char* what) {
  return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in, what)));
}

inline void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4] = {0, 0, 0, 0};
  in.read(got, 4);
  require(in.gcount() == 4, Errc::kTruncatedFile, "file shorter than magic");
  for (int i = 0; i < 4; ++i) {
    require(got[i] == magic[i], Errc::kBadMagic, std::string("expected '") + magic + "'");
  }
}

inline void put_string16(std::ostream& out, const std::string& s) {
  require(s.size() <= 0xFFFF, Errc::kInvalidArgument, "id longer than 65535 bytes");
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string16(std::istream& in) {
  const auto len = get_le<std::uint16_t>(in, "id length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  require(in.gcount() == len, Errc::kTruncatedFile, "while reading id");
  return s;
}

}  // namespace svkit::binio
