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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "svkit/binary_io.hpp"
#include "svkit/embedding.hpp"
#include "svkit/error.hpp"

namespace svkit {

enum class EmbeddingFormat { kBinary, kText };

inline EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "binary" || name == "bin") return EmbeddingFormat::kBinary;
  if (name == "text" || name == "txt") return EmbeddingFormat::kText;
  throw Error(Errc::kInvalidArgument, "unknown embedding format '" + std::string(name) + "'");
}

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

// Binary layout (little-endian):
//   "SVEB" | u32 version | u32 dim | u64 count
//   count x { u16 id_len | id bytes | dim x f32 }
// Values are narrowed to float on write.

inline void write_embeddings_binary(std::ostream& out, const EmbeddingSet& set) {
  binio::put_magic(out, "SVEB");
  binio::put_le<std::uint32_t>(out, kEmbeddingFileVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  binio::put_le<std::uint64_t>(out, set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    binio::put_string16(out, set.id(i));
    for (double v : set.row(i)) binio::put_f32(out, v);
  }
}

inline EmbeddingSet read_embeddings_binary(std::istream& in) {
  binio::expect_magic(in, "SVEB");
  const auto version = binio::get_le<std::uint32_t>(in, "version");
  require(version == kEmbeddingFileVersion, Errc::kBadMagic, "unsupported SVEB version " + std::to_string(version));
  const auto dim = binio::get_le<std::uint32_t>(in, "dim");
  const auto count = binio::get_le<std::uint64_t>(in, "count");
  EmbeddingSet set(dim);
  std::vector<double> vec(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    std::string id = binio::get_string16(in);
    for (auto& v : vec) v = binio::get_f32(in, "vector");
    set.add(std::move(id), vec);
  }
  return set;
}

inline void write_embeddings_text(std::ostream& out, const EmbeddingSet& set) {
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.id(i);
    for (double v : set.row(i)) {
      std::snprintf(buf, sizeof(buf), " %.9g", v);
      out << buf;
    }
    out << '\n';
  }
}

/// Text rows are `id v1 ... vd`. The dimension is taken from the first row;
/// an empty text file cannot carry one, so `dim_hint` is used instead.
inline EmbeddingSet read_embeddings_text(std::istream& in, std::size_t dim_hint = 1) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    std::vector<double> vec;
    std::string token;
    while (ss >> token) {
      try {
        vec.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw Error(Errc::kInvalidArgument, "bad value '" + token + "' for '" + id + "'");
      }
    }
    if (!rows.empty()) {
      require(vec.size() == rows.front().second.size(), Errc::kDimMismatch,
              "row '" + id + "' has " + std::to_string(vec.size()) + " values");
    }
    rows.emplace_back(std::move(id), std::move(vec));
  }
  EmbeddingSet set(rows.empty() ? dim_hint : rows.front().second.size());
  set.reserve(rows.size());
  for (auto& [id, vec] : rows) set.add(std::move(id), vec);
  return set;
}

inline void write_embeddings(const EmbeddingSet& set, const std::string& path,
                             EmbeddingFormat format = EmbeddingFormat::kBinary) {
  std::ofstream out(path, format == EmbeddingFormat::kBinary ? std::ios::binary : std::ios::out);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  if (format == EmbeddingFormat::kBinary) {
    write_embeddings_binary(out, set);
  } else {
    write_embeddings_text(out, set);
  }
  require(out.good(), Errc::kIo, "write failed for " + path);
}

inline EmbeddingSet read_embeddings(const std::string& path, EmbeddingFormat format = EmbeddingFormat::kBinary) {
  std::ifstream in(path, format == EmbeddingFormat::kBinary ? std::ios::binary : std::ios::in);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return format == EmbeddingFormat::kBinary ? read_embeddings_binary(in) : read_embeddings_text(in);
}

}  // namespace svkit
