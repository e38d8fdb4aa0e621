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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "svkit/error.hpp"

namespace svkit {

/// VAD frame rate: 10 ms shift.
inline constexpr double kFramesPerSecond = 100.0;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

struct UttMeta {
  std::uint64_t speech_frames = 0;
  double duration_s = 0.0;
  std::optional<std::string> speaker;
};

/// Ordered set of fixed-dimension utterance embeddings plus optional
/// per-utterance metadata. Vectors are stored row-major in one buffer.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {
    require(dim >= 1, Errc::kDimMismatch, "embedding dimension must be >= 1");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  void reserve(std::size_t n) {
    ids_.reserve(n);
    data_.reserve(n * dim_);
  }

  void add(std::string id, std::span<const double> vec) {
    require(!id.empty(), Errc::kInvalidArgument, "empty utterance id");
    require(vec.size() == dim_, Errc::kDimMismatch,
            "vector for '" + id + "' has dim " + std::to_string(vec.size()) + ", expected " +
                std::to_string(dim_));
    for (double v : vec) require(std::isfinite(v), Errc::kInvalidArgument, "non-finite value in '" + id + "'");
    auto [it, inserted] = index_.emplace(id, ids_.size());
    require(inserted, Errc::kDuplicateId, id);
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), vec.begin(), vec.end());
  }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> mutable_row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    require(it != index_.end(), Errc::kUnknownId, id);
    return it->second;
  }

  std::span<const double> at(const std::string& id) const { return row(index_of(id)); }

  void set_meta(const std::string& id, UttMeta meta) {
    require(index_.count(id) != 0, Errc::kUnknownId, "metadata for unknown id '" + id + "'");
    meta_[id] = std::move(meta);
  }
  const UttMeta* meta(const std::string& id) const {
    auto it = meta_.find(id);
    return it == meta_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, UttMeta>& all_meta() const { return meta_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, UttMeta> meta_;
};

inline void normalize_in_place(std::span<double> v, const std::string& id) {
  const double n = norm(v);
  require(n > 0.0, Errc::kZeroVector, id);
  for (double& x : v) x /= n;
}

inline EmbeddingSet length_normalize(const EmbeddingSet& set) {
  EmbeddingSet out = set;
  for (std::size_t i = 0; i < out.size(); ++i) normalize_in_place(out.mutable_row(i), out.id(i));
  return out;
}

// Metadata CSV: utt_id,speech_frames,duration_s[,speaker] with a header row.

inline std::map<std::string, UttMeta> read_meta_csv(std::istream& in) {
  std::map<std::string, UttMeta> out;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::kTruncatedFile, "metadata file has no header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    require(fields.size() == 3 || fields.size() == 4, Errc::kInvalidArgument,
            "metadata line " + std::to_string(lineno) + ": expected 3 or 4 fields");
    UttMeta m;
    try {
      m.speech_frames = std::stoull(fields[1]);
      m.duration_s = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw Error(Errc::kInvalidArgument, "metadata line " + std::to_string(lineno) + ": bad number");
    }
    require(m.duration_s >= 0.0, Errc::kInvalidArgument, "negative duration for '" + fields[0] + "'");
    if (fields.size() == 4 && !fields[3].empty()) m.speaker = fields[3];
    require(out.emplace(fields[0], std::move(m)).second, Errc::kDuplicateId, fields[0]);
  }
  return out;
}

inline void write_meta_csv(std::ostream& out, const EmbeddingSet& set) {
  out << "utt_id,speech_frames,duration_s,speaker\n";
  char buf[64];
  for (const auto& id : set.ids()) {
    const UttMeta* m = set.meta(id);
    if (m == nullptr) continue;
    std::snprintf(buf, sizeof(buf), "%.17g", m->duration_s);
    out << id << ',' << m->speech_frames << ',' << buf << ',' << m->speaker.value_or("") << '\n';
  }
}

inline void attach_meta(EmbeddingSet& set, const std::map<std::string, UttMeta>& meta) {
  for (const auto& [id, m] : meta) {
    if (set.find(id)) set.set_meta(id, m);
  }
}

inline void load_meta_file(EmbeddingSet& set, const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  attach_meta(set, read_meta_csv(in));
}

}  // namespace svkit
