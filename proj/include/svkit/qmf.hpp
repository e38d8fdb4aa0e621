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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/parallel.hpp"
#include "svkit/scoring.hpp"
#include "svkit/trials.hpp"

namespace svkit {

// Quality measure functions: per-utterance scalars fed to the calibration
// back-end alongside the score.

enum class DurationQmfMode { kLog, kRaw };
enum class ImposterMetric { kInnerProduct, kCosine };

inline DurationQmfMode parse_duration_mode(std::string_view name) {
  if (name == "log") return DurationQmfMode::kLog;
  if (name == "raw") return DurationQmfMode::kRaw;
  throw Error(Errc::kInvalidArgument, "unknown duration QMF mode '" + std::string(name) + "'");
}

inline ImposterMetric parse_imposter_metric(std::string_view name) {
  if (name == "inner" || name == "inner_product" || name == "dot") return ImposterMetric::kInnerProduct;
  if (name == "cosine" || name == "cos") return ImposterMetric::kCosine;
  throw Error(Errc::kInvalidArgument, "unknown imposter metric '" + std::string(name) + "'");
}

struct QmfConfig {
  DurationQmfMode duration_mode = DurationQmfMode::kLog;
  ImposterMetric metric = ImposterMetric::kInnerProduct;
  TopN top_n = TopN::of(100);
};

inline double duration_qmf(const UttMeta& meta, DurationQmfMode mode = DurationQmfMode::kLog) {
  const auto frames = static_cast<double>(meta.speech_frames);
  return mode == DurationQmfMode::kLog ? std::log1p(frames) : frames;
}

inline double duration_qmf(const EmbeddingSet& set, const std::string& id,
                           DurationQmfMode mode = DurationQmfMode::kLog) {
  const UttMeta* meta = set.meta(id);
  require(meta != nullptr, Errc::kMissingMeta, id);
  return duration_qmf(*meta, mode);
}

/// Mean of the top-n (or all) imposter scores of `emb` against the cohort.
inline double imposter_mean_qmf(std::span<const double> emb, const Cohort& cohort, ImposterMetric metric,
                                TopN top_n) {
  require(cohort.size() >= 1, Errc::kEmptyInput, "empty cohort");
  require(emb.size() == cohort.dim, Errc::kDimMismatch, "embedding and cohort dimensions differ");
  const std::size_t keep = top_n.resolve(cohort.size());
  require(keep <= cohort.size(), Errc::kTopNTooLarge,
          "top-n " + std::to_string(keep) + " exceeds cohort size " + std::to_string(cohort.size()));
  const auto scores = metric == ImposterMetric::kInnerProduct ? cohort_scores(emb, cohort, CohortInnerProduct{})
                                                              : cohort_scores(emb, cohort, CohortCosine{});
  return top_stats(scores, keep).mean;
}

struct UttQuality {
  double dur_q = 0.0;
  double imp_q = 0.0;
};

using QmfCache = std::map<std::string, UttQuality>;

inline UttQuality utterance_quality(const EmbeddingSet& set, const std::string& id, const Cohort& cohort,
                                    const QmfConfig& config) {
  return {duration_qmf(set, id, config.duration_mode),
          imposter_mean_qmf(set.at(id), cohort, config.metric, config.top_n)};
}

inline QmfCache compute_qmf_cache(const EmbeddingSet& set, const Cohort& cohort, const QmfConfig& config) {
  std::vector<UttQuality> values(set.size());
  parallel_for(set.size(), [&](std::size_t i) { values[i] = utterance_quality(set, set.id(i), cohort, config); }, 16);
  QmfCache cache;
  for (std::size_t i = 0; i < set.size(); ++i) cache.emplace(set.id(i), values[i]);
  return cache;
}

/// Symmetric per-trial quality features: min and max over the two sides.
struct QmfVector {
  double min_dur_q = 0.0;
  double max_dur_q = 0.0;
  double min_imp_q = 0.0;
  double max_imp_q = 0.0;

  bool operator==(const QmfVector&) const = default;
};

inline QmfVector combine_sides(const UttQuality& a, const UttQuality& b) {
  return {std::min(a.dur_q, b.dur_q), std::max(a.dur_q, b.dur_q), std::min(a.imp_q, b.imp_q),
          std::max(a.imp_q, b.imp_q)};
}

inline std::vector<QmfVector> trial_qmfs(const TrialList& trials, const QmfCache& cache) {
  std::vector<QmfVector> out;
  out.reserve(trials.size());
  auto lookup = [&](const std::string& id) -> const UttQuality& {
    auto it = cache.find(id);
    require(it != cache.end(), Errc::kMissingMeta, "no quality values for '" + id + "'");
    return it->second;
  };
  for (const auto& t : trials) out.push_back(combine_sides(lookup(t.enroll), lookup(t.test)));
  return out;
}

inline std::vector<QmfVector> trial_qmfs(const TrialList& trials, const EmbeddingSet& enroll_set,
                                         const EmbeddingSet& test_set, const Cohort& cohort,
                                         const QmfConfig& config) {
  QmfCache enroll_q;
  QmfCache test_q;
  for (const auto& t : trials) {
    if (!enroll_q.count(t.enroll)) enroll_q.emplace(t.enroll, utterance_quality(enroll_set, t.enroll, cohort, config));
    if (!test_q.count(t.test)) test_q.emplace(t.test, utterance_quality(test_set, t.test, cohort, config));
  }
  std::vector<QmfVector> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(combine_sides(enroll_q.at(t.enroll), test_q.at(t.test)));
  return out;
}

// QMF cache file: CSV `utt_id,dur_q,imp_q` with a header row.

inline void write_qmf_cache(std::ostream& out, const QmfCache& cache) {
  out << "utt_id,dur_q,imp_q\n";
  char buf[64];
  for (const auto& [id, q] : cache) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", q.dur_q, q.imp_q);
    out << id << ',' << buf << '\n';
  }
}

inline QmfCache read_qmf_cache(std::istream& in) {
  QmfCache cache;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::kTruncatedFile, "QMF cache has no header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id;
    std::string dur;
    std::string imp;
    require(std::getline(ss, id, ',') && std::getline(ss, dur, ',') && std::getline(ss, imp, ','),
            Errc::kInvalidArgument, "QMF cache line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      require(cache.emplace(id, UttQuality{std::stod(dur), std::stod(imp)}).second, Errc::kDuplicateId, id);
    } catch (const std::invalid_argument&) {
      throw Error(Errc::kInvalidArgument, "QMF cache line " + std::to_string(lineno) + ": bad number");
    }
  }
  return cache;
}

inline void write_qmf_cache_file(const std::string& path, const QmfCache& cache) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  write_qmf_cache(out, cache);
}

inline QmfCache read_qmf_cache_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return read_qmf_cache(in);
}

}  // namespace svkit
