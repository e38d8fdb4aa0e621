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
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/parallel.hpp"
#include "svkit/trials.hpp"

namespace svkit {

/// Per-speaker means of length-normalized embeddings. The means are kept
/// unnormalized (norm <= 1) so that inner-product and cosine comparisons
/// against the cohort differ.
struct Cohort {
  std::size_t dim = 0;
  std::vector<std::string> speaker_ids;
  std::vector<double> means;

  std::size_t size() const { return speaker_ids.size(); }
  std::span<const double> row(std::size_t i) const { return {means.data() + i * dim, dim}; }
};

/// Either "all" entries or the n largest.
class TopN {
 public:
  static TopN all() { return TopN(0); }
  static TopN of(std::size_t n) {
    require(n >= 1, Errc::kInvalidArgument, "top-n must be >= 1");
    return TopN(n);
  }
  bool is_all() const { return n_ == 0; }
  std::size_t n() const { return n_; }
  std::size_t resolve(std::size_t available) const { return is_all() ? available : n_; }

 private:
  explicit TopN(std::size_t n) : n_(n) {}
  std::size_t n_;
};

inline Cohort build_cohort(const EmbeddingSet& set) {
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> acc;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const UttMeta* m = set.meta(set.id(i));
    require(m != nullptr && m->speaker.has_value(), Errc::kMissingLabel, set.id(i));
    auto& [sum, count] = acc[*m->speaker];
    if (sum.empty()) sum.assign(set.dim(), 0.0);
    const auto row = set.row(i);
    for (std::size_t j = 0; j < set.dim(); ++j) sum[j] += row[j];
    ++count;
  }
  Cohort cohort;
  cohort.dim = set.dim();
  cohort.speaker_ids.reserve(acc.size());
  cohort.means.reserve(acc.size() * set.dim());
  for (const auto& [speaker, entry] : acc) {
    cohort.speaker_ids.push_back(speaker);
    for (double v : entry.first) cohort.means.push_back(v / static_cast<double>(entry.second));
  }
  return cohort;
}

inline ScoreSet cosine_score(const TrialList& trials, const EmbeddingSet& enroll, const EmbeddingSet& test) {
  require(enroll.dim() == test.dim(), Errc::kDimMismatch, "enroll and test dimensions differ");
  ScoreSet out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out[i].enroll = trials[i].enroll;
    out[i].test = trials[i].test;
  }
  // Resolve ids up front so an UnknownId surfaces before any parallel work.
  std::vector<std::pair<std::size_t, std::size_t>> rows(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    rows[i] = {enroll.index_of(trials[i].enroll), test.index_of(trials[i].test)};
  }
  parallel_for(trials.size(), [&](std::size_t i) {
    out[i].value = dot(enroll.row(rows[i].first), test.row(rows[i].second));
  }, 1024);
  return out;
}

/// Cosine between an embedding and a (non-unit) cohort mean.
struct CohortCosine {
  double operator()(std::span<const double> emb, std::span<const double> cohort_vec) const {
    return dot(emb, cohort_vec) / (norm(emb) * norm(cohort_vec));
  }
};

struct CohortInnerProduct {
  double operator()(std::span<const double> emb, std::span<const double> cohort_vec) const {
    return dot(emb, cohort_vec);
  }
};

/// Indices of the `keep` largest scores, ordered by descending score with
/// ties going to the lower cohort index.
inline std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t keep) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  keep = std::min(keep, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), before);
  idx.resize(keep);
  return idx;
}

struct CohortStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and population standard deviation of the `keep` largest values.
inline CohortStats top_stats(std::span<const double> scores, std::size_t keep) {
  const auto idx = top_indices(scores, keep);
  require(!idx.empty(), Errc::kEmptyInput, "no cohort scores");
  double mean = 0.0;
  for (auto i : idx) mean += scores[i];
  mean /= static_cast<double>(idx.size());
  double var = 0.0;
  for (auto i : idx) var += (scores[i] - mean) * (scores[i] - mean);
  var /= static_cast<double>(idx.size());
  return {mean, std::sqrt(var)};
}

template <typename Similarity = CohortCosine>
std::vector<double> cohort_scores(std::span<const double> emb, const Cohort& cohort, Similarity sim = {}) {
  std::vector<double> out(cohort.size());
  for (std::size_t c = 0; c < cohort.size(); ++c) out[c] = sim(emb, cohort.row(c));
  return out;
}

inline constexpr double kMinCohortStddev = 1e-12;

/// Adaptive symmetric normalization of one raw score given the two sides'
/// top-n cohort statistics.
inline double snorm_score(double raw, const CohortStats& enroll, const CohortStats& test) {
  require(enroll.stddev >= kMinCohortStddev && test.stddev >= kMinCohortStddev, Errc::kDegenerateCohort,
          "cohort score standard deviation below 1e-12");
  return 0.5 * ((raw - enroll.mean) / enroll.stddev + (raw - test.mean) / test.stddev);
}

inline double snorm_score(double raw, std::span<const double> enroll_cohort_scores,
                          std::span<const double> test_cohort_scores, TopN top_n) {
  const auto e = top_stats(enroll_cohort_scores, top_n.resolve(enroll_cohort_scores.size()));
  const auto t = top_stats(test_cohort_scores, top_n.resolve(test_cohort_scores.size()));
  return snorm_score(raw, e, t);
}

/// Adaptive s-norm over a whole score set. Cohort statistics are computed
/// once per distinct utterance on each side. `sim` ranks and scores cohort
/// entries; it must be on the same scale as the raw scores.
template <typename Similarity = CohortCosine>
ScoreSet snorm(const ScoreSet& scores, const EmbeddingSet& enroll, const EmbeddingSet& test, const Cohort& cohort,
               TopN top_n, Similarity sim = {}) {
  require(cohort.size() >= 1, Errc::kEmptyInput, "empty cohort");
  require(cohort.dim == enroll.dim() && cohort.dim == test.dim(), Errc::kDimMismatch,
          "cohort dimension differs from embeddings");
  const std::size_t keep = top_n.resolve(cohort.size());
  require(keep >= 2, Errc::kInvalidArgument, "s-norm needs top-n >= 2");
  require(keep <= cohort.size(), Errc::kTopNTooLarge,
          "top-n " + std::to_string(keep) + " exceeds cohort size " + std::to_string(cohort.size()));

  auto side_stats = [&](const EmbeddingSet& set, auto id_of) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::size_t> rows;
    for (const auto& s : scores) {
      const std::string& id = id_of(s);
      if (slot.emplace(id, rows.size()).second) rows.push_back(set.index_of(id));
    }
    std::vector<CohortStats> stats(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) {
      stats[i] = top_stats(cohort_scores(set.row(rows[i]), cohort, sim), keep);
    }, 16);
    return std::make_pair(std::move(slot), std::move(stats));
  };
  const auto [enroll_slot, enroll_stats] = side_stats(enroll, [](const Score& s) -> const std::string& { return s.enroll; });
  const auto [test_slot, test_stats] = side_stats(test, [](const Score& s) -> const std::string& { return s.test; });

  ScoreSet out = scores;
  for (auto& s : out) {
    s.value = snorm_score(s.value, enroll_stats[enroll_slot.at(s.enroll)], test_stats[test_slot.at(s.test)]);
  }
  return out;
}

inline ScoreSet mean_fuse(const std::vector<ScoreSet>& systems) {
  require(!systems.empty(), Errc::kEmptyInput, "no score sets to fuse");
  const ScoreSet& first = systems.front();
  for (std::size_t k = 1; k < systems.size(); ++k) {
    require(systems[k].size() == first.size(), Errc::kMisalignedTrials,
            "system " + std::to_string(k) + " has " + std::to_string(systems[k].size()) + " trials, expected " +
                std::to_string(first.size()));
    for (std::size_t i = 0; i < first.size(); ++i) {
      require(systems[k][i].enroll == first[i].enroll && systems[k][i].test == first[i].test,
              Errc::kMisalignedTrials, "system " + std::to_string(k) + " row " + std::to_string(i));
    }
  }
  ScoreSet out = first;
  if (systems.size() == 1) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Shifted by the first system so that identical inputs reproduce exactly.
    const double ref = first[i].value;
    double sum = 0.0;
    for (const auto& sys : systems) sum += sys[i].value - ref;
    out[i].value = ref + sum / static_cast<double>(systems.size());
  }
  return out;
}

}  // namespace svkit
