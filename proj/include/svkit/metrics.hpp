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
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "svkit/error.hpp"
#include "svkit/trials.hpp"

namespace svkit {

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const {
    require(p_target > 0.0 && p_target < 1.0, Errc::kInvalidArgument, "p_target must lie in (0, 1)");
    require(c_miss > 0.0 && c_fa > 0.0, Errc::kInvalidArgument, "DCF costs must be > 0");
  }
  double normalizer() const { return std::min(c_miss * p_target, c_fa * (1.0 - p_target)); }
  /// Bayes decision threshold on the log-likelihood-ratio scale.
  double bayes_threshold() const { return std::log((c_fa * (1.0 - p_target)) / (c_miss * p_target)); }
};

struct DetectionScores {
  std::vector<double> target;
  std::vector<double> nontarget;
};

/// Splits an aligned score set by trial label; unlabeled trials are skipped.
inline DetectionScores split_scores(const ScoreSet& scores, const TrialList& trials) {
  check_aligned(scores, trials);
  DetectionScores out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (trials[i].label == TrialLabel::kTarget) out.target.push_back(scores[i].value);
    if (trials[i].label == TrialLabel::kNontarget) out.nontarget.push_back(scores[i].value);
  }
  return out;
}

struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

/// Operating points for "accept when score >= threshold", starting at
/// threshold +inf (reject all) and then at every distinct score in
/// descending order, ending at accept-all.
inline std::vector<OperatingPoint> operating_points(const DetectionScores& s) {
  require(!s.target.empty() && !s.nontarget.empty(), Errc::kOneClassOnly,
          "need at least one target and one nontarget score");
  std::vector<std::pair<double, bool>> all;
  all.reserve(s.target.size() + s.nontarget.size());
  for (double v : s.target) all.emplace_back(v, true);
  for (double v : s.nontarget) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const auto n_tgt = static_cast<double>(s.target.size());
  const auto n_non = static_cast<double>(s.nontarget.size());
  std::vector<OperatingPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  std::size_t accepted_tgt = 0;
  std::size_t accepted_non = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].first;
    for (; i < all.size() && all[i].first == threshold; ++i) {
      if (all[i].second) {
        ++accepted_tgt;
      } else {
        ++accepted_non;
      }
    }
    points.push_back({threshold, static_cast<double>(s.target.size() - accepted_tgt) / n_tgt,
                      static_cast<double>(accepted_non) / n_non});
  }
  return points;
}

/// Equal error rate in [0, 1], linearly interpolated between the two
/// operating points where P_miss - P_fa changes sign.
inline double eer(std::span<const OperatingPoint> points) {
  require(!points.empty(), Errc::kEmptyInput, "no operating points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double diff = points[i].p_miss - points[i].p_fa;
    if (diff > 0.0) continue;
    if (diff == 0.0 || i == 0) return points[i].p_miss;
    const double prev = points[i - 1].p_miss - points[i - 1].p_fa;
    const double t = prev / (prev - diff);
    return points[i - 1].p_miss + t * (points[i].p_miss - points[i - 1].p_miss);
  }
  return points.back().p_miss;
}

inline double eer(const DetectionScores& s) { return eer(operating_points(s)); }

inline double eer(const ScoreSet& scores, const TrialList& trials) { return eer(split_scores(scores, trials)); }

inline double min_dcf(std::span<const OperatingPoint> points, const DcfParams& params) {
  params.validate();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    best = std::min(best, params.c_miss * params.p_target * p.p_miss + params.c_fa * (1.0 - params.p_target) * p.p_fa);
  }
  return best / params.normalizer();
}

inline double min_dcf(const DetectionScores& s, const DcfParams& params) {
  return min_dcf(operating_points(s), params);
}

inline double min_dcf(const ScoreSet& scores, const TrialList& trials, const DcfParams& params) {
  return min_dcf(split_scores(scores, trials), params);
}

/// Normalized DCF of LLR-scale scores thresholded at the Bayes threshold.
inline double actual_dcf(const DetectionScores& s, const DcfParams& params) {
  params.validate();
  require(!s.target.empty() && !s.nontarget.empty(), Errc::kOneClassOnly,
          "need at least one target and one nontarget score");
  const double threshold = params.bayes_threshold();
  const auto misses = std::count_if(s.target.begin(), s.target.end(), [&](double v) { return v < threshold; });
  const auto fas = std::count_if(s.nontarget.begin(), s.nontarget.end(), [&](double v) { return v >= threshold; });
  const double p_miss = static_cast<double>(misses) / static_cast<double>(s.target.size());
  const double p_fa = static_cast<double>(fas) / static_cast<double>(s.nontarget.size());
  return (params.c_miss * params.p_target * p_miss + params.c_fa * (1.0 - params.p_target) * p_fa) /
         params.normalizer();
}

inline double actual_dcf(const ScoreSet& scores, const TrialList& trials, const DcfParams& params) {
  return actual_dcf(split_scores(scores, trials), params);
}

/// DET points as CSV `p_fa,p_miss`.
inline void write_det_csv(std::ostream& out, std::span<const OperatingPoint> points) {
  out << "p_fa,p_miss\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", p.p_fa, p.p_miss);
    out << buf;
  }
}

/// Adjusted Rand index from the pair-counting contingency table.
/// Degenerate cases where the index cannot vary (fewer than two items, or
/// both partitions trivial) return 1.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size(), Errc::kIdMismatch, "partitions cover different item counts");
  auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<int, int>, std::size_t> joint;
  std::unordered_map<int, std::size_t> rows;
  std::unordered_map<int, std::size_t> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, n] : joint) index += pairs(static_cast<double>(n));
  double sum_a = 0.0;
  for (const auto& [key, n] : rows) sum_a += pairs(static_cast<double>(n));
  double sum_b = 0.0;
  for (const auto& [key, n] : cols) sum_b += pairs(static_cast<double>(n));
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// ARI over id-keyed labelings; both must cover exactly the same ids.
inline double adjusted_rand_index(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  require(a.size() == b.size(), Errc::kIdMismatch, "labelings cover different id sets");
  std::vector<int> la;
  std::vector<int> lb;
  la.reserve(a.size());
  lb.reserve(a.size());
  auto it = b.begin();
  for (const auto& [id, label] : a) {
    require(it->first == id, Errc::kIdMismatch, "id '" + id + "' missing from second labeling");
    la.push_back(label);
    lb.push_back(it->second);
    ++it;
  }
  return adjusted_rand_index(la, lb);
}

}  // namespace svkit
