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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"

namespace svkit {

struct ClrConfig {
  std::uint64_t cycle_len = 130000;
  double lr_min = 1e-8;
  double lr_max = 1e-3;
};

inline constexpr ClrConfig kInitialClr{130000, 1e-8, 1e-3};
inline constexpr ClrConfig kFineTuneClr{60000, 1e-8, 1e-5};

/// Cyclical learning rate, triangular2 policy: a triangle wave from lr_min
/// up to a peak at mid-cycle and back, with the peak amplitude halved
/// every cycle.
inline double clr_triangular2(std::uint64_t t, std::uint64_t cycle_len, double lr_min, double lr_max) {
  require(cycle_len >= 2, Errc::kInvalidArgument, "cycle length must be >= 2");
  require(lr_min >= 0.0 && lr_min <= lr_max, Errc::kInvalidArgument, "need 0 <= lr_min <= lr_max");
  const std::uint64_t cycle = t / cycle_len;
  const double phase = static_cast<double>(t % cycle_len) / static_cast<double>(cycle_len);
  const double tri = 1.0 - std::abs(2.0 * phase - 1.0);
  const double amplitude = std::ldexp(lr_max - lr_min, -static_cast<int>(std::min<std::uint64_t>(cycle, 2000)));
  return lr_min + amplitude * tri;
}

inline double clr_triangular2(std::uint64_t t, const ClrConfig& cfg = kInitialClr) {
  return clr_triangular2(t, cfg.cycle_len, cfg.lr_min, cfg.lr_max);
}

// ---------------------------------------------------------------------------
// Crop-pair selection for contrastive training

inline constexpr std::size_t kCropCandidates = 5;
inline constexpr std::size_t kContrastiveCropFrames = 350;  // 3.5 s

inline std::size_t seconds_to_frames(double seconds) {
  require(seconds >= 0.0, Errc::kInvalidArgument, "negative duration");
  return static_cast<std::size_t>(std::llround(seconds * kFramesPerSecond));
}

struct CropPair {
  std::size_t start_a = 0;
  std::size_t start_b = 0;
  std::size_t overlap = 0;

  bool operator==(const CropPair&) const = default;
};

inline std::size_t crop_overlap(std::size_t a, std::size_t b, std::size_t crop_len) {
  const std::size_t gap = a > b ? a - b : b - a;
  return gap >= crop_len ? 0 : crop_len - gap;
}

/// Among all unordered pairs of candidate starts, the pair with the least
/// overlap; ties go to the lexicographically smallest (start_a, start_b)
/// with start_a <= start_b.
inline CropPair min_overlap_crop_pair(std::span<const std::size_t> starts, std::size_t crop_len) {
  require(starts.size() >= 2, Errc::kInvalidArgument, "need at least two candidate crops");
  bool have = false;
  CropPair best;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t j = i + 1; j < starts.size(); ++j) {
      CropPair p{std::min(starts[i], starts[j]), std::max(starts[i], starts[j]), 0};
      p.overlap = crop_overlap(p.start_a, p.start_b, crop_len);
      const bool better = !have || p.overlap < best.overlap ||
                          (p.overlap == best.overlap &&
                           (p.start_a < best.start_a || (p.start_a == best.start_a && p.start_b < best.start_b)));
      if (better) {
        best = p;
        have = true;
      }
    }
  }
  return best;
}

/// Draws `num_candidates` crop starts uniformly from [0, T - c] and returns
/// the least-overlapping pair.
inline CropPair min_overlap_crop_pair(std::size_t utt_frames, std::size_t crop_len, std::size_t num_candidates,
                                      std::uint64_t seed) {
  require(crop_len >= 1, Errc::kInvalidArgument, "crop length must be >= 1");
  require(crop_len <= utt_frames, Errc::kCropTooLong,
          "crop of " + std::to_string(crop_len) + " frames exceeds utterance of " + std::to_string(utt_frames));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, utt_frames - crop_len);
  std::vector<std::size_t> starts(num_candidates);
  for (auto& s : starts) s = pick(rng);
  return min_overlap_crop_pair(starts, crop_len);
}

}  // namespace svkit
