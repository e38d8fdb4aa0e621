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
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"

namespace svkit {

struct SynthOptions {
  std::size_t num_speakers = 10;
  std::size_t utts_per_speaker = 10;
  std::size_t dim = 32;
  /// Signal-to-noise knob. Noise per component is N(0, 1/dim), so its norm
  /// is ~1 and each utterance is normalize(concentration * mean + noise);
  /// 0 gives pure noise, large values collapse onto the speaker mean.
  double concentration = 2.0;
  double min_duration_s = 2.0;
  double max_duration_s = 20.0;
  std::uint64_t seed = 0;
};

inline std::string synth_speaker_id(std::size_t s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%05zu", s);
  return buf;
}

inline std::string synth_utt_id(std::size_t s, std::size_t u) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "spk%05zu-utt%04zu", s, u);
  return buf;
}

/// Labeled, length-normalized embeddings clustered around random speaker
/// means on the unit sphere. Durations are uniform in the configured range;
/// speech frames cover a uniform 70-100% of each utterance.
inline EmbeddingSet synth_dataset(const SynthOptions& opt) {
  require(opt.num_speakers >= 1, Errc::kInvalidArgument, "num_speakers must be >= 1");
  require(opt.dim >= 1, Errc::kInvalidArgument, "dim must be >= 1");
  require(opt.concentration >= 0.0 && std::isfinite(opt.concentration), Errc::kInvalidArgument,
          "concentration must be finite and >= 0");
  require(opt.min_duration_s >= 0.0 && opt.min_duration_s <= opt.max_duration_s, Errc::kInvalidArgument,
          "duration range must satisfy 0 <= lo <= hi");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> duration(opt.min_duration_s, opt.max_duration_s);
  std::uniform_real_distribution<double> speech_fraction(0.7, 1.0);
  const double noise_sd = 1.0 / std::sqrt(static_cast<double>(opt.dim));

  std::vector<double> means(opt.num_speakers * opt.dim);
  for (std::size_t s = 0; s < opt.num_speakers; ++s) {
    std::span<double> mean(means.data() + s * opt.dim, opt.dim);
    double n = 0.0;
    do {
      for (double& v : mean) v = gauss(rng);
      n = norm(mean);
    } while (n == 0.0);
    for (double& v : mean) v /= n;
  }

  EmbeddingSet set(opt.dim);
  set.reserve(opt.num_speakers * opt.utts_per_speaker);
  std::vector<double> vec(opt.dim);
  for (std::size_t s = 0; s < opt.num_speakers; ++s) {
    std::span<const double> mean(means.data() + s * opt.dim, opt.dim);
    for (std::size_t u = 0; u < opt.utts_per_speaker; ++u) {
      double n = 0.0;
      do {
        for (std::size_t j = 0; j < opt.dim; ++j) vec[j] = opt.concentration * mean[j] + noise_sd * gauss(rng);
        n = norm(vec);
      } while (n == 0.0);
      for (double& v : vec) v /= n;
      const std::string id = synth_utt_id(s, u);
      set.add(id, vec);
      UttMeta meta;
      meta.duration_s = duration(rng);
      meta.speech_frames =
          static_cast<std::uint64_t>(std::floor(meta.duration_s * kFramesPerSecond * speech_fraction(rng)));
      meta.speaker = synth_speaker_id(s);
      set.set_meta(id, std::move(meta));
    }
  }
  return set;
}

}  // namespace svkit
