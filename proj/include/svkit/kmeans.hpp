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
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "svkit/binary_io.hpp"
#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/parallel.hpp"

namespace svkit {

struct KMeansModel {
  std::size_t dim = 0;
  std::vector<double> centers;  // k x dim, row-major
  std::vector<std::uint64_t> counts;
  double inertia = 0.0;

  std::size_t k() const { return counts.size(); }
  std::span<const double> center(std::size_t c) const { return {centers.data() + c * dim, dim}; }
  std::span<double> mutable_center(std::size_t c) { return {centers.data() + c * dim, dim}; }

  bool operator==(const KMeansModel&) const = default;
};

struct KMeansOptions {
  std::size_t k = 50000;
  std::size_t batch_size = 10000;
  /// 0 selects ceil(10 * count / batch_size), about ten passes over the data.
  std::size_t n_batches = 0;
  std::uint64_t seed = 0;
};

struct Nearest {
  std::size_t index = 0;
  double sq_dist = 0.0;
};

/// Nearest center by squared Euclidean distance, lowest index on ties.
inline Nearest nearest_center(std::span<const double> x, const KMeansModel& model) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < model.k(); ++c) {
    const double d = squared_distance(x, model.center(c));
    if (d < best.sq_dist) best = {c, d};
  }
  return best;
}

inline std::vector<Nearest> assign_all(const EmbeddingSet& set, const KMeansModel& model) {
  std::vector<Nearest> out(set.size());
  parallel_for(set.size(), [&](std::size_t i) { out[i] = nearest_center(set.row(i), model); }, 32);
  return out;
}

/// Recomputes counts and inertia of `model` over the full set.
inline void finalize_statistics(const EmbeddingSet& set, KMeansModel& model) {
  const auto nearest = assign_all(set, model);
  std::fill(model.counts.begin(), model.counts.end(), 0);
  model.inertia = 0.0;
  for (const auto& n : nearest) {
    ++model.counts[n.index];
    model.inertia += n.sq_dist;
  }
}

/// k distinct rows sampled uniformly without replacement.
inline KMeansModel random_init(const EmbeddingSet& set, std::size_t k, std::mt19937_64& rng) {
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(k <= set.size(), Errc::kKTooLarge,
          "k = " + std::to_string(k) + " exceeds " + std::to_string(set.size()) + " points");
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  KMeansModel model;
  model.dim = set.dim();
  model.counts.assign(k, 0);
  model.centers.reserve(k * set.dim());
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = set.row(idx[i]);
    model.centers.insert(model.centers.end(), row.begin(), row.end());
  }
  return model;
}

/// Web-scale mini-batch k-means (Sculley 2010). Each batch is drawn
/// uniformly with replacement and assigned against the centers as they
/// stood at the start of the batch; every member then pulls its center
/// with learning rate 1 / (per-center count). Centers that never received
/// a sample are reseeded to the last-batch points farthest from their
/// centers. Counts and inertia are reported over the full set.
inline KMeansModel minibatch_kmeans(const EmbeddingSet& set, const KMeansOptions& opt) {
  require(opt.batch_size >= 1, Errc::kInvalidArgument, "batch_size must be >= 1");
  require(!set.empty(), Errc::kEmptyInput, "no embeddings to cluster");
  std::mt19937_64 rng(opt.seed);
  KMeansModel model = random_init(set, opt.k, rng);
  const std::size_t n_batches =
      opt.n_batches != 0 ? opt.n_batches : (10 * set.size() + opt.batch_size - 1) / opt.batch_size;

  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  std::vector<std::size_t> batch(opt.batch_size);
  std::vector<Nearest> nearest(opt.batch_size);
  std::vector<std::uint64_t> learned(model.k(), 0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (auto& i : batch) i = pick(rng);
    parallel_for(batch.size(), [&](std::size_t j) { nearest[j] = nearest_center(set.row(batch[j]), model); }, 32);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const std::size_t c = nearest[j].index;
      const double eta = 1.0 / static_cast<double>(++learned[c]);
      auto center = model.mutable_center(c);
      const auto x = set.row(batch[j]);
      for (std::size_t d = 0; d < model.dim; ++d) center[d] += eta * (x[d] - center[d]);
    }
  }

  if (n_batches > 0) {
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return nearest[a].sq_dist > nearest[b].sq_dist; });
    std::vector<bool> taken(set.size(), false);
    std::size_t next = 0;
    for (std::size_t c = 0; c < model.k(); ++c) {
      if (learned[c] != 0) continue;
      while (next < order.size() && (taken[batch[order[next]]] || nearest[order[next]].sq_dist <= 0.0)) ++next;
      if (next == order.size()) break;
      const auto x = set.row(batch[order[next]]);
      taken[batch[order[next]]] = true;
      std::copy(x.begin(), x.end(), model.mutable_center(c).begin());
      ++next;
    }
  }
  finalize_statistics(set, model);
  return model;
}

struct LloydResult {
  KMeansModel model;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

/// Full-batch Lloyd iterations from a given start; reference implementation
/// for checking the mini-batch solver. Empty clusters keep their center.
inline LloydResult lloyd_kmeans(const EmbeddingSet& set, KMeansModel init, std::size_t max_iter = 300,
                                double rel_tol = 1e-12) {
  require(init.dim == set.dim(), Errc::kDimMismatch, "initial centers have the wrong dimension");
  LloydResult result;
  result.model = std::move(init);
  KMeansModel& model = result.model;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const auto nearest = assign_all(set, model);
    double inertia = 0.0;
    for (const auto& n : nearest) inertia += n.sq_dist;
    result.inertia_history.push_back(inertia);
    ++result.iterations;

    std::vector<double> sums(model.centers.size(), 0.0);
    std::vector<std::uint64_t> counts(model.k(), 0);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto x = set.row(i);
      const std::size_t c = nearest[i].index;
      ++counts[c];
      for (std::size_t d = 0; d < model.dim; ++d) sums[c * model.dim + d] += x[d];
    }
    for (std::size_t c = 0; c < model.k(); ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < model.dim; ++d) {
        model.centers[c * model.dim + d] = sums[c * model.dim + d] / static_cast<double>(counts[c]);
      }
    }
    const auto n = result.inertia_history.size();
    if (n >= 2 && result.inertia_history[n - 2] - inertia <= rel_tol * std::max(1.0, inertia)) break;
  }
  finalize_statistics(set, model);
  return result;
}

// K-means model file (little-endian):
//   "SVKM" | u32 version | u32 dim | u64 k | f64 inertia
//   k x { u64 count | dim x f64 }
// Centers are stored in double precision so reassignment from a saved
// model is exact.

inline constexpr std::uint32_t kKMeansFileVersion = 1;

inline void write_kmeans(std::ostream& out, const KMeansModel& model) {
  binio::put_magic(out, "SVKM");
  binio::put_le<std::uint32_t>(out, kKMeansFileVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim));
  binio::put_le<std::uint64_t>(out, model.k());
  binio::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(model.inertia));
  for (std::size_t c = 0; c < model.k(); ++c) {
    binio::put_le<std::uint64_t>(out, model.counts[c]);
    for (double v : model.center(c)) binio::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
}

inline KMeansModel read_kmeans(std::istream& in) {
  binio::expect_magic(in, "SVKM");
  const auto version = binio::get_le<std::uint32_t>(in, "version");
  require(version == kKMeansFileVersion, Errc::kBadMagic, "unsupported SVKM version " + std::to_string(version));
  KMeansModel model;
  model.dim = binio::get_le<std::uint32_t>(in, "dim");
  require(model.dim >= 1, Errc::kDimMismatch, "SVKM dim must be >= 1");
  const auto k = binio::get_le<std::uint64_t>(in, "k");
  model.inertia = std::bit_cast<double>(binio::get_le<std::uint64_t>(in, "inertia"));
  for (std::uint64_t c = 0; c < k; ++c) {
    model.counts.push_back(binio::get_le<std::uint64_t>(in, "count"));
    for (std::size_t d = 0; d < model.dim; ++d) {
      model.centers.push_back(std::bit_cast<double>(binio::get_le<std::uint64_t>(in, "center")));
    }
  }
  return model;
}

inline void write_kmeans_file(const std::string& path, const KMeansModel& model) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  write_kmeans(out, model);
}

inline KMeansModel read_kmeans_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return read_kmeans(in);
}

}  // namespace svkit
