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
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/parallel.hpp"

namespace svkit {

/// One agglomeration step. Node ids follow the usual linkage-matrix
/// convention: leaves are 0..k-1 and merge i creates node k + i.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t node = 0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;  // leaves - 1 entries, heights non-decreasing
};

struct AhcResult {
  Dendrogram dendrogram;
  std::vector<int> labels;  // flat cluster per input center
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t into, std::size_t from) { parent_[find(from)] = find(into); }

 private:
  std::vector<std::size_t> parent_;
};

/// Condensed upper-triangular storage of pairwise values.
class Condensed {
 public:
  explicit Condensed(std::size_t n) : n_(n), values_(n < 2 ? 0 : n * (n - 1) / 2) {}
  double& operator()(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return values_[offset(i) + (j - i - 1)];
  }
  std::size_t offset(std::size_t i) const { return i * (2 * n_ - i - 1) / 2; }
  double* row_begin(std::size_t i) { return values_.data() + offset(i); }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

}  // namespace detail

/// Ward-linkage agglomerative clustering of `centers` (k x dim, row-major)
/// after length normalization, so that the squared Euclidean distance
/// 2 (1 - cos) realizes the cosine metric. Uses the nearest-neighbour chain
/// algorithm with Lance-Williams updates (O(k^2) time and memory). Merge
/// heights are Ward distances, i.e. sqrt of the updated squared distances,
/// which for two singletons equals their Euclidean distance.
inline Dendrogram ward_dendrogram(std::span<const double> centers, std::size_t dim) {
  require(dim >= 1, Errc::kDimMismatch, "dimension must be >= 1");
  require(!centers.empty() && centers.size() % dim == 0, Errc::kEmptyInput, "no centers to cluster");
  const std::size_t k = centers.size() / dim;

  std::vector<double> unit(centers.begin(), centers.end());
  for (std::size_t i = 0; i < k; ++i) normalize_in_place({unit.data() + i * dim, dim}, "center " + std::to_string(i));

  detail::Condensed dist(k);
  parallel_for(k, [&](std::size_t i) {
    double* row = dist.row_begin(i);
    std::span<const double> xi(unit.data() + i * dim, dim);
    for (std::size_t j = i + 1; j < k; ++j) row[j - i - 1] = squared_distance(xi, {unit.data() + j * dim, dim});
  }, 8);

  struct RawMerge {
    std::size_t x;
    std::size_t y;
    double sq_height;
  };
  std::vector<RawMerge> raw;
  raw.reserve(k - 1);
  std::vector<std::size_t> size(k, 1);
  std::vector<bool> active(k, true);
  std::vector<std::size_t> chain;
  chain.reserve(k);
  std::size_t remaining = k;
  std::size_t first_active = 0;

  while (remaining > 1) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    const std::size_t a = chain.back();
    // Ties prefer the previous chain element so that reciprocal nearest
    // neighbours are always recognised.
    std::size_t best = chain.size() >= 2 ? chain[chain.size() - 2] : k;
    double best_d = best < k ? dist(a, best) : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (!active[j] || j == a) continue;
      const double d = dist(a, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t x = std::min(a, best);
      const std::size_t y = std::max(a, best);
      raw.push_back({x, y, best_d});
      // The merged cluster lives on in slot y.
      const double nx = static_cast<double>(size[x]);
      const double ny = static_cast<double>(size[y]);
      for (std::size_t j = 0; j < k; ++j) {
        if (!active[j] || j == x || j == y) continue;
        const double nj = static_cast<double>(size[j]);
        dist(j, y) = ((nx + nj) * dist(j, x) + (ny + nj) * dist(j, y) - nj * best_d) / (nx + ny + nj);
      }
      active[x] = false;
      size[y] += size[x];
      --remaining;
    } else {
      chain.push_back(best);
    }
  }

  std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& l, const RawMerge& r) { return l.sq_height < r.sq_height; });
  Dendrogram dendro;
  dendro.leaves = k;
  dendro.merges.reserve(raw.size());
  detail::UnionFind uf(k);
  std::vector<std::size_t> node_of_root(k);
  std::iota(node_of_root.begin(), node_of_root.end(), std::size_t{0});
  std::vector<std::size_t> size_of_root(k, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t rx = uf.find(raw[i].x);
    const std::size_t ry = uf.find(raw[i].y);
    Merge m;
    m.a = std::min(node_of_root[rx], node_of_root[ry]);
    m.b = std::max(node_of_root[rx], node_of_root[ry]);
    m.height = std::sqrt(std::max(0.0, raw[i].sq_height));
    m.node = k + i;
    m.size = size_of_root[rx] + size_of_root[ry];
    uf.unite(rx, ry);
    node_of_root[rx] = m.node;
    size_of_root[rx] = m.size;
    dendro.merges.push_back(m);
  }
  return dendro;
}

/// Flat clustering with `num_clusters` groups: applies the first
/// leaves - num_clusters merges. Labels are numbered by first appearance
/// in leaf order.
inline std::vector<int> cut_dendrogram(const Dendrogram& dendro, std::size_t num_clusters) {
  require(num_clusters >= 1 && num_clusters <= dendro.leaves, Errc::kInvalidArgument,
          "cluster count " + std::to_string(num_clusters) + " outside [1, " + std::to_string(dendro.leaves) + "]");
  const std::size_t k = dendro.leaves;
  // Map every node id back to a representative leaf.
  std::vector<std::size_t> leaf_of(k + dendro.merges.size());
  std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
  detail::UnionFind uf(k);
  for (std::size_t i = 0; i < k - num_clusters; ++i) {
    const auto& m = dendro.merges[i];
    uf.unite(leaf_of[m.a], leaf_of[m.b]);
    leaf_of[m.node] = leaf_of[m.a];
  }
  std::vector<int> labels(k, -1);
  std::vector<int> label_of_root(k, -1);
  int next = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t r = uf.find(i);
    if (label_of_root[r] < 0) label_of_root[r] = next++;
    labels[i] = label_of_root[r];
  }
  return labels;
}

inline AhcResult ahc_ward(std::span<const double> centers, std::size_t dim, std::size_t num_clusters) {
  AhcResult out;
  out.dendrogram = ward_dendrogram(centers, dim);
  out.labels = cut_dendrogram(out.dendrogram, num_clusters);
  return out;
}

}  // namespace svkit
