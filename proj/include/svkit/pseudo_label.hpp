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
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "svkit/ahc.hpp"
#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/kmeans.hpp"
#include "svkit/metrics.hpp"
#include "svkit/parallel.hpp"
#include "svkit/trials.hpp"

namespace svkit {

/// Cluster assignment per utterance (aligned with `ids`) plus one prototype
/// per cluster: the mean of the length-normalized member embeddings.
struct PseudoLabeling {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::size_t num_clusters = 0;
  std::size_t dim = 0;
  std::vector<double> prototypes;  // num_clusters x dim

  std::span<const double> prototype(std::size_t c) const { return {prototypes.data() + c * dim, dim}; }

  std::map<std::string, int> by_id() const {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], labels[i]);
    return out;
  }
};

namespace detail {

/// Prototypes accumulated in lexicographic id order so the result does not
/// depend on the order of utterances in the set.
inline std::vector<double> compute_prototypes(const EmbeddingSet& set, std::span<const int> labels,
                                              std::size_t num_clusters) {
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return set.id(a) < set.id(b); });
  std::vector<double> sums(num_clusters * set.dim(), 0.0);
  std::vector<std::size_t> counts(num_clusters, 0);
  std::vector<double> unit(set.dim());
  for (std::size_t i : order) {
    const auto row = set.row(i);
    std::copy(row.begin(), row.end(), unit.begin());
    normalize_in_place(unit, set.id(i));
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t d = 0; d < set.dim(); ++d) sums[c * set.dim() + d] += unit[d];
  }
  for (std::size_t c = 0; c < num_clusters; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t d = 0; d < set.dim(); ++d) sums[c * set.dim() + d] /= static_cast<double>(counts[c]);
  }
  return sums;
}

}  // namespace detail

inline PseudoLabeling make_labeling(const EmbeddingSet& set, std::vector<int> labels, std::size_t num_clusters) {
  require(labels.size() == set.size(), Errc::kLengthMismatch, "one label per utterance required");
  for (int l : labels) {
    require(l >= 0 && static_cast<std::size_t>(l) < num_clusters, Errc::kInvalidArgument, "label out of range");
  }
  PseudoLabeling out;
  out.ids = set.ids();
  out.num_clusters = num_clusters;
  out.dim = set.dim();
  out.prototypes = detail::compute_prototypes(set, labels, num_clusters);
  out.labels = std::move(labels);
  return out;
}

/// Utterance -> nearest k-means center (Euclidean) -> that center's AHC
/// cluster. Clusters whose centers attract no utterance keep a zero
/// prototype.
inline PseudoLabeling assign_pseudo_labels(const EmbeddingSet& set, const KMeansModel& kmeans,
                                           std::span<const int> center_labels) {
  require(set.dim() == kmeans.dim, Errc::kDimMismatch, "embedding and k-means dimensions differ");
  require(center_labels.size() == kmeans.k(), Errc::kLengthMismatch, "one label per k-means center required");
  int max_label = -1;
  for (int l : center_labels) {
    require(l >= 0, Errc::kInvalidArgument, "negative center label");
    max_label = std::max(max_label, l);
  }
  const auto nearest = assign_all(set, kmeans);
  std::vector<int> labels(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) labels[i] = center_labels[nearest[i].index];
  return make_labeling(set, std::move(labels), static_cast<std::size_t>(max_label + 1));
}

/// Renames cluster c to perm[c]; prototypes move with their labels.
inline PseudoLabeling permute_labels(const PseudoLabeling& in, std::span<const int> perm) {
  require(perm.size() == in.num_clusters, Errc::kLengthMismatch, "permutation size differs from cluster count");
  PseudoLabeling out = in;
  for (auto& l : out.labels) l = perm[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < in.num_clusters; ++c) {
    const auto src = in.prototype(c);
    std::copy(src.begin(), src.end(), out.prototypes.begin() + static_cast<std::ptrdiff_t>(perm[c] * in.dim));
  }
  return out;
}

struct LabelMatching {
  /// mapping[new_label] = matched previous label or -1.
  std::vector<int> mapping;
  /// Fraction of utterances whose new label maps onto their previous one.
  double agreement = 0.0;
};

/// Greedy maximum-overlap matching between two labelings of the same ids:
/// cluster pairs are taken in order of decreasing co-occurrence count
/// (ties by ascending previous then new label), each label used at most once.
inline LabelMatching match_labels(std::span<const int> previous, std::span<const int> current) {
  require(previous.size() == current.size(), Errc::kIdSetChanged, "labelings cover different utterance counts");
  std::map<std::pair<int, int>, std::size_t> overlap;
  int max_prev = -1;
  int max_cur = -1;
  for (std::size_t i = 0; i < previous.size(); ++i) {
    ++overlap[{previous[i], current[i]}];
    max_prev = std::max(max_prev, previous[i]);
    max_cur = std::max(max_cur, current[i]);
  }
  std::vector<std::pair<std::pair<int, int>, std::size_t>> pairs(overlap.begin(), overlap.end());
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  LabelMatching m;
  m.mapping.assign(static_cast<std::size_t>(max_cur + 1), -1);
  std::vector<bool> prev_used(static_cast<std::size_t>(max_prev + 1), false);
  std::size_t matched = 0;
  for (const auto& [key, count] : pairs) {
    const auto [p, c] = key;
    if (prev_used[static_cast<std::size_t>(p)] || m.mapping[static_cast<std::size_t>(c)] >= 0) continue;
    prev_used[static_cast<std::size_t>(p)] = true;
    m.mapping[static_cast<std::size_t>(c)] = p;
    matched += count;
  }
  m.agreement = previous.empty() ? 1.0 : static_cast<double>(matched) / static_cast<double>(previous.size());
  return m;
}

/// Validation score of a trial under a labeling: cosine between the two
/// utterances' cluster prototypes (1 when they share a cluster).
inline ScoreSet prototype_scores(const PseudoLabeling& labeling, const TrialList& trials) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labeling.ids.size(); ++i) index.emplace(labeling.ids[i], i);
  auto label_of = [&](const std::string& id) {
    auto it = index.find(id);
    require(it != index.end(), Errc::kUnknownId, id);
    return static_cast<std::size_t>(labeling.labels[it->second]);
  };
  std::vector<double> proto_norm(labeling.num_clusters);
  for (std::size_t c = 0; c < labeling.num_clusters; ++c) proto_norm[c] = norm(labeling.prototype(c));
  ScoreSet out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    const std::size_t a = label_of(t.enroll);
    const std::size_t b = label_of(t.test);
    const double denom = proto_norm[a] * proto_norm[b];
    const double value = a == b ? 1.0 : (denom > 0.0 ? dot(labeling.prototype(a), labeling.prototype(b)) / denom : 0.0);
    out.push_back({t.enroll, t.test, value});
  }
  return out;
}

struct SweepRow {
  std::size_t num_clusters = 0;
  double eer = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Lowest EER; ties resolve to the smallest cluster count.
  std::size_t best_num_clusters = 0;
};

inline SweepResult sweep_cluster_count(const EmbeddingSet& set, const KMeansModel& kmeans, const Dendrogram& dendro,
                                       std::span<const std::size_t> cluster_counts, const TrialList& trials) {
  require(!cluster_counts.empty(), Errc::kInvalidArgument, "no cluster counts to sweep");
  SweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (const std::size_t K : cluster_counts) {
    const auto center_labels = cut_dendrogram(dendro, K);
    const auto labeling = assign_pseudo_labels(set, kmeans, center_labels);
    const double e = eer(prototype_scores(labeling, trials), trials);
    result.rows.push_back({K, e});
    if (e < best || (e == best && K < result.best_num_clusters)) {
      best = e;
      result.best_num_clusters = K;
    }
  }
  return result;
}

inline SweepResult sweep_cluster_count(const EmbeddingSet& set, const KMeansModel& kmeans,
                                       std::span<const std::size_t> cluster_counts, const TrialList& trials) {
  return sweep_cluster_count(set, kmeans, ward_dendrogram(kmeans.centers, kmeans.dim), cluster_counts, trials);
}

/// Cluster counts lo, lo + step, ..., up to hi inclusive.
inline std::vector<std::size_t> cluster_count_grid(std::size_t lo, std::size_t hi, std::size_t step = 2500) {
  require(step >= 1 && lo >= 1 && lo <= hi, Errc::kInvalidArgument, "bad cluster-count grid");
  std::vector<std::size_t> out;
  for (std::size_t k = lo; k <= hi; k += step) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// Iterative pseudo-labeling driver

/// External step that produces new embeddings from the current ones and
/// their pseudo-labels. In production this is network retraining.
using EmbeddingRefresher = std::function<EmbeddingSet(const EmbeddingSet&, const PseudoLabeling&)>;

inline EmbeddingRefresher identity_refresher() {
  return [](const EmbeddingSet& emb, const PseudoLabeling&) { return emb; };
}

/// Moves every embedding a fraction `pull` of the way toward its cluster
/// prototype and renormalizes.
inline EmbeddingRefresher prototype_pull_refresher(double pull) {
  require(pull >= 0.0 && pull <= 1.0, Errc::kInvalidArgument, "pull factor must lie in [0, 1]");
  return [pull](const EmbeddingSet& emb, const PseudoLabeling& labeling) {
    EmbeddingSet out(emb.dim());
    out.reserve(emb.size());
    std::vector<double> v(emb.dim());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labeling.ids.size(); ++i) index.emplace(labeling.ids[i], i);
    for (std::size_t i = 0; i < emb.size(); ++i) {
      const auto x = emb.row(i);
      const auto p = labeling.prototype(static_cast<std::size_t>(labeling.labels[index.at(emb.id(i))]));
      for (std::size_t d = 0; d < emb.dim(); ++d) v[d] = (1.0 - pull) * x[d] + pull * p[d];
      normalize_in_place(v, emb.id(i));
      out.add(emb.id(i), v);
    }
    for (const auto& [id, meta] : emb.all_meta()) out.set_meta(id, meta);
    return out;
  };
}

struct IterateOptions {
  std::size_t num_clusters = 7500;
  KMeansOptions kmeans;
  std::size_t max_iters = 7;
  /// Stop once validation EER improves by less than this (absolute,
  /// EER on the [0, 1] scale). Only used when validation trials are given.
  double min_eer_gain = 0.001;
  std::uint64_t seed = 0;
  /// Shuffle cluster ids after every iteration; downstream consumers must
  /// never assume labels are stable between iterations.
  bool permute = true;
};

struct IterationRecord {
  std::size_t iteration = 0;
  PseudoLabeling labeling;
  double kmeans_inertia = 0.0;
  /// Greedy-matched agreement with the previous iteration (1 for the first).
  double agreement = 1.0;
  std::optional<double> eer;
};

struct IterateResult {
  std::vector<IterationRecord> iterations;
  EmbeddingSet final_embeddings;
  bool converged = false;
};

inline std::uint64_t iteration_seed(std::uint64_t base, std::size_t iteration) {
  // splitmix64 of (base + iteration)
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(iteration) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// One clustering cycle: length-normalize, mini-batch k-means from scratch,
/// Ward AHC over the centers, cut, assign, prototypes.
inline PseudoLabeling cluster_once(const EmbeddingSet& embeddings, std::size_t num_clusters,
                                   const KMeansOptions& kmeans_opt, double* inertia = nullptr) {
  const EmbeddingSet unit = length_normalize(embeddings);
  const KMeansModel km = minibatch_kmeans(unit, kmeans_opt);
  if (inertia != nullptr) *inertia = km.inertia;
  const AhcResult ahc = ahc_ward(km.centers, km.dim, num_clusters);
  return assign_pseudo_labels(unit, km, ahc.labels);
}

inline IterateResult iterate(const EmbeddingSet& initial, const IterateOptions& opt, const EmbeddingRefresher& refresh,
                             const TrialList* validation = nullptr) {
  require(opt.max_iters >= 1, Errc::kInvalidArgument, "max_iters must be >= 1");
  IterateResult result;
  EmbeddingSet current = initial;
  std::vector<std::string> sorted_ids = initial.ids();
  std::sort(sorted_ids.begin(), sorted_ids.end());

  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    KMeansOptions km = opt.kmeans;
    km.seed = iteration_seed(opt.seed, it);
    rec.labeling = cluster_once(current, opt.num_clusters, km, &rec.kmeans_inertia);
    if (opt.permute) {
      std::vector<int> perm(rec.labeling.num_clusters);
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(km.seed ^ 0x5bd1e995ULL);
      std::shuffle(perm.begin(), perm.end(), rng);
      rec.labeling = permute_labels(rec.labeling, perm);
    }
    if (!result.iterations.empty()) {
      const auto& prev = result.iterations.back().labeling;
      rec.agreement = match_labels(prev.labels, rec.labeling.labels).agreement;
    }
    if (validation != nullptr) rec.eer = eer(prototype_scores(rec.labeling, *validation), *validation);

    bool stop = false;
    if (rec.eer && !result.iterations.empty() && result.iterations.back().eer) {
      stop = *result.iterations.back().eer - *rec.eer < opt.min_eer_gain;
    }
    result.iterations.push_back(std::move(rec));
    if (stop) {
      result.converged = true;
      break;
    }
    if (it + 1 == opt.max_iters) break;

    EmbeddingSet next = refresh(current, result.iterations.back().labeling);
    std::vector<std::string> next_ids = next.ids();
    std::sort(next_ids.begin(), next_ids.end());
    require(next_ids == sorted_ids && next.dim() == current.dim(), Errc::kIdSetChanged,
            "refresher changed the utterance set or dimension");
    // Keep the original row order so labelings stay aligned across iterations.
    if (next.ids() != current.ids()) {
      EmbeddingSet reordered(next.dim());
      reordered.reserve(next.size());
      for (const auto& id : current.ids()) reordered.add(id, next.at(id));
      for (const auto& [id, meta] : next.all_meta()) reordered.set_meta(id, meta);
      next = std::move(reordered);
    }
    current = std::move(next);
  }
  result.final_embeddings = std::move(current);
  return result;
}

// Labels file: `utt_id cluster_index` per line.

inline void write_labels(std::ostream& out, std::span<const std::string> ids, std::span<const int> labels) {
  require(ids.size() == labels.size(), Errc::kLengthMismatch, "ids and labels differ in length");
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ' ' << labels[i] << '\n';
}

inline std::vector<std::pair<std::string, int>> read_labels(std::istream& in) {
  std::vector<std::pair<std::string, int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    long long label = -1;
    require(static_cast<bool>(ss >> label) && label >= 0 && label <= std::numeric_limits<int>::max(),
            Errc::kInvalidArgument, "labels line " + std::to_string(lineno) + ": bad cluster index");
    out.emplace_back(std::move(id), static_cast<int>(label));
  }
  return out;
}

inline void write_labels_file(const std::string& path, std::span<const std::string> ids, std::span<const int> labels) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  write_labels(out, ids, labels);
}

inline std::vector<std::pair<std::string, int>> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return read_labels(in);
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "K,EER\n";
  char buf[48];
  for (const auto& row : sweep.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", row.num_clusters, row.eer);
    out << buf;
  }
}

}  // namespace svkit
