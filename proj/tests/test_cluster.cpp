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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "svkit/ahc.hpp"
#include "svkit/kmeans.hpp"
#include "svkit/metrics.hpp"
#include "svkit/pseudo_label.hpp"
#include "svkit/synth.hpp"

namespace svkit {
namespace {

std::vector<int> truth_of(const EmbeddingSet& set) {
  std::vector<int> out;
  for (const auto& id : set.ids()) out.push_back(std::stoi(set.meta(id)->speaker->substr(3)));
  return out;
}

EmbeddingSet easy_set(std::size_t speakers, std::size_t utts, std::uint64_t seed) {
  SynthOptions opt;
  opt.num_speakers = speakers;
  opt.utts_per_speaker = utts;
  opt.dim = 16;
  opt.concentration = 4.0;
  opt.seed = seed;
  return synth_dataset(opt);
}

TrialList balanced_trials(const EmbeddingSet& set, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  TrialList out;
  std::size_t tgt = 0, non = 0;
  while (tgt < n || non < n) {
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (a == b) continue;
    const bool same = *set.meta(set.id(a))->speaker == *set.meta(set.id(b))->speaker;
    if (same && tgt < n) {
      out.push_back({set.id(a), set.id(b), TrialLabel::kTarget});
      ++tgt;
    } else if (!same && non < n) {
      out.push_back({set.id(a), set.id(b), TrialLabel::kNontarget});
      ++non;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

TEST(KMeans, KEqualsCountGivesZeroInertia) {
  const auto set = easy_set(3, 4, 1);
  KMeansOptions opt;
  opt.k = set.size();
  opt.batch_size = 5;
  opt.seed = 2;
  const auto m = minibatch_kmeans(set, opt);
  EXPECT_EQ(m.k(), set.size());
  EXPECT_EQ(m.inertia, 0.0);
  for (auto c : m.counts) EXPECT_EQ(c, 1u);
}

TEST(KMeans, KTooLarge) {
  const auto set = easy_set(2, 2, 1);
  KMeansOptions opt;
  opt.k = 5;
  try {
    minibatch_kmeans(set, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kKTooLarge);
  }
}

TEST(KMeans, TwoBlobsWithinOnePercentOfLloyd) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.3);
  EmbeddingSet set(2);
  for (int i = 0; i < 1000; ++i) {
    const double cx = i % 2 == 0 ? -5.0 : 5.0;
    set.add("p" + std::to_string(i), std::vector<double>{cx + g(rng), g(rng)});
  }
  KMeansOptions opt;
  opt.k = 2;
  opt.batch_size = 100;
  opt.seed = 4;
  const auto mb = minibatch_kmeans(set, opt);
  std::mt19937_64 init_rng(5);
  const auto lloyd = lloyd_kmeans(set, random_init(set, 2, init_rng));
  EXPECT_LE(std::abs(mb.inertia - lloyd.model.inertia), 0.01 * lloyd.model.inertia);
  EXPECT_EQ(mb.counts[0] + mb.counts[1], 1000u);
}

TEST(KMeans, LloydInertiaNonIncreasing) {
  const auto set = easy_set(12, 10, 6);
  std::mt19937_64 rng(1);
  const auto res = lloyd_kmeans(set, random_init(set, 12, rng));
  ASSERT_GE(res.inertia_history.size(), 2u);
  for (std::size_t i = 1; i < res.inertia_history.size(); ++i) {
    EXPECT_LE(res.inertia_history[i], res.inertia_history[i - 1] + 1e-12);
  }
}

TEST(KMeans, DeterministicPerSeed) {
  const auto set = easy_set(10, 8, 2);
  KMeansOptions opt;
  opt.k = 25;
  opt.batch_size = 16;
  opt.seed = 9;
  EXPECT_EQ(minibatch_kmeans(set, opt), minibatch_kmeans(set, opt));
  auto other = opt;
  other.seed = 10;
  EXPECT_NE(minibatch_kmeans(set, opt).centers, minibatch_kmeans(set, other).centers);
}

TEST(KMeans, NeverSampledCentersAreReseeded) {
  // One batch of one point: k - 1 centers receive nothing and get reseeded
  // onto distinct points of that batch where possible.
  const auto set = easy_set(4, 5, 3);
  KMeansOptions opt;
  opt.k = 6;
  opt.batch_size = 4;
  opt.n_batches = 1;
  opt.seed = 1;
  const auto m = minibatch_kmeans(set, opt);
  EXPECT_EQ(m.k(), 6u);
  std::uint64_t total = 0;
  for (auto c : m.counts) total += c;
  EXPECT_EQ(total, set.size());
}

TEST(KMeansFile, RoundTripBitExact) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    KMeansModel m;
    m.dim = 1 + rep % 7;
    const std::size_t k = 1 + rep % 5;
    for (std::size_t i = 0; i < k * m.dim; ++i) m.centers.push_back(g(rng));
    for (std::size_t c = 0; c < k; ++c) m.counts.push_back(rng());
    m.inertia = std::abs(g(rng));
    std::stringstream ss;
    write_kmeans(ss, m);
    EXPECT_EQ(ss.str().size(), 28 + k * (8 + 8 * m.dim));
    EXPECT_EQ(read_kmeans(ss), m);
  }
}

TEST(KMeansFile, Errors) {
  std::stringstream bad("SVEB\x01\x00\x00\x00");
  try {
    read_kmeans(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kBadMagic);
  }
  KMeansModel m{2, {1.0, 2.0}, {3}, 0.5};
  std::stringstream ss;
  write_kmeans(ss, m);
  std::string bytes = ss.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  try {
    read_kmeans(cut);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTruncatedFile);
  }
}

// ---------------------------------------------------------------------------
// Ward AHC

std::vector<double> at_angles(std::initializer_list<double> degrees) {
  std::vector<double> out;
  for (double d : degrees) {
    const double r = d * std::numbers::pi / 180.0;
    out.push_back(std::cos(r));
    out.push_back(std::sin(r));
  }
  return out;
}

TEST(Ward, FourAnglesPairUp) {
  const auto centers = at_angles({0.0, 5.0, 85.0, 90.0});
  const auto d = ward_dendrogram(centers, 2);
  ASSERT_EQ(d.merges.size(), 3u);
  std::set<std::pair<std::size_t, std::size_t>> first_two = {{d.merges[0].a, d.merges[0].b},
                                                             {d.merges[1].a, d.merges[1].b}};
  EXPECT_EQ(first_two, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {2, 3}}));
  // Singleton heights equal the chord length 2 sin(2.5 deg).
  EXPECT_NEAR(d.merges[0].height, 2.0 * std::sin(2.5 * std::numbers::pi / 180.0), 1e-12);
  EXPECT_EQ(d.merges[2].size, 4u);
  EXPECT_EQ(cut_dendrogram(d, 2), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Ward, NormalizesCentersFirst) {
  auto scaled = at_angles({0.0, 5.0, 85.0, 90.0});
  for (std::size_t i = 0; i < 2; ++i) scaled[i] *= 7.0;
  EXPECT_EQ(cut_dendrogram(ward_dendrogram(scaled, 2), 2), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Ward, SingletonsWhenKEqualsCount) {
  const auto centers = at_angles({0.0, 10.0, 40.0, 200.0, 300.0});
  const auto res = ahc_ward(centers, 2, 5);
  EXPECT_EQ(res.labels, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(ahc_ward(centers, 2, 1).labels, (std::vector<int>(5, 0)));
}

TEST(Ward, EmptyInput) {
  try {
    ward_dendrogram(std::vector<double>{}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyInput);
  }
}

/// Naive O(n^3) Ward: repeatedly merge the pair of clusters with the least
/// increase in within-cluster sum of squares, computed from centroids.
std::vector<double> naive_ward_heights(const std::vector<std::vector<double>>& pts,
                                       std::vector<std::vector<int>>* partitions) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < pts.size(); ++i) clusters.push_back({i});
  auto centroid = [&](const std::vector<std::size_t>& c) {
    std::vector<double> m(pts[0].size(), 0.0);
    for (auto i : c)
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += pts[i][d] / static_cast<double>(c.size());
    return m;
  };
  std::vector<double> heights;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const auto ci = centroid(clusters[i]);
        const auto cj = centroid(clusters[j]);
        double d2 = 0.0;
        for (std::size_t d = 0; d < ci.size(); ++d) d2 += (ci[d] - cj[d]) * (ci[d] - cj[d]);
        const double ni = static_cast<double>(clusters[i].size());
        const double nj = static_cast<double>(clusters[j].size());
        const double cost = 2.0 * ni * nj / (ni + nj) * d2;
        if (cost < best) {
          best = cost;
          bi = i;
          bj = j;
        }
      }
    }
    heights.push_back(std::sqrt(best));
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    if (partitions) {
      std::vector<int> labels(pts.size());
      for (std::size_t c = 0; c < clusters.size(); ++c)
        for (auto i : clusters[c]) labels[i] = static_cast<int>(c);
      partitions->push_back(std::move(labels));
    }
  }
  return heights;
}

TEST(Ward, MatchesNaiveOracle) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 12 + static_cast<std::size_t>(rep), dim = 5;
    std::vector<double> flat;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = g(rng);
      const double nv = norm(v);
      for (auto& x : v) x /= nv;
      flat.insert(flat.end(), v.begin(), v.end());
      pts.push_back(v);
    }
    std::vector<std::vector<int>> partitions;
    const auto heights = naive_ward_heights(pts, &partitions);
    const auto d = ward_dendrogram(flat, dim);
    for (std::size_t i = 0; i < heights.size(); ++i) {
      EXPECT_NEAR(d.merges[i].height, heights[i], 1e-9);
      const auto cut = cut_dendrogram(d, n - i - 1);
      EXPECT_NEAR(adjusted_rand_index(cut, partitions[i]), 1.0, 1e-12);
    }
  }
}

TEST(Ward, HeightsMonotoneAndCutsNest) {
  SynthOptions opt;
  opt.num_speakers = 15;
  opt.utts_per_speaker = 6;
  opt.dim = 8;
  opt.seed = 4;
  const auto set = synth_dataset(opt);
  const auto d = ward_dendrogram(set.data(), set.dim());
  for (std::size_t i = 1; i < d.merges.size(); ++i) EXPECT_GE(d.merges[i].height, d.merges[i - 1].height);
  for (std::size_t K = set.size(); K >= 2; --K) {
    const auto fine = cut_dendrogram(d, K);
    const auto coarse = cut_dendrogram(d, K - 1);
    // Every fine cluster sits inside one coarse cluster and exactly one pair joins.
    std::map<int, std::set<int>> inside;
    for (std::size_t i = 0; i < fine.size(); ++i) inside[coarse[i]].insert(fine[i]);
    std::size_t joined = 0;
    for (const auto& [c, f] : inside) {
      EXPECT_LE(f.size(), 2u);
      joined += f.size() == 2 ? 1 : 0;
    }
    EXPECT_EQ(joined, 1u);
    EXPECT_EQ(*std::max_element(coarse.begin(), coarse.end()), static_cast<int>(K) - 2);
  }
}

// ---------------------------------------------------------------------------
// Pseudo-labels

TEST(PseudoLabels, ToyMatchesExhaustiveNearestCenter) {
  EmbeddingSet set(2);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 8; ++i) set.add("p" + std::to_string(i), std::vector<double>{u(rng), u(rng)});
  KMeansModel km{2, {1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0}, {0, 0, 0, 0}, 0.0};
  const std::vector<int> center_labels = {0, 0, 1, 1};
  const auto lab = assign_pseudo_labels(set, km, center_labels);
  ASSERT_EQ(lab.num_clusters, 2u);
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 4; ++c) {
      const double dx = set.row(i)[0] - km.centers[2 * c];
      const double dy = set.row(i)[1] - km.centers[2 * c + 1];
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = c;
      }
    }
    EXPECT_EQ(lab.labels[i], center_labels[best]);
  }
}

TEST(PseudoLabels, PointAtCenterAndSingletonPrototype) {
  EmbeddingSet set(2);
  set.add("a", std::vector<double>{3.0, 4.0});
  set.add("b", std::vector<double>{-1.0, 0.0});
  set.add("c", std::vector<double>{-1.0, 0.1});
  KMeansModel km{2, {3.0, 4.0, -1.0, 0.05}, {0, 0}, 0.0};
  const auto lab = assign_pseudo_labels(set, km, std::vector<int>{1, 0});
  EXPECT_EQ(lab.labels, (std::vector<int>{1, 0, 0}));
  EXPECT_DOUBLE_EQ(lab.prototype(1)[0], 0.6);
  EXPECT_DOUBLE_EQ(lab.prototype(1)[1], 0.8);
}

TEST(PseudoLabels, DimMismatch) {
  EmbeddingSet set(3);
  set.add("a", std::vector<double>{1.0, 0.0, 0.0});
  KMeansModel km{2, {1.0, 0.0}, {0}, 0.0};
  try {
    assign_pseudo_labels(set, km, std::vector<int>{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDimMismatch);
  }
}

TEST(PseudoLabels, InvariantToUtteranceOrder) {
  const auto set = easy_set(6, 7, 5);
  KMeansOptions opt;
  opt.k = 12;
  opt.batch_size = 10;
  opt.seed = 3;
  const auto km = minibatch_kmeans(set, opt);
  const auto centers = ahc_ward(km.centers, km.dim, 6).labels;
  const auto lab = assign_pseudo_labels(set, km, centers);

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
  EmbeddingSet shuffled(set.dim());
  for (auto i : order) shuffled.add(set.id(i), set.row(i));
  const auto lab2 = assign_pseudo_labels(shuffled, km, centers);
  EXPECT_EQ(lab.by_id(), lab2.by_id());
  EXPECT_EQ(lab.prototypes, lab2.prototypes);
}

TEST(PseudoLabels, PermutationMovesPrototypes) {
  const auto set = easy_set(5, 6, 7);
  std::vector<int> labels;
  for (std::size_t i = 0; i < set.size(); ++i) labels.push_back(static_cast<int>(i % 5));
  const auto lab = make_labeling(set, labels, 5);
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  const auto moved = permute_labels(lab, perm);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(lab.labels, moved.labels), 1.0);
  std::set<std::vector<double>> before, after;
  for (std::size_t c = 0; c < 5; ++c) {
    const auto p = lab.prototype(c);
    const auto q = moved.prototype(static_cast<std::size_t>(perm[c]));
    EXPECT_TRUE(std::equal(p.begin(), p.end(), q.begin()));
    before.insert({p.begin(), p.end()});
    after.insert({moved.prototype(c).begin(), moved.prototype(c).end()});
  }
  EXPECT_EQ(before, after);
  const auto m = match_labels(lab.labels, moved.labels);
  EXPECT_DOUBLE_EQ(m.agreement, 1.0);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(m.mapping[static_cast<std::size_t>(perm[c])], static_cast<int>(c));
}

TEST(PseudoLabels, GreedyMatchingPartialAgreement) {
  const std::vector<int> prev = {0, 0, 0, 1, 1, 2};
  const std::vector<int> cur = {1, 1, 0, 0, 0, 0};
  // Pairs by overlap: (1,0)=2, (0,1)=2, then (0,0)=1 and (2,0)=1 are blocked.
  const auto m = match_labels(prev, cur);
  EXPECT_EQ(m.mapping, (std::vector<int>{1, 0}));
  EXPECT_DOUBLE_EQ(m.agreement, 4.0 / 6.0);
}

TEST(PseudoLabels, PrototypeScores) {
  EmbeddingSet set(2);
  set.add("a", std::vector<double>{1.0, 0.0});
  set.add("b", std::vector<double>{0.0, 1.0});
  set.add("c", std::vector<double>{0.0, 1.0});
  const auto lab = make_labeling(set, {0, 1, 1}, 2);
  const auto s = prototype_scores(lab, {{"b", "c"}, {"a", "b"}});
  EXPECT_EQ(s[0].value, 1.0);
  EXPECT_NEAR(s[1].value, 0.0, 1e-15);
  EXPECT_THROW(prototype_scores(lab, {{"a", "zz"}}), Error);
}

TEST(LabelsFile, RoundTrip) {
  const std::vector<std::string> ids = {"u1", "u2", "u3"};
  const std::vector<int> labels = {4, 0, 4};
  std::stringstream ss;
  write_labels(ss, ids, labels);
  EXPECT_EQ(ss.str(), "u1 4\nu2 0\nu3 4\n");
  const auto back = read_labels(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2], (std::pair<std::string, int>{"u3", 4}));
  std::stringstream bad("u1 -3\n");
  EXPECT_THROW(read_labels(bad), Error);
}

// ---------------------------------------------------------------------------
// Sweep and iteration

TEST(Sweep, GridInDefaultSteps) {
  EXPECT_EQ(cluster_count_grid(5000, 10000), (std::vector<std::size_t>{5000, 7500, 10000}));
  EXPECT_EQ(cluster_count_grid(3, 3, 1), (std::vector<std::size_t>{3}));
}

struct SweepFixture : ::testing::Test {
  void SetUp() override {
    set = easy_set(12, 10, 31);
    KMeansOptions opt;
    opt.k = 48;
    opt.batch_size = 30;
    opt.seed = 2;
    km = minibatch_kmeans(set, opt);
    trials = balanced_trials(set, 400, 3);
  }
  EmbeddingSet set{1};
  KMeansModel km;
  TrialList trials;
};

TEST_F(SweepFixture, TrueCountHasLowestEer) {
  const std::vector<std::size_t> ks = {2, 4, 8, 12, 24, 40};
  const auto res = sweep_cluster_count(set, km, ks, trials);
  ASSERT_EQ(res.rows.size(), ks.size());
  double best = 1.0;
  for (const auto& r : res.rows) best = std::min(best, r.eer);
  const auto at12 = std::find_if(res.rows.begin(), res.rows.end(), [](const SweepRow& r) { return r.num_clusters == 12; });
  EXPECT_EQ(at12->eer, best);
  EXPECT_EQ(res.best_num_clusters, 12u);
  for (const auto& r : res.rows) {
    if (r.num_clusters < 12) {
      EXPECT_GT(r.eer, at12->eer) << r.num_clusters;
    }
  }
  std::ostringstream csv;
  write_sweep_csv(csv, res);
  EXPECT_EQ(csv.str().substr(0, 6), "K,EER\n");
}

TEST_F(SweepFixture, SingleCountAndOrderIndependentTies) {
  const std::vector<std::size_t> one = {7};
  const auto res = sweep_cluster_count(set, km, one, trials);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_EQ(res.best_num_clusters, 7u);
  const std::vector<std::size_t> fwd = {12, 24, 40};
  const std::vector<std::size_t> rev = {40, 24, 12};
  EXPECT_EQ(sweep_cluster_count(set, km, fwd, trials).best_num_clusters,
            sweep_cluster_count(set, km, rev, trials).best_num_clusters);
}

IterateOptions small_iterate(std::size_t K) {
  IterateOptions opt;
  opt.num_clusters = K;
  opt.kmeans.k = 4 * K;
  opt.kmeans.batch_size = 50;
  opt.max_iters = 3;
  opt.seed = 17;
  return opt;
}

TEST(Iterate, IdentityIsFixedPoint) {
  const auto set = easy_set(10, 10, 41);
  const auto res = iterate(set, small_iterate(10), identity_refresher());
  ASSERT_EQ(res.iterations.size(), 3u);
  for (std::size_t i = 1; i < res.iterations.size(); ++i) {
    EXPECT_DOUBLE_EQ(res.iterations[i].agreement, 1.0);
    EXPECT_DOUBLE_EQ(adjusted_rand_index(res.iterations[i].labeling.labels, res.iterations[0].labeling.labels), 1.0);
  }
  EXPECT_FALSE(res.converged);
}

TEST(Iterate, LabelsArePermutedBetweenIterations) {
  const auto set = easy_set(10, 10, 41);
  const auto res = iterate(set, small_iterate(10), identity_refresher());
  EXPECT_NE(res.iterations[0].labeling.labels, res.iterations[1].labeling.labels);
}

TEST(Iterate, PullRefresherDoesNotHurtAri) {
  SynthOptions opt;
  opt.num_speakers = 12;
  opt.utts_per_speaker = 10;
  opt.dim = 16;
  opt.concentration = 1.5;
  opt.seed = 8;
  const auto set = synth_dataset(opt);
  const auto truth = truth_of(set);
  const auto res = iterate(set, small_iterate(12), prototype_pull_refresher(0.2));
  double prev = -1.0;
  for (const auto& rec : res.iterations) {
    const double ari = adjusted_rand_index(truth, rec.labeling.labels);
    EXPECT_GE(ari, prev - 1e-12);
    prev = ari;
  }
}

TEST(Iterate, DeterministicAndStopsOnFlatValidation) {
  const auto set = easy_set(8, 10, 5);
  const auto trials = balanced_trials(set, 100, 2);
  auto opt = small_iterate(8);
  opt.max_iters = 7;
  const auto a = iterate(set, opt, identity_refresher(), &trials);
  const auto b = iterate(set, opt, identity_refresher(), &trials);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].labeling.labels, b.iterations[i].labeling.labels);
    EXPECT_EQ(a.iterations[i].labeling.prototypes, b.iterations[i].labeling.prototypes);
  }
  // Identity refresh cannot improve the validation EER, so it stops at 2.
  EXPECT_TRUE(a.converged);
  EXPECT_EQ(a.iterations.size(), 2u);
  EXPECT_TRUE(a.iterations[1].eer.has_value());
}

TEST(Iterate, RefresherMayNotChangeIds) {
  const auto set = easy_set(4, 5, 5);
  EmbeddingRefresher drop = [](const EmbeddingSet& e, const PseudoLabeling&) {
    EmbeddingSet out(e.dim());
    for (std::size_t i = 1; i < e.size(); ++i) out.add(e.id(i), e.row(i));
    return out;
  };
  try {
    iterate(set, small_iterate(4), drop);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIdSetChanged);
  }
}

TEST(Iterate, ReorderedRefresherOutputIsRealigned) {
  const auto set = easy_set(5, 6, 9);
  EmbeddingRefresher reverse = [](const EmbeddingSet& e, const PseudoLabeling&) {
    EmbeddingSet out(e.dim());
    for (std::size_t i = e.size(); i-- > 0;) out.add(e.id(i), e.row(i));
    return out;
  };
  const auto res = iterate(set, small_iterate(5), reverse);
  EXPECT_EQ(res.final_embeddings.ids(), set.ids());
  EXPECT_EQ(res.iterations.back().labeling.ids, set.ids());
}

}  // namespace
}  // namespace svkit
