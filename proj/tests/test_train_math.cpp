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

#include <cmath>
#include <deque>
#include <random>

#include "svkit/aam.hpp"
#include "svkit/gradcheck.hpp"
#include "svkit/moco.hpp"
#include "svkit/schedule.hpp"

namespace svkit {
namespace {

/// Plain scaled-softmax cross-entropy over explicit logits.
double softmax_ce(const std::vector<double>& logits, std::size_t target) {
  double m = logits[0];
  for (double l : logits) m = std::max(m, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return m + std::log(z) - logits[target];
}

TEST(Aam, ZeroMarginClosedForm) {
  AamConfig cfg{0.0, 1.0, 1};
  const std::vector<double> x = {1.0, 0.0};
  const std::vector<double> w = {1.0, 0.0, 0.0, 1.0};
  const auto r = aam_softmax_loss(x, w, 2, 0, cfg);
  EXPECT_NEAR(r.loss, std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(r.loss, 0.31326, 1e-5);
}

TEST(Aam, ZeroMarginEqualsScaledSoftmax) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 8, C = 6;
    const auto x = gradcheck::random_unit(d, rng);
    const auto w = gradcheck::random_unit_rows(C, d, rng);
    const std::size_t t = static_cast<std::size_t>(rep) % C;
    AamConfig cfg{0.0, 30.0, 1};
    std::vector<double> logits(C);
    for (std::size_t j = 0; j < C; ++j) {
      logits[j] = 30.0 * dot(x, std::span<const double>(w.data() + j * d, d));
    }
    EXPECT_NEAR(aam_softmax_loss(x, w, C, t, cfg).loss, softmax_ce(logits, t), 1e-12);
  }
}

TEST(Aam, MarginOnTheAngle) {
  // Target at 60 degrees from x: logit s cos(60 deg + m).
  const double th = std::numbers::pi / 3.0;
  const std::vector<double> x = {1.0, 0.0};
  const std::vector<double> w = {std::cos(th), std::sin(th), 0.0, 1.0};
  for (double m : {kInitialAamMargin, kFineTuneAamMargin}) {
    AamConfig cfg{m, 30.0, 1};
    const double expect = softmax_ce({30.0 * std::cos(th + m), 0.0}, 0);
    EXPECT_NEAR(aam_softmax_loss(x, w, 2, 0, cfg).loss, expect, 1e-12);
  }
}

TEST(Aam, DuplicatedSubcentersEqualSingle) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 8, C = 5;
    const auto x = gradcheck::random_unit(d, rng);
    const auto w1 = gradcheck::random_unit_rows(C, d, rng);
    std::vector<double> w2;
    for (std::size_t j = 0; j < C; ++j) {
      for (int k = 0; k < 2; ++k) w2.insert(w2.end(), w1.begin() + j * d, w1.begin() + (j + 1) * d);
    }
    const AamConfig one{0.2, 30.0, 1};
    const AamConfig two{0.2, 30.0, 2};
    const auto a = aam_softmax_loss(x, w1, C, 1, one);
    const auto b = aam_softmax_loss(x, w2, C, 1, two);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.grad_embedding, b.grad_embedding);
    // The first subcenter takes the whole gradient on ties.
    for (std::size_t j = 0; j < C; ++j) {
      for (std::size_t i = 0; i < d; ++i) {
        EXPECT_EQ(b.grad_weights[(2 * j) * d + i], a.grad_weights[j * d + i]);
        EXPECT_EQ(b.grad_weights[(2 * j + 1) * d + i], 0.0);
      }
    }
  }
}

TEST(Aam, GradientsMatchFiniteDifferences) {
  for (std::size_t K : {1u, 2u}) {
    const AamConfig cfg{0.2, 30.0, K};
    const auto rep = gradcheck::check_aam(100, 8, 5, cfg, 10 + K);
    EXPECT_EQ(rep.instances, 100u);
    EXPECT_LT(rep.max_rel_error, 1e-6) << "K=" << K;
  }
  const auto rep = gradcheck::check_aam(30, 8, 5, AamConfig{kFineTuneAamMargin, 30.0, 2}, 3);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(Aam, RejectsBadInput) {
  const std::vector<double> x = {1.0, 0.0};
  const std::vector<double> w = {1.0, 0.0, 0.0, 1.0};
  try {
    aam_softmax_loss(std::vector<double>{1.0, 1.0}, w, 2, 0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNonUnitInput);
  }
  EXPECT_THROW(aam_softmax_loss(x, std::vector<double>{2.0, 0.0, 0.0, 1.0}, 2, 0, {}), Error);
  EXPECT_THROW(aam_softmax_loss(x, w, 2, 2, {}), Error);
  EXPECT_THROW(aam_softmax_loss(x, w, 2, 0, AamConfig{1.6, 30.0, 1}), Error);
  EXPECT_THROW(aam_softmax_loss(x, w, 2, 0, AamConfig{0.2, 30.0, 2}), Error);
}

NegativeQueue queue_of(std::size_t capacity, const std::vector<std::vector<double>>& rows) {
  NegativeQueue q(capacity, rows.front().size());
  for (const auto& r : rows) q.push(r);
  return q;
}

TEST(Moco, ClosedForm) {
  ContrastiveBatch b{1, 2, {1.0, 0.0}, {1.0, 0.0}, 10.0};
  const auto q = queue_of(4, {{0.0, 1.0}});
  const auto r = moco_loss(b, q);
  EXPECT_NEAR(r.loss, std::log1p(std::exp(-10.0)), 1e-10 * r.loss);
  EXPECT_NEAR(r.loss, 4.53989e-5, 1e-10);
}

TEST(Moco, ZeroScaleGivesLogNPlusOne) {
  std::mt19937_64 rng(3);
  for (std::size_t N : {1u, 5u, 37u}) {
    NegativeQueue q(64, 6);
    q.push(gradcheck::random_unit_rows(N, 6, rng));
    ContrastiveBatch b{3, 6, gradcheck::random_unit_rows(3, 6, rng), gradcheck::random_unit_rows(3, 6, rng), 0.0};
    EXPECT_NEAR(moco_loss(b, q).loss, std::log(static_cast<double>(N) + 1.0), 1e-14);
  }
}

TEST(Moco, GradientsMatchFiniteDifferences) {
  const auto rep = gradcheck::check_moco(100, 8, 4, 16, kMocoScale, 5);
  EXPECT_EQ(rep.instances, 100u);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(Moco, RotatingTowardPositiveLowersLoss) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 8;
    NegativeQueue q(16, d);
    q.push(gradcheck::random_unit_rows(16, d, rng));
    ContrastiveBatch b{1, d, gradcheck::random_unit(d, rng), gradcheck::random_unit(d, rng), kMocoScale};
    const double before = moco_loss(b, q).loss;
    // Small rotation of x toward x+ along the great circle.
    std::vector<double> x = b.queries;
    const double c = dot(x, b.positives);
    std::vector<double> tangent(d);
    for (std::size_t i = 0; i < d; ++i) tangent[i] = b.positives[i] - c * x[i];
    const double tn = norm(tangent);
    const double step = 1e-3;
    for (std::size_t i = 0; i < d; ++i) x[i] = std::cos(step) * x[i] + std::sin(step) * tangent[i] / tn;
    b.queries = x;
    const auto r = moco_loss(b, q);
    EXPECT_LT(r.loss, before);
  }
}

TEST(Moco, Errors) {
  ContrastiveBatch b{1, 2, {1.0, 0.0}, {1.0, 0.0}, 10.0};
  NegativeQueue empty(4, 2);
  try {
    moco_loss(b, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyQueue);
  }
  const auto q3 = queue_of(4, {{0.0, 0.0, 1.0}});
  try {
    moco_loss(b, q3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDimMismatch);
  }
  ContrastiveBatch off{1, 2, {2.0, 0.0}, {1.0, 0.0}, 10.0};
  EXPECT_THROW(moco_loss(off, queue_of(4, {{0.0, 1.0}})), Error);
}

TEST(Queue, FifoTrace) {
  const std::vector<double> a = {1, 0}, b = {0, 1}, c = {-1, 0}, d = {0, -1};
  NegativeQueue q(3, 2);
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  std::vector<double> cd = c;
  cd.insert(cd.end(), d.begin(), d.end());
  q = queue_push(q, ab);
  q = queue_push(q, cd);
  ASSERT_EQ(q.size(), 3u);
  std::vector<double> expect = b;
  expect.insert(expect.end(), c.begin(), c.end());
  expect.insert(expect.end(), d.begin(), d.end());
  EXPECT_EQ(q.contents(), expect);
}

TEST(Queue, OversizedPushKeepsLastN) {
  std::mt19937_64 rng(7);
  const auto rows = gradcheck::random_unit_rows(10, 3, rng);
  NegativeQueue q(4, 3);
  q.push(rows);
  EXPECT_EQ(q.contents(), std::vector<double>(rows.end() - 12, rows.end()));
}

TEST(Queue, RandomTraceMatchesDeque) {
  std::mt19937_64 rng(8);
  const std::size_t d = 3, cap = 7;
  NegativeQueue q(cap, d);
  std::deque<std::vector<double>> ref;
  for (int step = 0; step < 300; ++step) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 10)(rng);
    const auto rows = gradcheck::random_unit_rows(n, d, rng);
    q.push(rows);
    for (std::size_t r = 0; r < n; ++r) {
      ref.emplace_back(rows.begin() + r * d, rows.begin() + (r + 1) * d);
      if (ref.size() > cap) ref.pop_front();
    }
    ASSERT_EQ(q.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const auto e = q.entry(i);
      EXPECT_TRUE(std::equal(e.begin(), e.end(), ref[i].begin()));
    }
  }
}

TEST(Queue, RejectsBadRows) {
  NegativeQueue q(4, 2);
  EXPECT_THROW(q.push(std::vector<double>{1.0, 0.0, 1.0}), Error);
  try {
    q.push(std::vector<double>{3.0, 4.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNonUnitInput);
  }
  EXPECT_EQ(kMocoQueueCapacity, 65536u);
}

TEST(Momentum, FixedPointAndArithmetic) {
  const std::vector<double> m = {0.5, -2.0};
  const std::vector<double> e = {3.0, 7.0};
  EXPECT_EQ(momentum_update(m, e, 1.0), m);
  const auto r = momentum_update(std::vector<double>{0.0}, std::vector<double>{1.0}, 0.9);
  EXPECT_NEAR(r[0], 0.1, 1e-15);
  try {
    momentum_update(m, std::vector<double>{1.0}, 0.9);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::kLengthMismatch);
  }
}

TEST(Momentum, ContractsByMomentumPerStep) {
  std::vector<double> theta_m = {1.0, -3.0, 0.25, 10.0};
  const std::vector<double> theta_e = {0.0, 1.0, 0.5, -2.0};
  double gap0 = 0.0;
  for (std::size_t i = 0; i < theta_m.size(); ++i) gap0 += (theta_m[i] - theta_e[i]) * (theta_m[i] - theta_e[i]);
  gap0 = std::sqrt(gap0);
  for (int step = 1; step <= 100; ++step) {
    momentum_update_in_place(theta_m, theta_e, kMocoMomentum);
    double gap = 0.0;
    for (std::size_t i = 0; i < theta_m.size(); ++i) gap += (theta_m[i] - theta_e[i]) * (theta_m[i] - theta_e[i]);
    EXPECT_NEAR(std::sqrt(gap), gap0 * std::pow(kMocoMomentum, step), 1e-12 * gap0);
  }
}

TEST(Clr, DefaultScheduleCheckpoints) {
  EXPECT_NEAR(clr_triangular2(0), 1e-8, 1e-8 * 1e-9);
  EXPECT_NEAR(clr_triangular2(65000), 1e-3, 1e-3 * 1e-9);
  // Second-cycle peak: lr_min + (lr_max - lr_min) / 2.
  const double peak2 = 1e-8 + (1e-3 - 1e-8) / 2.0;
  EXPECT_NEAR(clr_triangular2(195000), peak2, peak2 * 1e-9);
  EXPECT_NEAR(peak2, 5.00005e-4, 1e-15);
  EXPECT_NEAR(clr_triangular2(30000, kFineTuneClr), 1e-5, 1e-5 * 1e-9);
}

TEST(Clr, PeriodicWithHalvingPeaks) {
  const std::uint64_t L = 1000;
  const double lo = 1e-6, hi = 1e-2;
  for (std::uint64_t t = 0; t < 4 * L; t += 37) {
    const double now = clr_triangular2(t, L, lo, hi) - lo;
    const double next = clr_triangular2(t + L, L, lo, hi) - lo;
    EXPECT_NEAR(next, now / 2.0, 1e-15);
  }
  // Triangle: linear up to the midpoint and back down.
  EXPECT_NEAR(clr_triangular2(250, L, lo, hi), lo + 0.5 * (hi - lo), 1e-15);
  EXPECT_NEAR(clr_triangular2(750, L, lo, hi), lo + 0.5 * (hi - lo), 1e-15);
}

TEST(Clr, Validation) {
  EXPECT_THROW(clr_triangular2(0, 1, 0.0, 1.0), Error);
  EXPECT_THROW(clr_triangular2(0, 10, 1.0, 0.5), Error);
}

TEST(Crops, FiveCandidateExample) {
  const std::vector<std::size_t> starts = {0, 100, 200, 350, 300};
  const auto p = min_overlap_crop_pair(starts, kContrastiveCropFrames);
  EXPECT_EQ(p, (CropPair{0, 350, 0}));
  EXPECT_EQ(seconds_to_frames(3.5), kContrastiveCropFrames);
}

TEST(Crops, DegenerateLengthOnlyStartZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(min_overlap_crop_pair(350, 350, kCropCandidates, seed), (CropPair{0, 0, 350}));
  }
  try {
    min_overlap_crop_pair(349, 350, kCropCandidates, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kCropTooLong);
  }
}

TEST(Crops, NoOtherPairOverlapsLess) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t T = std::uniform_int_distribution<std::size_t>(350, 2000)(rng);
    const std::uint64_t seed = rng();
    const auto p = min_overlap_crop_pair(T, 350, kCropCandidates, seed);
    // Reproduce the candidate draw and check every pair.
    std::mt19937_64 draw(seed);
    std::uniform_int_distribution<std::size_t> pick(0, T - 350);
    std::vector<std::size_t> s(kCropCandidates);
    for (auto& x : s) x = pick(draw);
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        const std::size_t gap = s[i] > s[j] ? s[i] - s[j] : s[j] - s[i];
        EXPECT_LE(p.overlap, gap >= 350 ? 0 : 350 - gap);
      }
    }
    EXPECT_LE(p.start_a, p.start_b);
    EXPECT_EQ(p, min_overlap_crop_pair(T, 350, kCropCandidates, seed));
  }
}

TEST(Crops, TiesGoLexicographicallySmallest) {
  // 0/400 and 10/500 both overlap 0; (0, 400) wins.
  const std::vector<std::size_t> starts = {500, 10, 400, 0};
  EXPECT_EQ(min_overlap_crop_pair(starts, 350), (CropPair{0, 400, 0}));
}

}  // namespace
}  // namespace svkit
