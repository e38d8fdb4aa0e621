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
#include <vector>

#include "svkit/aam.hpp"
#include "svkit/moco.hpp"

namespace svkit::gradcheck {

// Central finite-difference checks of the analytic loss gradients. Only
// loss values of the perturbed inputs are used, never the analytic path.

inline constexpr double kStep = 1e-6;

/// |a - b| / max(1, |a|, |b|): relative for large entries, absolute near 0.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

inline std::vector<double> random_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  double n = 0.0;
  do {
    for (auto& x : v) x = g(rng);
    n = norm(v);
  } while (n == 0.0);
  for (auto& x : v) x /= n;
  return v;
}

inline std::vector<double> random_unit_rows(std::size_t rows, std::size_t d, std::mt19937_64& rng) {
  std::vector<double> out;
  out.reserve(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = random_unit(d, rng);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

struct Report {
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

template <typename LossFn>
double central_difference(std::vector<double>& params, std::size_t i, LossFn&& loss) {
  const double saved = params[i];
  params[i] = saved + kStep;
  const double up = loss();
  params[i] = saved - kStep;
  const double down = loss();
  params[i] = saved;
  return (up - down) / (2.0 * kStep);
}

inline Report check_aam(std::size_t instances, std::size_t dim, std::size_t num_classes, const AamConfig& cfg,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Report report;
  for (std::size_t n = 0; n < instances; ++n) {
    std::vector<double> x = random_unit(dim, rng);
    std::vector<double> w = random_unit_rows(num_classes * cfg.num_subcenters, dim, rng);
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, num_classes - 1)(rng);
    const AamResult analytic = aam_softmax_loss(x, w, num_classes, target, cfg);
    auto loss = [&] { return detail::aam_softmax_impl(x, w, num_classes, target, cfg).loss; };
    for (std::size_t i = 0; i < x.size(); ++i) {
      report.max_rel_error =
          std::max(report.max_rel_error, relative_error(analytic.grad_embedding[i], central_difference(x, i, loss)));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      report.max_rel_error =
          std::max(report.max_rel_error, relative_error(analytic.grad_weights[i], central_difference(w, i, loss)));
    }
    ++report.instances;
  }
  return report;
}

inline Report check_moco(std::size_t instances, std::size_t dim, std::size_t batch, std::size_t queue_size,
                         double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Report report;
  for (std::size_t n = 0; n < instances; ++n) {
    NegativeQueue queue(queue_size, dim);
    queue.push(random_unit_rows(queue_size, dim, rng));
    ContrastiveBatch b;
    b.n = batch;
    b.dim = dim;
    b.scale = scale;
    b.queries = random_unit_rows(batch, dim, rng);
    b.positives = random_unit_rows(batch, dim, rng);
    const MocoResult analytic = moco_loss(b, queue);
    auto loss = [&] { return detail::moco_impl(b, queue).loss; };
    for (std::size_t i = 0; i < b.queries.size(); ++i) {
      report.max_rel_error = std::max(report.max_rel_error,
                                      relative_error(analytic.grad_queries[i], central_difference(b.queries, i, loss)));
    }
    ++report.instances;
  }
  return report;
}

}  // namespace svkit::gradcheck
