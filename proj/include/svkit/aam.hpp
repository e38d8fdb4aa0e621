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
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"

namespace svkit {

inline constexpr double kUnitTolerance = 1e-6;
inline constexpr double kInitialAamMargin = 0.2;
inline constexpr double kFineTuneAamMargin = 0.5;

struct AamConfig {
  double margin = kInitialAamMargin;
  double scale = 30.0;
  std::size_t num_subcenters = 1;

  void validate() const {
    require(margin >= 0.0 && margin < std::numbers::pi / 2, Errc::kInvalidArgument, "AAM margin must lie in [0, pi/2)");
    require(scale > 0.0, Errc::kInvalidArgument, "AAM scale must be > 0");
    require(num_subcenters >= 1, Errc::kInvalidArgument, "need at least one subcenter per class");
  }
};

struct AamResult {
  double loss = 0.0;
  std::vector<double> grad_embedding;  // d
  std::vector<double> grad_weights;    // C x K x d
};

inline void require_unit(std::span<const double> v, const std::string& what) {
  require(std::abs(norm(v) - 1.0) <= kUnitTolerance, Errc::kNonUnitInput, what + " is not unit-norm");
}

namespace detail {

/// Unvalidated core; also evaluated off the unit sphere by the
/// finite-difference checker.
inline AamResult aam_softmax_impl(std::span<const double> x, std::span<const double> weights, std::size_t num_classes,
                                  std::size_t target, const AamConfig& cfg) {
  const std::size_t d = x.size();
  const std::size_t K = cfg.num_subcenters;
  auto w_row = [&](std::size_t j, std::size_t k) { return weights.subspan((j * K + k) * d, d); };

  // Class cosine = max over subcenters, first index on ties.
  std::vector<double> cos_class(num_classes);
  std::vector<std::size_t> best_sub(num_classes, 0);
  for (std::size_t j = 0; j < num_classes; ++j) {
    double best = dot(w_row(j, 0), x);
    for (std::size_t k = 1; k < K; ++k) {
      const double c = dot(w_row(j, k), x);
      if (c > best) {
        best = c;
        best_sub[j] = k;
      }
    }
    cos_class[j] = best;
  }

  // cos(theta + m) = c cos m - sin(theta) sin m, theta = acos(c).
  const double ct = cos_class[target];
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  const double cos_m = std::cos(cfg.margin);
  const double sin_m = std::sin(cfg.margin);
  std::vector<double> logits(num_classes);
  for (std::size_t j = 0; j < num_classes; ++j) logits[j] = cfg.scale * cos_class[j];
  logits[target] = cfg.scale * (ct * cos_m - sin_theta * sin_m);

  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - peak);
  AamResult out;
  out.loss = peak + std::log(denom) - logits[target];

  // dL/dcos_j; the target's margin term contributes d cos(theta+m) / dc.
  std::vector<double> dcos(num_classes);
  for (std::size_t j = 0; j < num_classes; ++j) {
    const double p = std::exp(logits[j] - peak) / denom;
    dcos[j] = (p - (j == target ? 1.0 : 0.0)) * cfg.scale;
  }
  const double dmargin = sin_m == 0.0 ? 1.0 : cos_m + ct * sin_m / std::max(sin_theta, 1e-12);
  dcos[target] *= dmargin;

  out.grad_embedding.assign(d, 0.0);
  out.grad_weights.assign(weights.size(), 0.0);
  for (std::size_t j = 0; j < num_classes; ++j) {
    const auto w = w_row(j, best_sub[j]);
    double* gw = out.grad_weights.data() + (j * K + best_sub[j]) * d;
    for (std::size_t i = 0; i < d; ++i) {
      out.grad_embedding[i] += dcos[j] * w[i];
      gw[i] += dcos[j] * x[i];
    }
  }
  return out;
}

}  // namespace detail

/// Additive angular margin softmax with K subcenters per class. `weights`
/// holds num_classes x K unit rows of dimension d, class-major. The target
/// logit is s cos(theta_t + m), the others s cos(theta_j), where each class
/// cosine is the max over its subcenters. Gradients flow through the argmax
/// subcenter only.
inline AamResult aam_softmax_loss(std::span<const double> embedding, std::span<const double> weights,
                                  std::size_t num_classes, std::size_t target, const AamConfig& cfg) {
  cfg.validate();
  const std::size_t d = embedding.size();
  require(d >= 1, Errc::kDimMismatch, "empty embedding");
  require(num_classes >= 1 && target < num_classes, Errc::kInvalidArgument, "target class out of range");
  require(weights.size() == num_classes * cfg.num_subcenters * d, Errc::kDimMismatch,
          "weights must hold classes x subcenters x dim values");
  require_unit(embedding, "embedding");
  for (std::size_t r = 0; r < num_classes * cfg.num_subcenters; ++r) {
    require_unit(weights.subspan(r * d, d), "weight row " + std::to_string(r));
  }
  return detail::aam_softmax_impl(embedding, weights, num_classes, target, cfg);
}

}  // namespace svkit
