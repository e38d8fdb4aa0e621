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
#include <span>
#include <string>
#include <vector>

#include "svkit/aam.hpp"
#include "svkit/embedding.hpp"
#include "svkit/error.hpp"

namespace svkit {

inline constexpr std::size_t kMocoQueueCapacity = 65536;
inline constexpr double kMocoMomentum = 0.999;
inline constexpr double kMocoScale = 10.0;

/// FIFO of momentum-encoder embeddings with oldest-first eviction.
/// Stored as a ring buffer; entry(0) is the oldest.
class NegativeQueue {
 public:
  NegativeQueue(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim), data_(capacity * dim) {
    require(capacity >= 1, Errc::kInvalidArgument, "queue capacity must be >= 1");
    require(dim >= 1, Errc::kDimMismatch, "queue dimension must be >= 1");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  std::span<const double> entry(std::size_t i) const {
    return {data_.data() + ((head_ + i) % capacity_) * dim_, dim_};
  }

  /// Appends rows (n x dim, row-major) in order, evicting the oldest
  /// entries whenever capacity is exceeded.
  void push(std::span<const double> rows) {
    require(rows.size() % dim_ == 0, Errc::kDimMismatch, "batch is not a whole number of rows");
    const std::size_t n = rows.size() / dim_;
    for (std::size_t r = 0; r < n; ++r) require_unit(rows.subspan(r * dim_, dim_), "queued embedding");
    // Only the last `capacity` rows can survive.
    const std::size_t skip = n > capacity_ ? n - capacity_ : 0;
    for (std::size_t r = skip; r < n; ++r) {
      std::size_t slot;
      if (size_ < capacity_) {
        slot = (head_ + size_) % capacity_;
        ++size_;
      } else {
        slot = head_;
        head_ = (head_ + 1) % capacity_;
      }
      std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(r * dim_), dim_,
                  data_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
    }
  }

  /// Contents oldest-first, row-major.
  std::vector<double> contents() const {
    std::vector<double> out;
    out.reserve(size_ * dim_);
    for (std::size_t i = 0; i < size_; ++i) {
      const auto e = entry(i);
      out.insert(out.end(), e.begin(), e.end());
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<double> data_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

inline NegativeQueue queue_push(NegativeQueue queue, std::span<const double> rows) {
  queue.push(rows);
  return queue;
}

/// Queries x_i from the trained encoder with their positives x+_i from the
/// momentum encoder, both n x d row-major and unit-norm.
struct ContrastiveBatch {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> queries;
  std::vector<double> positives;
  double scale = kMocoScale;

  std::span<const double> query(std::size_t i) const { return {queries.data() + i * dim, dim}; }
  std::span<const double> positive(std::size_t i) const { return {positives.data() + i * dim, dim}; }
};

struct MocoResult {
  double loss = 0.0;
  std::vector<double> grad_queries;  // n x d
};

namespace detail {

inline MocoResult moco_impl(const ContrastiveBatch& b, const NegativeQueue& queue) {
  const std::size_t N = queue.size();
  MocoResult out;
  out.grad_queries.assign(b.n * b.dim, 0.0);
  std::vector<double> logits(N + 1);
  const double inv_n = 1.0 / static_cast<double>(b.n);
  for (std::size_t i = 0; i < b.n; ++i) {
    const auto x = b.query(i);
    logits[0] = b.scale * dot(x, b.positive(i));
    for (std::size_t j = 0; j < N; ++j) logits[j + 1] = b.scale * dot(x, queue.entry(j));
    const double peak = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - peak);
    out.loss += (peak + std::log(denom) - logits[0]) * inv_n;

    double* g = out.grad_queries.data() + i * b.dim;
    const double coef_pos = (std::exp(logits[0] - peak) / denom - 1.0) * b.scale * inv_n;
    const auto xp = b.positive(i);
    for (std::size_t d = 0; d < b.dim; ++d) g[d] += coef_pos * xp[d];
    for (std::size_t j = 0; j < N; ++j) {
      const double coef = std::exp(logits[j + 1] - peak) / denom * b.scale * inv_n;
      const auto q = queue.entry(j);
      for (std::size_t d = 0; d < b.dim; ++d) g[d] += coef * q[d];
    }
  }
  return out;
}

}  // namespace detail

/// Contrastive loss over a batch against the negative queue:
///   L = -(1/n) sum_i log( e^{s x_i.x+_i} / (e^{s x_i.x+_i} + sum_j e^{s x_i.q_j}) )
/// Gradients are taken with respect to the queries only; positives and
/// queue entries come from the momentum encoder.
inline MocoResult moco_loss(const ContrastiveBatch& batch, const NegativeQueue& queue) {
  require(!queue.empty(), Errc::kEmptyQueue, "negative queue is empty");
  require(batch.n >= 1, Errc::kInvalidArgument, "batch must hold at least one query");
  require(batch.dim == queue.dim(), Errc::kDimMismatch, "batch and queue dimensions differ");
  require(batch.queries.size() == batch.n * batch.dim && batch.positives.size() == batch.n * batch.dim,
          Errc::kDimMismatch, "batch buffers must be n x dim");
  require(batch.scale >= 0.0, Errc::kInvalidArgument, "scale must be >= 0");
  for (std::size_t i = 0; i < batch.n; ++i) {
    require_unit(batch.query(i), "query " + std::to_string(i));
    require_unit(batch.positive(i), "positive " + std::to_string(i));
  }
  return detail::moco_impl(batch, queue);
}

/// theta_m <- m theta_m + (1 - m) theta_e, elementwise.
inline void momentum_update_in_place(std::span<double> theta_m, std::span<const double> theta_e, double momentum) {
  require(theta_m.size() == theta_e.size(), Errc::kLengthMismatch, "parameter vectors differ in length");
  require(momentum >= 0.0 && momentum <= 1.0, Errc::kInvalidArgument, "momentum must lie in [0, 1]");
  for (std::size_t i = 0; i < theta_m.size(); ++i) theta_m[i] = momentum * theta_m[i] + (1.0 - momentum) * theta_e[i];
}

inline std::vector<double> momentum_update(std::span<const double> theta_m, std::span<const double> theta_e,
                                           double momentum) {
  std::vector<double> out(theta_m.begin(), theta_m.end());
  momentum_update_in_place(out, theta_e, momentum);
  return out;
}

}  // namespace svkit
