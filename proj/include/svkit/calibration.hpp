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
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "svkit/embedding.hpp"
#include "svkit/error.hpp"
#include "svkit/qmf.hpp"
#include "svkit/trials.hpp"

namespace svkit {

// ---------------------------------------------------------------------------
// Calibration trial design

inline constexpr double kShortMinSeconds = 2.0;
inline constexpr double kLongMinSeconds = 6.0;

enum class DurationClass { kShort, kLong };

/// short = [2 s, 6 s), long = [6 s, inf). Utterances under 2 s belong to
/// neither class and are never drawn into calibration trials.
inline std::optional<DurationClass> duration_class(double seconds) {
  if (seconds >= kLongMinSeconds) return DurationClass::kLong;
  if (seconds >= kShortMinSeconds) return DurationClass::kShort;
  return std::nullopt;
}

enum class TrialClass { kShortShort = 0, kShortLong = 1, kLongLong = 2 };

inline constexpr std::array<TrialClass, 3> kTrialClasses = {TrialClass::kShortShort, TrialClass::kShortLong,
                                                            TrialClass::kLongLong};

inline std::string_view trial_class_name(TrialClass c) {
  switch (c) {
    case TrialClass::kShortShort: return "short-short";
    case TrialClass::kShortLong: return "short-long";
    case TrialClass::kLongLong: return "long-long";
  }
  return "?";
}

inline std::optional<TrialClass> trial_class(double seconds_a, double seconds_b) {
  const auto a = duration_class(seconds_a);
  const auto b = duration_class(seconds_b);
  if (!a || !b) return std::nullopt;
  if (*a != *b) return TrialClass::kShortLong;
  return *a == DurationClass::kShort ? TrialClass::kShortShort : TrialClass::kLongLong;
}

namespace detail {

struct CalibrationPool {
  // Set-order indices bucketed by duration class, with speaker ids.
  std::array<std::vector<std::size_t>, 2> bucket;
  std::array<std::map<std::string, std::vector<std::size_t>>, 2> by_speaker;
  std::vector<const std::string*> speaker;
};

inline CalibrationPool make_pool(const EmbeddingSet& set) {
  CalibrationPool pool;
  pool.speaker.assign(set.size(), nullptr);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const UttMeta* m = set.meta(set.id(i));
    require(m != nullptr, Errc::kMissingMeta, set.id(i));
    require(m->speaker.has_value(), Errc::kMissingLabel, set.id(i));
    pool.speaker[i] = &*m->speaker;
    const auto cls = duration_class(m->duration_s);
    if (!cls) continue;
    const auto b = static_cast<std::size_t>(*cls);
    pool.bucket[b].push_back(i);
    pool.by_speaker[b][*m->speaker].push_back(i);
  }
  return pool;
}

inline std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace detail

/// Balanced calibration trials: `per_class` trials for each of the three
/// duration classes, half targets and half non-targets (the odd one, if
/// any, is a non-target). Pairs are unique irrespective of orientation.
///
/// Pairs are drawn by rejection sampling; when that stalls, the remaining
/// candidates of the class are enumerated exhaustively so that
/// InsufficientData is only raised when the class genuinely cannot be filled.
inline TrialList gen_calibration_trials(const EmbeddingSet& set, std::size_t per_class, std::uint64_t seed) {
  require(set.size() < (std::size_t{1} << 32), Errc::kInvalidArgument, "set too large for pair keys");
  TrialList trials;
  if (per_class == 0) return trials;
  const auto pool = detail::make_pool(set);
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> used;

  for (const TrialClass cls : kTrialClasses) {
    const std::size_t side_a = cls == TrialClass::kLongLong ? 1 : 0;
    const std::size_t side_b = cls == TrialClass::kShortShort ? 0 : 1;
    const auto& bucket_a = pool.bucket[side_a];
    const auto& bucket_b = pool.bucket[side_b];
    TrialList class_trials;

    auto emit = [&](std::size_t u, std::size_t v, bool target) {
      used.insert(detail::pair_key(u, v));
      if (std::bernoulli_distribution(0.5)(rng)) std::swap(u, v);
      class_trials.push_back({set.id(u), set.id(v), target ? TrialLabel::kTarget : TrialLabel::kNontarget});
    };

    auto fill = [&](std::size_t need, bool target) {
      if (need == 0) return;
      std::size_t got = 0;
      if (!bucket_a.empty() && !bucket_b.empty()) {
        std::uniform_int_distribution<std::size_t> pick_a(0, bucket_a.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_b(0, bucket_b.size() - 1);
        const std::size_t max_attempts = 20 * need + 1000;
        for (std::size_t attempt = 0; attempt < max_attempts && got < need; ++attempt) {
          const std::size_t u = bucket_a[pick_a(rng)];
          std::size_t v = 0;
          if (target) {
            const auto it = pool.by_speaker[side_b].find(*pool.speaker[u]);
            if (it == pool.by_speaker[side_b].end()) continue;
            v = it->second[std::uniform_int_distribution<std::size_t>(0, it->second.size() - 1)(rng)];
          } else {
            v = bucket_b[pick_b(rng)];
          }
          if (u == v || (*pool.speaker[u] == *pool.speaker[v]) != target) continue;
          if (used.count(detail::pair_key(u, v))) continue;
          emit(u, v, target);
          ++got;
        }
      }
      if (got == need) return;

      std::vector<std::pair<std::size_t, std::size_t>> candidates;
      for (std::size_t ia = 0; ia < bucket_a.size(); ++ia) {
        const std::size_t jb0 = side_a == side_b ? ia + 1 : 0;
        for (std::size_t jb = jb0; jb < bucket_b.size(); ++jb) {
          const std::size_t u = bucket_a[ia];
          const std::size_t v = bucket_b[jb];
          if ((*pool.speaker[u] == *pool.speaker[v]) != target) continue;
          if (used.count(detail::pair_key(u, v))) continue;
          candidates.emplace_back(u, v);
        }
      }
      require(candidates.size() >= need - got, Errc::kInsufficientData,
              std::string(trial_class_name(cls)) + ": need " + std::to_string(need - got) + " more " +
                  (target ? "target" : "non-target") + " trials, only " + std::to_string(candidates.size()) +
                  " available");
      std::shuffle(candidates.begin(), candidates.end(), rng);
      for (std::size_t i = 0; got < need; ++i, ++got) emit(candidates[i].first, candidates[i].second, target);
    };

    fill(per_class / 2, true);
    fill(per_class - per_class / 2, false);
    std::shuffle(class_trials.begin(), class_trials.end(), rng);
    trials.insert(trials.end(), class_trials.begin(), class_trials.end());
  }
  return trials;
}

// ---------------------------------------------------------------------------
// Logistic-regression calibration

inline const std::vector<std::string>& plain_feature_names() {
  static const std::vector<std::string> names = {"score"};
  return names;
}

inline const std::vector<std::string>& quality_feature_names() {
  static const std::vector<std::string> names = {"score", "min_dur_q", "max_dur_q", "min_imp_q", "max_imp_q"};
  return names;
}

/// Affine map from a feature vector to a log-likelihood ratio.
struct CalibrationModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t arity() const { return weights.size(); }

  double apply(std::span<const double> features) const {
    require(features.size() == weights.size(), Errc::kArityMismatch,
            "model expects " + std::to_string(weights.size()) + " features, got " + std::to_string(features.size()));
    double out = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) out += weights[i] * features[i];
    return out;
  }

  bool operator==(const CalibrationModel&) const = default;
};

struct FitOptions {
  double l2 = 1e-6;
  std::size_t max_iter = 100;
  double grad_tol = 1e-9;
};

struct FitResult {
  CalibrationModel model;
  bool converged = false;
  std::size_t iterations = 0;
  double grad_inf_norm = 0.0;
  /// Objective at the starting point and after every accepted step.
  std::vector<double> loss_history;
};

namespace detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct LogregProblem {
  Eigen::MatrixXd x;   // n x (p + 1), last column is the bias input
  Eigen::VectorXd y;   // +1 target, -1 non-target
  double l2 = 0.0;

  double loss(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = x * theta;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) acc += softplus(-y[i] * z[i]);
    const auto p = theta.size() - 1;
    return acc / static_cast<double>(z.size()) + 0.5 * l2 * theta.head(p).squaredNorm();
  }

  void gradient_hessian(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const Eigen::VectorXd z = x * theta;
    const auto n = static_cast<double>(z.size());
    Eigen::VectorXd r(z.size());
    Eigen::VectorXd w(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s = sigmoid(z[i]);
      r[i] = s - (y[i] > 0 ? 1.0 : 0.0);
      w[i] = s * (1.0 - s);
    }
    const auto p = theta.size() - 1;
    grad = x.transpose() * r / n;
    grad.head(p) += l2 * theta.head(p);
    hess = x.transpose() * w.asDiagonal() * x / n;
    hess.topLeftCorner(p, p).diagonal().array() += l2;
  }
};

}  // namespace detail

/// Minimizes mean binary cross-entropy + l2 * |w|^2 / 2 (bias unpenalized)
/// with damped Newton steps and an Armijo backtracking line search, so the
/// objective never increases between iterations. Non-convergence is
/// reported through FitResult::converged rather than thrown.
inline FitResult fit_logreg(const std::vector<std::vector<double>>& features, const std::vector<bool>& is_target,
                            const FitOptions& opt = {}, std::vector<std::string> feature_names = {}) {
  require(features.size() == is_target.size(), Errc::kLengthMismatch, "features and labels differ in length");
  require(!features.empty(), Errc::kOneClassOnly, "no training trials");
  require(opt.l2 >= 0.0, Errc::kInvalidArgument, "l2 must be >= 0");
  const auto n_tgt = static_cast<std::size_t>(std::count(is_target.begin(), is_target.end(), true));
  require(n_tgt >= 1 && n_tgt < is_target.size(), Errc::kOneClassOnly, "need both target and non-target trials");
  const std::size_t p = features.front().size();
  require(p >= 1, Errc::kArityMismatch, "need at least one feature");
  if (feature_names.empty()) {
    feature_names = p == 1 ? plain_feature_names()
                           : (p == quality_feature_names().size() ? quality_feature_names() : feature_names);
    for (std::size_t i = feature_names.size(); i < p; ++i) feature_names.push_back("f" + std::to_string(i));
  }
  require(feature_names.size() == p, Errc::kArityMismatch, "feature name count differs from feature arity");

  detail::LogregProblem prob;
  prob.l2 = opt.l2;
  prob.x.resize(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(p + 1));
  prob.y.resize(static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(features[i].size() == p, Errc::kArityMismatch, "ragged feature rows");
    for (std::size_t j = 0; j < p; ++j) prob.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
    prob.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = 1.0;
    prob.y[static_cast<Eigen::Index>(i)] = is_target[i] ? 1.0 : -1.0;
  }

  FitResult result;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1));
  double loss = prob.loss(theta);
  result.loss_history.push_back(loss);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (;;) {
    prob.gradient_hessian(theta, grad, hess);
    result.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.grad_inf_norm < opt.grad_tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= opt.max_iter) break;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.info() == Eigen::Success ? Eigen::VectorXd(-ldlt.solve(grad)) : Eigen::VectorXd(-grad);
    double slope = grad.dot(step);
    if (!step.allFinite() || slope >= 0.0) {
      step = -grad;
      slope = -grad.squaredNorm();
    }
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Eigen::VectorXd candidate = theta + t * step;
      const double cand_loss = prob.loss(candidate);
      if (cand_loss <= loss + 1e-4 * t * slope) {
        theta = candidate;
        loss = cand_loss;
        accepted = true;
        break;
      }
    }
    ++result.iterations;
    if (!accepted) break;  // stalled at machine precision
    result.loss_history.push_back(loss);
  }

  result.model.feature_names = std::move(feature_names);
  result.model.weights.assign(theta.data(), theta.data() + p);
  result.model.bias = theta[static_cast<Eigen::Index>(p)];
  return result;
}

/// Feature rows for calibration: [score] or, with QMFs,
/// [score, min_dur_q, max_dur_q, min_imp_q, max_imp_q].
inline std::vector<std::vector<double>> calibration_features(const ScoreSet& scores,
                                                             const std::vector<QmfVector>* qmfs = nullptr) {
  if (qmfs != nullptr) {
    require(qmfs->size() == scores.size(), Errc::kMisalignedTrials, "QMF rows differ from score rows");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (qmfs == nullptr) {
      rows.push_back({scores[i].value});
    } else {
      const auto& q = (*qmfs)[i];
      rows.push_back({scores[i].value, q.min_dur_q, q.max_dur_q, q.min_imp_q, q.max_imp_q});
    }
  }
  return rows;
}

inline std::vector<bool> target_mask(const TrialList& trials) {
  std::vector<bool> mask;
  mask.reserve(trials.size());
  for (const auto& t : trials) {
    require(t.label != TrialLabel::kUnknown, Errc::kInvalidArgument,
            "calibration trial " + t.enroll + "/" + t.test + " has no label");
    mask.push_back(t.label == TrialLabel::kTarget);
  }
  return mask;
}

inline FitResult fit_calibration(const ScoreSet& scores, const TrialList& trials,
                                 const std::vector<QmfVector>* qmfs = nullptr, const FitOptions& opt = {}) {
  check_aligned(scores, trials);
  return fit_logreg(calibration_features(scores, qmfs), target_mask(trials), opt,
                    qmfs == nullptr ? plain_feature_names() : quality_feature_names());
}

/// Maps scores to the LLR scale: bias + w . features per trial.
inline ScoreSet apply_calibration(const CalibrationModel& model, const ScoreSet& scores,
                                  const std::vector<QmfVector>* qmfs = nullptr) {
  const std::size_t arity = qmfs == nullptr ? 1 : quality_feature_names().size();
  require(model.arity() == arity, Errc::kArityMismatch,
          "model has " + std::to_string(model.arity()) + " weights, inputs provide " + std::to_string(arity));
  const auto rows = calibration_features(scores, qmfs);
  ScoreSet out = scores;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].value = model.apply(rows[i]);
  return out;
}

// Model file: JSON {version, feature_names[], weights[], bias}.

inline constexpr int kCalibrationModelVersion = 1;

inline nlohmann::json to_json(const CalibrationModel& model) {
  return nlohmann::json{{"version", kCalibrationModelVersion},
                        {"feature_names", model.feature_names},
                        {"weights", model.weights},
                        {"bias", model.bias}};
}

inline CalibrationModel calibration_model_from_json(const nlohmann::json& j) {
  try {
    require(j.at("version").get<int>() == kCalibrationModelVersion, Errc::kBadMagic, "unsupported model version");
    CalibrationModel model;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    require(model.feature_names.size() == model.weights.size(), Errc::kArityMismatch,
            "feature_names and weights differ in length");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("malformed calibration model: ") + e.what());
  }
}

inline void save_calibration_model(const std::string& path, const CalibrationModel& model) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  out << to_json(model).dump(2) << '\n';
}

inline CalibrationModel load_calibration_model(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("malformed calibration model: ") + e.what());
  }
  return calibration_model_from_json(j);
}

}  // namespace svkit
