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

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/error.hpp"

namespace svkit {

enum class TrialLabel { kTarget, kNontarget, kUnknown };

struct Trial {
  std::string enroll;
  std::string test;
  TrialLabel label = TrialLabel::kUnknown;

  bool operator==(const Trial&) const = default;
};

using TrialList = std::vector<Trial>;

struct Score {
  std::string enroll;
  std::string test;
  double value = 0.0;

  bool operator==(const Score&) const = default;
};

/// Aligned one-to-one with the TrialList it was produced from.
using ScoreSet = std::vector<Score>;

// Trial file: `enroll_id test_id [1|0]`, 1 = target.

inline TrialList read_trials(std::istream& in) {
  TrialList trials;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    Trial t;
    if (!(ss >> t.enroll)) continue;
    require(static_cast<bool>(ss >> t.test), Errc::kInvalidArgument,
            "trial line " + std::to_string(lineno) + ": missing test id");
    std::string label;
    if (ss >> label) {
      if (label == "1" || label == "target") {
        t.label = TrialLabel::kTarget;
      } else if (label == "0" || label == "nontarget") {
        t.label = TrialLabel::kNontarget;
      } else {
        throw Error(Errc::kInvalidArgument, "trial line " + std::to_string(lineno) + ": bad label '" + label + "'");
      }
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

inline void write_trials(std::ostream& out, const TrialList& trials) {
  for (const auto& t : trials) {
    out << t.enroll << ' ' << t.test;
    if (t.label == TrialLabel::kTarget) out << " 1";
    if (t.label == TrialLabel::kNontarget) out << " 0";
    out << '\n';
  }
}

// Score file: `enroll_id test_id score`, 9 significant digits.

inline ScoreSet read_scores(std::istream& in) {
  ScoreSet scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    Score s;
    if (!(ss >> s.enroll)) continue;
    std::string value;
    require(static_cast<bool>(ss >> s.test >> value), Errc::kInvalidArgument,
            "score line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      s.value = std::stod(value);
    } catch (const std::exception&) {
      throw Error(Errc::kInvalidArgument, "score line " + std::to_string(lineno) + ": bad score");
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

inline void write_scores(std::ostream& out, const ScoreSet& scores) {
  char buf[32];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof(buf), "%.9g", s.value);
    out << s.enroll << ' ' << s.test << ' ' << buf << '\n';
  }
}

inline TrialList read_trials_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return read_trials(in);
}

inline void write_trials_file(const std::string& path, const TrialList& trials) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  write_trials(out, trials);
}

inline ScoreSet read_scores_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open " + path);
  return read_scores(in);
}

inline void write_scores_file(const std::string& path, const ScoreSet& scores) {
  std::ofstream out(path);
  require(out.good(), Errc::kIo, "cannot open " + path + " for writing");
  write_scores(out, scores);
}

/// Checks that scores and trials enumerate the same (enroll, test) pairs in
/// the same order.
inline void check_aligned(const ScoreSet& scores, const TrialList& trials) {
  require(scores.size() == trials.size(), Errc::kMisalignedTrials,
          std::to_string(scores.size()) + " scores vs " + std::to_string(trials.size()) + " trials");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(scores[i].enroll == trials[i].enroll && scores[i].test == trials[i].test, Errc::kMisalignedTrials,
            "row " + std::to_string(i) + ": " + scores[i].enroll + "/" + scores[i].test + " vs " +
                trials[i].enroll + "/" + trials[i].test);
  }
}

}  // namespace svkit
