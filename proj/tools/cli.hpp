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

#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "svkit/svkit.hpp"

namespace svkit::cli {

using nlohmann::json;

/// Streams and switches shared by every subcommand.
struct Context {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  void log(const std::string& msg) const {
    if (!quiet) err << "[svkit] " << msg << '\n';
  }
};

inline EmbeddingSet load_embeddings(const std::string& path, const std::string& format, const std::string& meta) {
  EmbeddingFormat fmt = EmbeddingFormat::kBinary;
  if (format == "auto") {
    std::ifstream probe(path, std::ios::binary);
    require(probe.good(), Errc::kIo, "cannot open " + path);
    char magic[4] = {};
    probe.read(magic, 4);
    fmt = probe.gcount() == 4 && std::memcmp(magic, "SVEB", 4) == 0 ? EmbeddingFormat::kBinary
                                                                      : EmbeddingFormat::kText;
  } else {
    fmt = parse_embedding_format(format);
  }
  EmbeddingSet set = read_embeddings(path, fmt);
  if (!meta.empty()) load_meta_file(set, meta);
  return set;
}

inline TopN top_n_from(std::size_t n) { return n == 0 ? TopN::all() : TopN::of(n); }

/// Trial list carrying only the (enroll, test) pairs of a score file.
inline TrialList pairs_of(const ScoreSet& scores) {
  TrialList out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back({s.enroll, s.test, TrialLabel::kUnknown});
  return out;
}

/// Integer truth labels from the speaker column of the metadata.
inline std::vector<int> speaker_labels(const EmbeddingSet& set) {
  std::map<std::string, int> index;
  std::vector<int> out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const UttMeta* m = set.meta(set.id(i));
    require(m != nullptr && m->speaker.has_value(), Errc::kMissingLabel, "no speaker for '" + set.id(i) + "'");
    auto [it, inserted] = index.emplace(*m->speaker, static_cast<int>(index.size()));
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<int> read_center_labels(const std::string& path, std::size_t num_centers) {
  const auto rows = read_labels_file(path);
  require(rows.size() == num_centers, Errc::kLengthMismatch,
          path + " has " + std::to_string(rows.size()) + " rows for " + std::to_string(num_centers) + " centers");
  std::vector<int> labels(num_centers, -1);
  for (const auto& [id, label] : rows) {
    std::size_t pos = 0;
    unsigned long c = 0;
    try {
      c = std::stoul(id, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    require(pos == id.size() && c < num_centers && labels[c] < 0, Errc::kInvalidArgument,
            "bad center index '" + id + "' in " + path);
    labels[c] = label;
  }
  return labels;
}

inline std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

/// Builds the option tree and dispatches to one action per subcommand.
class Runner {
 public:
  explicit Runner(Context& ctx) : ctx_(ctx), app_("Speaker-verification back-end toolkit", "svkit") {
    app_.require_subcommand(1);
    app_.fallthrough();
    app_.add_option("--seed", seed_, "Random seed")->capture_default_str();
    app_.add_option("--threads", threads_, "Worker cap, 0 = all cores")->capture_default_str();
    app_.add_flag("-q,--quiet", ctx_.quiet, "Suppress log lines on stderr");
    add_synth();
    add_score();
    add_snorm();
    add_gen_trials();
    add_qmf();
    add_fit_cal();
    add_apply_cal();
    add_fuse();
    add_metrics();
    add_kmeans();
    add_ahc();
    add_assign();
    add_sweep();
    add_iterate();
    add_loss_check();
    add_clr();
  }

  int run(int argc, const char* const* argv) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app_.exit(e, ctx_.out, ctx_.err) == 0 ? 0 : 1;
    }
    set_max_threads(threads_);
    for (auto& [sub, action] : actions_) {
      if (!sub->parsed()) continue;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        json summary = action();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        ctx_.log(sub->get_name() + " done in " + fixed4(dt.count()) + " s");
        summary["command"] = sub->get_name();
        ctx_.out << summary.dump() << std::endl;
        return exit_code_;
      } catch (const std::exception& e) {
        ctx_.err << "svkit " << sub->get_name() << ": " << e.what() << '\n';
        return 2;
      }
    }
    return 1;
  }

 private:
  CLI::App* command(const std::string& name, const std::string& help, std::function<json()> action) {
    CLI::App* sub = app_.add_subcommand(name, help);
    actions_.emplace_back(sub, std::move(action));
    return sub;
  }

  void embeddings_option(CLI::App* sub, std::string& path, std::string& meta, const std::string& flag = "--embeddings") {
    sub->add_option(flag, path, "Embedding file")->required();
    sub->add_option(flag + "-meta", meta, "Metadata CSV for " + flag);
  }

  void add_synth() {
    auto* o = &synth_;
    CLI::App* sub = command("synth", "Generate a labeled synthetic embedding set", [this] {
      SynthOptions opt = synth_.opt;
      opt.seed = seed_;
      const EmbeddingSet set = synth_dataset(opt);
      write_embeddings(set, synth_.out, parse_embedding_format(synth_.format));
      std::ofstream meta(synth_.meta);
      require(meta.good(), Errc::kIo, "cannot open " + synth_.meta + " for writing");
      write_meta_csv(meta, set);
      ctx_.log("wrote " + std::to_string(set.size()) + " embeddings to " + synth_.out);
      return json{{"utterances", set.size()}, {"speakers", opt.num_speakers}, {"dim", opt.dim}};
    });
    sub->add_option("--speakers", o->opt.num_speakers, "Number of speakers")->capture_default_str();
    sub->add_option("--utts", o->opt.utts_per_speaker, "Utterances per speaker")->capture_default_str();
    sub->add_option("--dim", o->opt.dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--concentration", o->opt.concentration, "Speaker-mean weight vs noise")->capture_default_str();
    sub->add_option("--min-duration", o->opt.min_duration_s, "Shortest utterance in seconds")->capture_default_str();
    sub->add_option("--max-duration", o->opt.max_duration_s, "Longest utterance in seconds")->capture_default_str();
    sub->add_option("--out", o->out, "Output embedding file")->required();
    sub->add_option("--meta", o->meta, "Output metadata CSV")->required();
    sub->add_option("--format", o->format, "binary or text")->capture_default_str();
  }

  void add_score() {
    auto* o = &score_;
    CLI::App* sub = command("score", "Cosine-score a trial list", [this] {
      const TrialList trials = read_trials_file(score_.trials);
      const EmbeddingSet enroll = load_embeddings(score_.enroll, format_, "");
      const EmbeddingSet test = score_.test.empty() ? enroll : load_embeddings(score_.test, format_, "");
      const ScoreSet scores = cosine_score(trials, enroll, test);
      write_scores_file(score_.out, scores);
      return json{{"trials", scores.size()}};
    });
    sub->add_option("--trials", o->trials, "Trial file")->required();
    sub->add_option("--enroll", o->enroll, "Enrollment embeddings")->required();
    sub->add_option("--test", o->test, "Test embeddings (default: enrollment file)");
    sub->add_option("--out", o->out, "Output score file")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_snorm() {
    auto* o = &snorm_;
    CLI::App* sub = command("snorm", "Adaptive s-norm against a speaker cohort", [this] {
      const ScoreSet raw = read_scores_file(snorm_.scores);
      const EmbeddingSet enroll = load_embeddings(snorm_.enroll, format_, "");
      const EmbeddingSet test = snorm_.test.empty() ? enroll : load_embeddings(snorm_.test, format_, "");
      const Cohort cohort = build_cohort(load_embeddings(snorm_.cohort, format_, snorm_.cohort_meta));
      ctx_.log("cohort of " + std::to_string(cohort.size()) + " speakers");
      const ScoreSet out = snorm(raw, enroll, test, cohort, top_n_from(snorm_.top_n));
      write_scores_file(snorm_.out, out);
      return json{{"trials", out.size()}, {"cohort", cohort.size()}, {"top_n", snorm_.top_n}};
    });
    sub->add_option("--scores", o->scores, "Raw score file")->required();
    sub->add_option("--enroll", o->enroll, "Enrollment embeddings")->required();
    sub->add_option("--test", o->test, "Test embeddings (default: enrollment file)");
    embeddings_option(sub, o->cohort, o->cohort_meta, "--cohort");
    sub->add_option("--top-n", o->top_n, "Cohort scores kept per side, 0 = all")->capture_default_str();
    sub->add_option("--out", o->out, "Output score file")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_gen_trials() {
    auto* o = &gen_;
    CLI::App* sub = command("gen-trials", "Balanced calibration trials per duration class", [this] {
      const EmbeddingSet set = load_embeddings(gen_.embeddings, format_, gen_.meta);
      const TrialList trials = gen_calibration_trials(set, gen_.per_class, seed_);
      write_trials_file(gen_.out, trials);
      std::size_t targets = 0;
      for (const auto& t : trials) targets += t.label == TrialLabel::kTarget ? 1 : 0;
      return json{{"trials", trials.size()}, {"targets", targets}};
    });
    embeddings_option(sub, o->embeddings, o->meta);
    sub->add_option("--per-class", o->per_class, "Trials per duration class and label")->capture_default_str();
    sub->add_option("--out", o->out, "Output trial file")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_qmf() {
    auto* o = &qmf_;
    CLI::App* sub = command("qmf", "Per-utterance quality measures", [this] {
      const EmbeddingSet set = load_embeddings(qmf_.embeddings, format_, qmf_.meta);
      const Cohort cohort = build_cohort(load_embeddings(qmf_.cohort, format_, qmf_.cohort_meta));
      QmfConfig cfg;
      cfg.duration_mode = parse_duration_mode(qmf_.duration_mode);
      cfg.metric = parse_imposter_metric(qmf_.metric);
      cfg.top_n = top_n_from(qmf_.top_n);
      const QmfCache cache = compute_qmf_cache(set, cohort, cfg);
      write_qmf_cache_file(qmf_.out, cache);
      return json{{"utterances", cache.size()}, {"cohort", cohort.size()}};
    });
    embeddings_option(sub, o->embeddings, o->meta);
    embeddings_option(sub, o->cohort, o->cohort_meta, "--cohort");
    sub->add_option("--top-n", o->top_n, "Imposter scores averaged, 0 = all")->capture_default_str();
    sub->add_option("--duration-mode", o->duration_mode, "log or raw")->capture_default_str();
    sub->add_option("--metric", o->metric, "inner or cosine")->capture_default_str();
    sub->add_option("--out", o->out, "Output QMF cache CSV")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_fit_cal() {
    auto* o = &fit_;
    CLI::App* sub = command("fit-cal", "Fit a logistic-regression calibration model", [this] {
      const TrialList trials = read_trials_file(fit_.trials);
      const ScoreSet scores = read_scores_file(fit_.scores);
      std::vector<QmfVector> qmfs;
      if (!fit_.qmf.empty()) qmfs = trial_qmfs(trials, read_qmf_cache_file(fit_.qmf));
      const FitResult r = fit_calibration(scores, trials, fit_.qmf.empty() ? nullptr : &qmfs, fit_.opt);
      if (!r.converged) ctx_.log("warning: stopped after " + std::to_string(r.iterations) + " iterations");
      save_calibration_model(fit_.out, r.model);
      return json{{"weights", r.model.weights},
                  {"bias", r.model.bias},
                  {"converged", r.converged},
                  {"iterations", r.iterations}};
    });
    sub->add_option("--trials", o->trials, "Labeled calibration trials")->required();
    sub->add_option("--scores", o->scores, "Scores for those trials")->required();
    sub->add_option("--qmf", o->qmf, "QMF cache; enables the quality-aware model");
    sub->add_option("--l2", o->opt.l2, "L2 penalty on the weights")->capture_default_str();
    sub->add_option("--max-iter", o->opt.max_iter, "Newton iteration cap")->capture_default_str();
    sub->add_option("--out", o->out, "Output model JSON")->required();
  }

  void add_apply_cal() {
    auto* o = &apply_;
    CLI::App* sub = command("apply-cal", "Map scores to calibrated LLRs", [this] {
      const CalibrationModel model = load_calibration_model(apply_.model);
      const ScoreSet scores = read_scores_file(apply_.scores);
      std::vector<QmfVector> qmfs;
      if (!apply_.qmf.empty()) qmfs = trial_qmfs(pairs_of(scores), read_qmf_cache_file(apply_.qmf));
      const ScoreSet out = apply_calibration(model, scores, apply_.qmf.empty() ? nullptr : &qmfs);
      write_scores_file(apply_.out, out);
      return json{{"trials", out.size()}, {"arity", model.arity()}};
    });
    sub->add_option("--model", o->model, "Calibration model JSON")->required();
    sub->add_option("--scores", o->scores, "Score file")->required();
    sub->add_option("--qmf", o->qmf, "QMF cache for quality-aware models");
    sub->add_option("--out", o->out, "Output score file")->required();
  }

  void add_fuse() {
    auto* o = &fuse_;
    CLI::App* sub = command("fuse", "Average aligned score files", [this] {
      std::vector<ScoreSet> systems;
      for (const auto& p : fuse_.scores) systems.push_back(read_scores_file(p));
      const ScoreSet out = mean_fuse(systems);
      write_scores_file(fuse_.out, out);
      return json{{"systems", systems.size()}, {"trials", out.size()}};
    });
    sub->add_option("--scores", o->scores, "Score files, repeat or list")->required()->expected(1, -1);
    sub->add_option("--out", o->out, "Output score file")->required();
  }

  void add_metrics() {
    auto* o = &metrics_;
    CLI::App* sub = command("metrics", "EER, MinDCF and optionally ActDCF", [this] {
      const TrialList trials = read_trials_file(metrics_.trials);
      const ScoreSet scores = read_scores_file(metrics_.scores);
      check_aligned(scores, trials);
      const DetectionScores ds = split_scores(scores, trials);
      const auto points = operating_points(ds);
      const double e = eer(points);
      std::string header = "EER(%)";
      std::string values = fixed4(100.0 * e);
      json j{{"eer", e}, {"targets", ds.target.size()}, {"nontargets", ds.nontarget.size()}};
      for (double p : metrics_.p_target) {
        const DcfParams params{p, metrics_.c_miss, metrics_.c_fa};
        std::ostringstream key;
        key << p;
        const double m = min_dcf(points, params);
        header += " MinDCF_" + key.str();
        values += " " + fixed4(m);
        j["min_dcf_" + key.str()] = m;
        if (metrics_.actual) {
          const double a = actual_dcf(ds, params);
          header += " ActDCF_" + key.str();
          values += " " + fixed4(a);
          j["act_dcf_" + key.str()] = a;
        }
      }
      if (!metrics_.det.empty()) {
        std::ofstream det(metrics_.det);
        require(det.good(), Errc::kIo, "cannot open " + metrics_.det + " for writing");
        write_det_csv(det, points);
      }
      ctx_.out << header << '\n' << values << '\n';
      return j;
    });
    sub->add_option("--trials", o->trials, "Labeled trial file")->required();
    sub->add_option("--scores", o->scores, "Score file aligned with the trials")->required();
    sub->add_option("--p-target", o->p_target, "Target priors")->capture_default_str()->expected(1, -1);
    sub->add_option("--c-miss", o->c_miss, "Miss cost")->capture_default_str();
    sub->add_option("--c-fa", o->c_fa, "False-alarm cost")->capture_default_str();
    sub->add_flag("--actual", o->actual, "Also report ActDCF; scores must be LLRs");
    sub->add_option("--det", o->det, "Write DET points as CSV");
  }

  void add_kmeans() {
    auto* o = &kmeans_;
    CLI::App* sub = command("kmeans", "Mini-batch k-means over length-normalized embeddings", [this] {
      const EmbeddingSet set = length_normalize(load_embeddings(kmeans_.embeddings, format_, ""));
      KMeansOptions opt = kmeans_.opt;
      opt.seed = seed_;
      const KMeansModel model = minibatch_kmeans(set, opt);
      write_kmeans_file(kmeans_.out, model);
      return json{{"k", model.centers.size() / model.dim}, {"inertia", model.inertia}};
    });
    sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
    sub->add_option("--k", o->opt.k, "Number of centers")->capture_default_str();
    sub->add_option("--batch-size", o->opt.batch_size, "Mini-batch size")->capture_default_str();
    sub->add_option("--n-batches", o->opt.n_batches, "Batches, 0 = about ten passes")->capture_default_str();
    sub->add_option("--out", o->out, "Output model file")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_ahc() {
    auto* o = &ahc_;
    CLI::App* sub = command("ahc", "Ward clustering of k-means centers", [this] {
      const KMeansModel km = read_kmeans_file(ahc_.kmeans);
      const AhcResult r = ahc_ward(km.centers, km.dim, ahc_.clusters);
      std::vector<std::string> ids;
      for (std::size_t c = 0; c < r.labels.size(); ++c) ids.push_back(std::to_string(c));
      write_labels_file(ahc_.out, ids, r.labels);
      return json{{"centers", r.labels.size()}, {"clusters", ahc_.clusters}};
    });
    sub->add_option("--kmeans", o->kmeans, "K-means model file")->required();
    sub->add_option("--clusters", o->clusters, "Flat clusters after the cut")->capture_default_str();
    sub->add_option("--out", o->out, "Output center labels (center_index label)")->required();
  }

  void add_assign() {
    auto* o = &assign_;
    CLI::App* sub = command("assign", "Pseudo-label utterances via their nearest center", [this] {
      const EmbeddingSet set = length_normalize(load_embeddings(assign_.embeddings, format_, assign_.meta));
      const KMeansModel km = read_kmeans_file(assign_.kmeans);
      const auto center_labels = read_center_labels(assign_.center_labels, km.counts.size());
      const PseudoLabeling lab = assign_pseudo_labels(set, km, center_labels);
      write_labels_file(assign_.out, lab.ids, lab.labels);
      json j{{"utterances", lab.ids.size()}, {"clusters", lab.num_clusters}};
      if (!assign_.meta.empty()) j["ari"] = adjusted_rand_index(speaker_labels(set), lab.labels);
      return j;
    });
    sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
    sub->add_option("--meta", o->meta, "Metadata with speakers; reports ARI");
    sub->add_option("--kmeans", o->kmeans, "K-means model file")->required();
    sub->add_option("--center-labels", o->center_labels, "Output of ahc")->required();
    sub->add_option("--out", o->out, "Output labels file")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_sweep() {
    auto* o = &sweep_;
    CLI::App* sub = command("sweep", "EER of prototype scoring per cluster count", [this] {
      const EmbeddingSet set = length_normalize(load_embeddings(sweep_.embeddings, format_, ""));
      const KMeansModel km = read_kmeans_file(sweep_.kmeans);
      const TrialList trials = read_trials_file(sweep_.trials);
      const auto ks = sweep_.ks.empty() ? cluster_count_grid(sweep_.lo, sweep_.hi, sweep_.step) : sweep_.ks;
      const SweepResult r = sweep_cluster_count(set, km, ks, trials);
      if (!sweep_.out.empty()) {
        std::ofstream csv(sweep_.out);
        require(csv.good(), Errc::kIo, "cannot open " + sweep_.out + " for writing");
        write_sweep_csv(csv, r);
      }
      json rows = json::array();
      for (const auto& row : r.rows) rows.push_back({{"K", row.num_clusters}, {"eer", row.eer}});
      return json{{"rows", rows}, {"best_K", r.best_num_clusters}};
    });
    sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
    sub->add_option("--kmeans", o->kmeans, "K-means model file")->required();
    sub->add_option("--trials", o->trials, "Labeled evaluation trials")->required();
    sub->add_option("--ks", o->ks, "Explicit cluster counts")->expected(1, -1);
    sub->add_option("--k-lo", o->lo, "Grid start")->capture_default_str();
    sub->add_option("--k-hi", o->hi, "Grid end")->capture_default_str();
    sub->add_option("--k-step", o->step, "Grid step")->capture_default_str();
    sub->add_option("--out", o->out, "Output CSV (K,EER)");
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_iterate() {
    auto* o = &iter_;
    CLI::App* sub = command("iterate", "Iterative clustering with a synthetic refresher", [this] {
      const EmbeddingSet set = load_embeddings(iter_.embeddings, format_, iter_.meta);
      IterateOptions opt = iter_.opt;
      opt.seed = seed_;
      opt.permute = !iter_.no_permute;
      EmbeddingRefresher refresh;
      if (iter_.refresher == "identity") {
        refresh = identity_refresher();
      } else if (iter_.refresher == "pull") {
        refresh = prototype_pull_refresher(iter_.pull);
      } else {
        throw Error(Errc::kInvalidArgument, "unknown refresher '" + iter_.refresher + "'");
      }
      TrialList validation;
      if (!iter_.validation.empty()) validation = read_trials_file(iter_.validation);
      const IterateResult r = iterate(set, opt, refresh, iter_.validation.empty() ? nullptr : &validation);
      std::vector<int> truth;
      if (!iter_.meta.empty()) truth = speaker_labels(set);
      json its = json::array();
      for (const auto& rec : r.iterations) {
        json j{{"iteration", rec.iteration}, {"agreement", rec.agreement}, {"inertia", rec.kmeans_inertia}};
        if (rec.eer) j["eer"] = *rec.eer;
        if (!truth.empty()) j["ari"] = adjusted_rand_index(truth, rec.labeling.labels);
        ctx_.log("iteration " + std::to_string(rec.iteration) + " agreement " + fixed4(rec.agreement));
        its.push_back(j);
      }
      const auto& last = r.iterations.back().labeling;
      write_labels_file(iter_.out, last.ids, last.labels);
      return json{{"iterations", its}, {"converged", r.converged}};
    });
    sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
    sub->add_option("--meta", o->meta, "Metadata with speakers; reports ARI");
    sub->add_option("--clusters", o->opt.num_clusters, "Clusters after the cut")->capture_default_str();
    sub->add_option("--k", o->opt.kmeans.k, "K-means centers")->capture_default_str();
    sub->add_option("--batch-size", o->opt.kmeans.batch_size, "Mini-batch size")->capture_default_str();
    sub->add_option("--n-batches", o->opt.kmeans.n_batches, "Batches, 0 = about ten passes")->capture_default_str();
    sub->add_option("--max-iters", o->opt.max_iters, "Iteration cap")->capture_default_str();
    sub->add_option("--min-eer-gain", o->opt.min_eer_gain, "Stop below this EER gain")->capture_default_str();
    sub->add_option("--refresher", o->refresher, "identity or pull")->capture_default_str();
    sub->add_option("--pull", o->pull, "Pull factor toward prototypes")->capture_default_str();
    sub->add_option("--validation", o->validation, "Labeled trials for the stopping rule");
    sub->add_flag("--no-permute", o->no_permute, "Keep cluster ids between iterations");
    sub->add_option("--out", o->out, "Output labels of the last iteration")->required();
    sub->add_option("--format", format_, "auto, binary or text")->capture_default_str();
  }

  void add_loss_check() {
    auto* o = &loss_;
    CLI::App* sub = command("loss-check", "Finite-difference check of the loss gradients", [this] {
      const auto& l = loss_;
      const AamConfig k1{l.margin, l.aam_scale, 1};
      const AamConfig k2{l.margin, l.aam_scale, 2};
      const double a1 = gradcheck::check_aam(l.instances, l.dim, l.classes, k1, seed_).max_rel_error;
      const double a2 = gradcheck::check_aam(l.instances, l.dim, l.classes, k2, seed_ + 1).max_rel_error;
      const double mo = gradcheck::check_moco(l.instances, l.dim, l.batch, l.queue, l.moco_scale, seed_ + 2).max_rel_error;
      ctx_.err << "aam_k1 " << a1 << "\naam_k2 " << a2 << "\nmoco " << mo << '\n';
      const bool ok = a1 < l.tol && a2 < l.tol && mo < l.tol;
      if (!ok) exit_code_ = 2;
      return json{{"aam_k1", a1}, {"aam_k2", a2}, {"moco", mo}, {"instances", l.instances}, {"ok", ok}};
    });
    sub->add_option("--instances", o->instances, "Random instances per loss")->capture_default_str();
    sub->add_option("--dim", o->dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--classes", o->classes, "AAM classes")->capture_default_str();
    sub->add_option("--batch", o->batch, "Contrastive batch size")->capture_default_str();
    sub->add_option("--queue", o->queue, "Negative queue entries")->capture_default_str();
    sub->add_option("--margin", o->margin, "AAM margin")->capture_default_str();
    sub->add_option("--aam-scale", o->aam_scale, "AAM scale")->capture_default_str();
    sub->add_option("--moco-scale", o->moco_scale, "Contrastive scale")->capture_default_str();
    sub->add_option("--tol", o->tol, "Pass threshold")->capture_default_str();
  }

  void add_clr() {
    auto* o = &clr_;
    CLI::App* sub = command("clr", "Evaluate the triangular2 learning-rate schedule", [this] {
      ClrConfig cfg = clr_.phase == "finetune" ? kFineTuneClr : kInitialClr;
      require(clr_.phase == "initial" || clr_.phase == "finetune", Errc::kInvalidArgument,
              "phase must be initial or finetune");
      if (clr_.cycle) cfg.cycle_len = *clr_.cycle;
      if (clr_.lr_min) cfg.lr_min = *clr_.lr_min;
      if (clr_.lr_max) cfg.lr_max = *clr_.lr_max;
      json lr = json::array();
      for (auto t : clr_.t) lr.push_back(clr_triangular2(t, cfg));
      return json{{"t", clr_.t}, {"lr", lr}, {"cycle_len", cfg.cycle_len}};
    });
    sub->add_option("--t", o->t, "Iteration indices")->required()->expected(1, -1);
    sub->add_option("--phase", o->phase, "initial or finetune")->capture_default_str();
    sub->add_option("--cycle", o->cycle, "Override cycle length");
    sub->add_option("--lr-min", o->lr_min, "Override minimum rate");
    sub->add_option("--lr-max", o->lr_max, "Override maximum rate");
  }

  Context& ctx_;
  CLI::App app_;
  std::vector<std::pair<CLI::App*, std::function<json()>>> actions_;
  std::uint64_t seed_ = 0;
  unsigned threads_ = 0;
  int exit_code_ = 0;
  std::string format_ = "auto";

  struct {
    SynthOptions opt;
    std::string out, meta, format = "binary";
  } synth_;
  struct {
    std::string trials, enroll, test, out;
  } score_;
  struct {
    std::string scores, enroll, test, cohort, cohort_meta, out;
    std::size_t top_n = 100;
  } snorm_;
  struct {
    std::string embeddings, meta, out;
    std::size_t per_class = 10000;
  } gen_;
  struct {
    std::string embeddings, meta, cohort, cohort_meta, out;
    std::size_t top_n = 100;
    std::string duration_mode = "log", metric = "inner";
  } qmf_;
  struct {
    std::string trials, scores, qmf, out;
    FitOptions opt;
  } fit_;
  struct {
    std::string model, scores, qmf, out;
  } apply_;
  struct {
    std::vector<std::string> scores;
    std::string out;
  } fuse_;
  struct {
    std::string trials, scores, det;
    std::vector<double> p_target = {0.01, 0.05};
    double c_miss = 1.0, c_fa = 1.0;
    bool actual = false;
  } metrics_;
  struct {
    std::string embeddings, out;
    KMeansOptions opt;
  } kmeans_;
  struct {
    std::string kmeans, out;
    std::size_t clusters = 7500;
  } ahc_;
  struct {
    std::string embeddings, meta, kmeans, center_labels, out;
  } assign_;
  struct {
    std::string embeddings, kmeans, trials, out;
    std::vector<std::size_t> ks;
    std::size_t lo = 5000, hi = 10000, step = 2500;
  } sweep_;
  struct {
    std::string embeddings, meta, refresher = "identity", validation, out;
    IterateOptions opt;
    double pull = 0.2;
    bool no_permute = false;
  } iter_;
  struct {
    std::size_t instances = 100, dim = 8, classes = 5, batch = 4, queue = 16;
    double margin = kInitialAamMargin, aam_scale = 30.0, moco_scale = kMocoScale, tol = 1e-6;
  } loss_;
  struct {
    std::vector<std::uint64_t> t;
    std::string phase = "initial";
    std::optional<std::uint64_t> cycle;
    std::optional<double> lr_min, lr_max;
  } clr_;
};

/// Entry point. 0 on success, 1 on usage errors, 2 on data errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Context ctx{out, err};
  Runner runner(ctx);
  return runner.run(argc, argv);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv = {"svkit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace svkit::cli
