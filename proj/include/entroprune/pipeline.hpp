#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entroprune/probe_model.hpp"
#include "entroprune/pruning.hpp"

namespace entroprune {

// Everything a run needs, loaded from one key = value config file.
// Validated before any artifact is touched.
struct PipelineConfig {
    std::vector<std::string> corpus_paths;
    std::string out_dir;
    std::uint32_t min_count = 2;
    double alpha = 1.0;
    ProbeTrainConfig probe;
    double eta_percent = 30.0;
    UnscorablePolicy unscorable_policy = UnscorablePolicy::prune_first;
    std::string external_scores_path; // empty: use the internal probe
    std::uint64_t shard_size = 100000;
    std::size_t workers = 1;
    std::size_t report_bins = 20;
    std::size_t report_top_k = 20;
    std::vector<double> report_etas = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90};

    void validate() const;

    // Canonical form: fixed key order, so identical settings produce
    // byte-identical snapshots.
    std::string canonical() const;
};

PipelineConfig load_pipeline_config(const std::string &path);

// Artifact names under out_dir.
namespace artifact {
inline constexpr const char *kVocab = "vocab.json";
inline constexpr const char *kFrequency = "freq.json";
inline constexpr const char *kProbeModel = "probe.model";
inline constexpr const char *kTrace = "trace.csv";
inline constexpr const char *kScores = "scores.jsonl";
inline constexpr const char *kUnscorable = "unscorable.txt";
inline constexpr const char *kPruneManifest = "prune_manifest.json";
inline constexpr const char *kPrunedDir = "pruned";
inline constexpr const char *kSummary = "summary.csv";
inline constexpr const char *kHistHq = "histogram_h_q.csv";
inline constexpr const char *kHistHf = "histogram_h_f.csv";
inline constexpr const char *kHistScore = "histogram_score.csv";
inline constexpr const char *kPruningCurve = "pruning_curve.csv";
inline constexpr const char *kRarityGap = "rarity_gap.csv";
inline constexpr const char *kConfigUsed = "config.used";
} // namespace artifact

// Pipeline steps. Each validates the config, snapshots it into the
// output directory, and requires its upstream artifacts to exist
// (erroring with the step to run first otherwise).
void run_build_vocab(const PipelineConfig &config);
void run_count_freq(const PipelineConfig &config);
void run_train_probe(const PipelineConfig &config);
void run_score(const PipelineConfig &config);
void run_prune(const PipelineConfig &config);
void run_report(const PipelineConfig &config);
void run_pipeline(const PipelineConfig &config);

} // namespace entroprune
