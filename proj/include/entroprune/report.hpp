#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/scoring.hpp"

namespace entroprune {

struct Histogram {
    double lower = 0.0;     // lower edge of bin 0
    double bin_width = 0.0; // 0 when all values coincide
    std::vector<std::uint64_t> counts;
};

struct MetricStats {
    double mean = 0.0;
    double median = 0.0; // nearest-rank
    double stdev = 0.0;  // population
};

struct ScoreSummary {
    std::uint64_t count = 0;
    MetricStats h_q;
    MetricStats h_f;
    MetricStats score;
    // Nearest-rank score quantiles at percentiles {1, 5, 10, ..., 95, 99}.
    std::vector<std::pair<int, double>> quantiles;
    Histogram hist_h_q;
    Histogram hist_h_f;
    Histogram hist_score;
};

ScoreSummary summarize(const std::vector<ScoreRecord> &scores, std::size_t bins);

struct RarityGapEntry {
    std::string id;
    std::string excerpt; // at most 400 codepoints
    double h_q = 0.0;
    double h_f = 0.0;
    double gap = 0.0; // h_f - h_q
};

struct RarityGapReport {
    std::vector<RarityGapEntry> top;    // largest h_f - h_q first
    std::vector<RarityGapEntry> bottom; // smallest h_f - h_q first
};

// Top-k documents whose word rarity dominates the probe NLL, and the
// k whose probe NLL dominates despite common words. Ties break on id.
RarityGapReport rarity_gap_extremes(const std::vector<ScoreRecord> &scores,
                                    const std::vector<Document> &corpus, std::size_t k);

struct PruningCurveRow {
    double eta = 0.0;
    std::uint64_t kept_count = 0;
    double mean_kept_score = 0.0;
    double min_kept_score = 0.0;
};

std::vector<PruningCurveRow> pruning_curve(const std::vector<ScoreRecord> &scores,
                                           const std::vector<double> &etas);

// CSV emitters; every floating-point value is rendered with 9
// significant digits.
void save_summary_csv(const ScoreSummary &summary, const std::string &path);
void save_histogram_csv(const Histogram &hist, const std::string &path);
void save_pruning_curve_csv(const std::vector<PruningCurveRow> &rows, const std::string &path);
void save_rarity_gap_csv(const RarityGapReport &report, const std::string &path);

} // namespace entroprune
