#include "entroprune/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "entroprune/errors.hpp"
#include "entroprune/unicode.hpp"

namespace entroprune {

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Nearest-rank quantile: value at index ceil(p/100 * N) - 1 of the
// ascending list.
double nearest_rank(const std::vector<double> &ascending, int percentile) {
    std::size_t n = ascending.size();
    std::size_t rank = (static_cast<std::size_t>(percentile) * n + 99) / 100;
    return ascending[rank - 1];
}

MetricStats metric_stats(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(values.size());
    MetricStats stats;
    stats.mean = mean;
    stats.median = nearest_rank(values, 50);
    stats.stdev = std::sqrt(var);
    return stats;
}

Histogram make_histogram(const std::vector<double> &values, std::size_t bins) {
    Histogram hist;
    hist.counts.assign(bins, 0);
    auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    hist.lower = *min_it;
    double range = *max_it - *min_it;
    if (range == 0.0) {
        hist.bin_width = 0.0;
        hist.counts[0] = values.size();
        return hist;
    }
    hist.bin_width = range / static_cast<double>(bins);
    for (double v : values) {
        auto bin = static_cast<std::size_t>((v - hist.lower) / hist.bin_width);
        if (bin >= bins) {
            bin = bins - 1; // max value lands in the last bin
        }
        ++hist.counts[bin];
    }
    return hist;
}

} // namespace

ScoreSummary summarize(const std::vector<ScoreRecord> &scores, std::size_t bins) {
    if (scores.empty()) {
        throw ValidationError("cannot summarize an empty score list");
    }
    if (bins < 1) {
        throw ValidationError("bins must be >= 1");
    }
    std::vector<double> h_q, h_f, score;
    h_q.reserve(scores.size());
    h_f.reserve(scores.size());
    score.reserve(scores.size());
    for (const auto &rec : scores) {
        h_q.push_back(rec.h_q);
        h_f.push_back(rec.h_f);
        score.push_back(rec.score);
    }

    ScoreSummary summary;
    summary.count = scores.size();
    summary.h_q = metric_stats(h_q);
    summary.h_f = metric_stats(h_f);
    summary.score = metric_stats(score);
    summary.hist_h_q = make_histogram(h_q, bins);
    summary.hist_h_f = make_histogram(h_f, bins);
    summary.hist_score = make_histogram(score, bins);

    std::vector<double> ascending = score;
    std::sort(ascending.begin(), ascending.end());
    summary.quantiles.emplace_back(1, nearest_rank(ascending, 1));
    for (int p = 5; p <= 95; p += 5) {
        summary.quantiles.emplace_back(p, nearest_rank(ascending, p));
    }
    summary.quantiles.emplace_back(99, nearest_rank(ascending, 99));
    return summary;
}

RarityGapReport rarity_gap_extremes(const std::vector<ScoreRecord> &scores,
                                    const std::vector<Document> &corpus, std::size_t k) {
    if (k < 1) {
        throw ValidationError("k must be >= 1");
    }
    if (k > scores.size()) {
        throw ValidationError("k exceeds the number of score records");
    }
    std::unordered_map<std::string, const Document *> by_id;
    by_id.reserve(corpus.size());
    for (const Document &doc : corpus) {
        by_id.emplace(doc.id, &doc);
    }

    std::vector<const ScoreRecord *> order;
    order.reserve(scores.size());
    for (const auto &rec : scores) {
        order.push_back(&rec);
    }
    auto gap_of = [](const ScoreRecord *r) { return r->h_f - r->h_q; };

    auto make_entry = [&](const ScoreRecord *rec) {
        RarityGapEntry entry;
        entry.id = rec->id;
        entry.h_q = rec->h_q;
        entry.h_f = rec->h_f;
        entry.gap = rec->h_f - rec->h_q;
        auto it = by_id.find(rec->id);
        if (it == by_id.end()) {
            throw ValidationError("score record id " + rec->id + " not in corpus");
        }
        entry.excerpt = utf8_truncate(it->second->text, 400);
        return entry;
    };

    RarityGapReport report;
    std::sort(order.begin(), order.end(), [&](const ScoreRecord *a, const ScoreRecord *b) {
        double ga = gap_of(a), gb = gap_of(b);
        if (ga != gb) {
            return ga > gb;
        }
        return a->id < b->id;
    });
    for (std::size_t i = 0; i < k; ++i) {
        report.top.push_back(make_entry(order[i]));
    }
    std::sort(order.begin(), order.end(), [&](const ScoreRecord *a, const ScoreRecord *b) {
        double ga = gap_of(a), gb = gap_of(b);
        if (ga != gb) {
            return ga < gb;
        }
        return a->id < b->id;
    });
    for (std::size_t i = 0; i < k; ++i) {
        report.bottom.push_back(make_entry(order[i]));
    }
    return report;
}

std::vector<PruningCurveRow> pruning_curve(const std::vector<ScoreRecord> &scores,
                                           const std::vector<double> &etas) {
    if (scores.empty()) {
        throw ValidationError("cannot build a pruning curve from an empty score list");
    }
    for (double eta : etas) {
        if (!(eta >= 0.0 && eta < 100.0)) {
            throw ValidationError("pruning ratio must be in [0,100)");
        }
    }
    std::vector<double> ascending;
    ascending.reserve(scores.size());
    for (const auto &rec : scores) {
        ascending.push_back(rec.score);
    }
    std::sort(ascending.begin(), ascending.end());

    // Suffix sums over the ascending scores give kept-set aggregates in
    // O(1) per eta.
    std::vector<double> suffix_sum(ascending.size() + 1, 0.0);
    for (std::size_t i = ascending.size(); i > 0; --i) {
        suffix_sum[i - 1] = suffix_sum[i] + ascending[i - 1];
    }

    std::vector<PruningCurveRow> rows;
    rows.reserve(etas.size());
    for (double eta : etas) {
        auto pruned = static_cast<std::size_t>(
            std::floor(eta / 100.0 * static_cast<double>(ascending.size())));
        PruningCurveRow row;
        row.eta = eta;
        row.kept_count = ascending.size() - pruned;
        row.min_kept_score = ascending[pruned];
        row.mean_kept_score = suffix_sum[pruned] / static_cast<double>(row.kept_count);
        rows.push_back(row);
    }
    return rows;
}

void save_summary_csv(const ScoreSummary &summary, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write summary: " + path);
    }
    out << "stat,metric,value\n";
    out << "count,all," << summary.count << '\n';
    const std::pair<const char *, const MetricStats *> metrics[] = {
        {"h_q", &summary.h_q}, {"h_f", &summary.h_f}, {"score", &summary.score}};
    for (const auto &[name, stats] : metrics) {
        out << "mean," << name << ',' << fmt9(stats->mean) << '\n';
        out << "median," << name << ',' << fmt9(stats->median) << '\n';
        out << "stdev," << name << ',' << fmt9(stats->stdev) << '\n';
    }
    for (const auto &[p, v] : summary.quantiles) {
        out << "quantile_p" << p << ",score," << fmt9(v) << '\n';
    }
    if (!out) {
        throw IoError("write failure in summary: " + path);
    }
}

void save_histogram_csv(const Histogram &hist, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write histogram: " + path);
    }
    out << "bin_index,lower_edge,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        double edge = hist.lower + static_cast<double>(i) * hist.bin_width;
        out << i << ',' << fmt9(edge) << ',' << hist.counts[i] << '\n';
    }
    if (!out) {
        throw IoError("write failure in histogram: " + path);
    }
}

void save_pruning_curve_csv(const std::vector<PruningCurveRow> &rows, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write pruning curve: " + path);
    }
    out << "eta,kept_count,mean_kept_score,min_kept_score\n";
    for (const auto &row : rows) {
        out << fmt9(row.eta) << ',' << row.kept_count << ',' << fmt9(row.mean_kept_score) << ','
            << fmt9(row.min_kept_score) << '\n';
    }
    if (!out) {
        throw IoError("write failure in pruning curve: " + path);
    }
}

namespace {

std::string csv_quote(const std::string &s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else if (c == '\n' || c == '\r') {
            out += ' ';
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

} // namespace

void save_rarity_gap_csv(const RarityGapReport &report, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write rarity gap report: " + path);
    }
    out << "list,rank,id,gap,h_q,h_f,excerpt\n";
    auto emit = [&](const char *list, const std::vector<RarityGapEntry> &entries) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto &e = entries[i];
            out << list << ',' << i << ',' << csv_quote(e.id) << ',' << fmt9(e.gap) << ','
                << fmt9(e.h_q) << ',' << fmt9(e.h_f) << ',' << csv_quote(e.excerpt) << '\n';
        }
    };
    emit("top", report.top);
    emit("bottom", report.bottom);
    if (!out) {
        throw IoError("write failure in rarity gap report: " + path);
    }
}

} // namespace entroprune
