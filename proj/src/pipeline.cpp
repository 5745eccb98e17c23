#include "entroprune/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "entroprune/errors.hpp"
#include "entroprune/frequency.hpp"
#include "entroprune/report.hpp"
#include "entroprune/sha256.hpp"
#include "entroprune/scoring.hpp"

namespace entroprune {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string &s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string &value) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        std::string item =
            trim(comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start));
        if (!item.empty()) {
            items.push_back(std::move(item));
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return items;
}

double parse_double(const std::string &value, const std::string &key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception &) {
        throw ValidationError("config field " + key + ": not a number: \"" + value + "\"");
    }
}

std::uint64_t parse_u64(const std::string &value, const std::string &key) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size() || value.front() == '-') {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception &) {
        throw ValidationError("config field " + key + ": not a nonnegative integer: \"" + value +
                              "\"");
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fs::path out_path(const PipelineConfig &config, const char *name) {
    return fs::path(config.out_dir) / name;
}

// Validates, creates out_dir and snapshots the effective config. Every
// step starts here.
void prepare_output(const PipelineConfig &config) {
    config.validate();
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory: " + config.out_dir);
    }
    std::string snapshot = config.canonical();
    fs::path path = out_path(config, artifact::kConfigUsed);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write config snapshot: " + path.string());
    }
    out << snapshot;
    if (!out) {
        throw IoError("write failure in config snapshot: " + path.string());
    }
}

void require_artifact(const PipelineConfig &config, const char *name, const char *producer) {
    if (!fs::exists(out_path(config, name))) {
        throw ValidationError(std::string("missing ") + name + " in " + config.out_dir +
                              "; run `" + producer + "` first");
    }
}

std::vector<Document> read_configured_corpus(const PipelineConfig &config) {
    return read_corpus(config.corpus_paths);
}

} // namespace

void PipelineConfig::validate() const {
    if (corpus_paths.empty()) {
        throw ValidationError("config field corpus: at least one corpus path is required");
    }
    if (out_dir.empty()) {
        throw ValidationError("config field out_dir: required");
    }
    if (min_count < 1) {
        throw ValidationError("config field min_count: must be >= 1");
    }
    if (!(alpha > 0.0)) {
        throw ValidationError("config field alpha: must be > 0");
    }
    try {
        probe.validate();
    } catch (const ValidationError &e) {
        throw ValidationError(std::string("config field ") + e.what());
    }
    if (!(eta_percent >= 0.0 && eta_percent < 100.0)) {
        throw ValidationError("config field eta_percent: pruning ratio must be in [0,100)");
    }
    if (shard_size < 1) {
        throw ValidationError("config field shard_size: must be >= 1");
    }
    if (workers < 1) {
        throw ValidationError("config field workers: must be >= 1");
    }
    if (report_bins < 1) {
        throw ValidationError("config field report_bins: must be >= 1");
    }
    if (report_top_k < 1) {
        throw ValidationError("config field report_top_k: must be >= 1");
    }
    for (double eta : report_etas) {
        if (!(eta >= 0.0 && eta < 100.0)) {
            throw ValidationError("config field report_etas: pruning ratio must be in [0,100)");
        }
    }
}

std::string PipelineConfig::canonical() const {
    std::string out;
    out += "corpus = ";
    for (std::size_t i = 0; i < corpus_paths.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += corpus_paths[i];
    }
    out += '\n';
    out += "out_dir = " + out_dir + '\n';
    out += "min_count = " + std::to_string(min_count) + '\n';
    out += "alpha = " + fmt_double(alpha) + '\n';
    out += "order = " + std::to_string(probe.order) + '\n';
    out += "discount = " + fmt_double(probe.discount) + '\n';
    out += "chunk_docs = " + std::to_string(probe.chunk_docs) + '\n';
    out += "epsilon = " + fmt_double(probe.epsilon) + '\n';
    out += "patience = " + std::to_string(probe.patience) + '\n';
    out += "budget_fraction = " + fmt_double(probe.budget_fraction) + '\n';
    out += "dev_fraction = " + fmt_double(probe.dev_fraction) + '\n';
    out += "seed = " + std::to_string(probe.seed) + '\n';
    out += "eta_percent = " + fmt_double(eta_percent) + '\n';
    out += std::string("unscorable_policy = ") + to_string(unscorable_policy) + '\n';
    out += "external_scores = " + external_scores_path + '\n';
    out += "shard_size = " + std::to_string(shard_size) + '\n';
    out += "workers = " + std::to_string(workers) + '\n';
    out += "report_bins = " + std::to_string(report_bins) + '\n';
    out += "report_top_k = " + std::to_string(report_top_k) + '\n';
    out += "report_etas = ";
    for (std::size_t i = 0; i < report_etas.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += fmt_double(report_etas[i]);
    }
    out += '\n';
    return out;
}

PipelineConfig load_pipeline_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    PipelineConfig config;
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_number) +
                                  ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "corpus") {
            config.corpus_paths = split_list(value);
        } else if (key == "out_dir") {
            config.out_dir = value;
        } else if (key == "min_count") {
            config.min_count = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "alpha") {
            config.alpha = parse_double(value, key);
        } else if (key == "order") {
            config.probe.order = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "discount") {
            config.probe.discount = parse_double(value, key);
        } else if (key == "chunk_docs") {
            config.probe.chunk_docs = parse_u64(value, key);
        } else if (key == "epsilon") {
            config.probe.epsilon = parse_double(value, key);
        } else if (key == "patience") {
            config.probe.patience = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "budget_fraction") {
            config.probe.budget_fraction = parse_double(value, key);
        } else if (key == "dev_fraction") {
            config.probe.dev_fraction = parse_double(value, key);
        } else if (key == "seed") {
            config.probe.seed = parse_u64(value, key);
        } else if (key == "eta_percent") {
            config.eta_percent = parse_double(value, key);
        } else if (key == "unscorable_policy") {
            config.unscorable_policy = unscorable_policy_from_string(value);
        } else if (key == "external_scores") {
            config.external_scores_path = value;
        } else if (key == "shard_size") {
            config.shard_size = parse_u64(value, key);
        } else if (key == "workers") {
            config.workers = static_cast<std::size_t>(parse_u64(value, key));
        } else if (key == "report_bins") {
            config.report_bins = static_cast<std::size_t>(parse_u64(value, key));
        } else if (key == "report_top_k") {
            config.report_top_k = static_cast<std::size_t>(parse_u64(value, key));
        } else if (key == "report_etas") {
            config.report_etas.clear();
            for (const auto &item : split_list(value)) {
                config.report_etas.push_back(parse_double(item, key));
            }
        } else {
            throw ValidationError("config line " + std::to_string(line_number) +
                                  ": unknown key \"" + key + "\"");
        }
    }
    if (in.bad()) {
        throw IoError("read failure in config file: " + path);
    }
    return config;
}

void run_build_vocab(const PipelineConfig &config) {
    prepare_output(config);
    std::vector<Document> corpus = read_configured_corpus(config);
    Vocab vocab = build_vocab(corpus, config.min_count);
    vocab.save(out_path(config, artifact::kVocab).string());
    std::cerr << "build-vocab: " << vocab.size() << " tokens (min_count " << config.min_count
              << ") from " << corpus.size() << " documents\n";
}

void run_count_freq(const PipelineConfig &config) {
    prepare_output(config);
    require_artifact(config, artifact::kVocab, "build-vocab");
    Vocab vocab = Vocab::load(out_path(config, artifact::kVocab).string());
    std::vector<Document> corpus = read_configured_corpus(config);
    FrequencyTable table = count_frequencies(corpus, vocab, config.alpha, config.workers);
    table.save(out_path(config, artifact::kFrequency).string());
    std::cerr << "count-freq: " << table.total() << " tokens over " << table.vocab_size()
              << " ids\n";
}

void run_train_probe(const PipelineConfig &config) {
    prepare_output(config);
    require_artifact(config, artifact::kVocab, "build-vocab");
    Vocab vocab = Vocab::load(out_path(config, artifact::kVocab).string());
    std::vector<Document> corpus = read_configured_corpus(config);
    auto [model, trace] = train_probe(corpus, vocab, config.probe);
    model.save(out_path(config, artifact::kProbeModel).string());
    save_trace_csv(trace, out_path(config, artifact::kTrace).string());
    std::cerr << "train-probe: " << to_string(trace.stop_reason) << " after "
              << trace.chunk_losses.size() << " chunks, " << trace.tokens_consumed << " tokens\n";
}

void run_score(const PipelineConfig &config) {
    prepare_output(config);
    require_artifact(config, artifact::kVocab, "build-vocab");
    require_artifact(config, artifact::kFrequency, "count-freq");
    Vocab vocab = Vocab::load(out_path(config, artifact::kVocab).string());
    FrequencyTable table = FrequencyTable::load(out_path(config, artifact::kFrequency).string());
    std::vector<Document> corpus = read_configured_corpus(config);

    CorpusScores scores;
    if (!config.external_scores_path.empty()) {
        auto external = import_external_scores(config.external_scores_path, corpus);
        scores = score_corpus(corpus, external, table, vocab, config.workers);
    } else {
        require_artifact(config, artifact::kProbeModel, "train-probe");
        ProbeModel model = ProbeModel::load(out_path(config, artifact::kProbeModel).string());
        scores = score_corpus(corpus, model, table, vocab, config.workers);
    }
    save_scores_jsonl(scores.records, out_path(config, artifact::kScores).string());
    save_id_lines(scores.unscorable_ids, out_path(config, artifact::kUnscorable).string());
    std::cerr << "score: " << scores.records.size() << " scored, " << scores.unscorable_ids.size()
              << " unscorable\n";
}

void run_prune(const PipelineConfig &config) {
    prepare_output(config);
    require_artifact(config, artifact::kScores, "score");
    std::string scores_path = out_path(config, artifact::kScores).string();
    std::vector<ScoreRecord> records = load_scores_jsonl(scores_path);
    std::vector<std::string> unscorable;
    if (fs::exists(out_path(config, artifact::kUnscorable))) {
        unscorable = load_id_lines(out_path(config, artifact::kUnscorable).string());
    }
    PruneManifest manifest = rank_and_prune(records, unscorable, config.eta_percent,
                                            config.unscorable_policy, Sha256::of_file(scores_path));
    save_prune_manifest(manifest, out_path(config, artifact::kPruneManifest).string());
    std::vector<Document> corpus = read_configured_corpus(config);
    CorpusManifest out_manifest = apply_manifest(corpus, manifest,
                                                 out_path(config, artifact::kPrunedDir).string(),
                                                 config.shard_size);
    std::cerr << "prune: eta " << config.eta_percent << "% pruned " << manifest.pruned_count
              << "/" << manifest.total_documents << ", wrote " << out_manifest.document_count
              << " documents\n";
}

void run_report(const PipelineConfig &config) {
    prepare_output(config);
    require_artifact(config, artifact::kScores, "score");
    std::vector<ScoreRecord> records =
        load_scores_jsonl(out_path(config, artifact::kScores).string());
    ScoreSummary summary = summarize(records, config.report_bins);
    save_summary_csv(summary, out_path(config, artifact::kSummary).string());
    save_histogram_csv(summary.hist_h_q, out_path(config, artifact::kHistHq).string());
    save_histogram_csv(summary.hist_h_f, out_path(config, artifact::kHistHf).string());
    save_histogram_csv(summary.hist_score, out_path(config, artifact::kHistScore).string());
    save_pruning_curve_csv(pruning_curve(records, config.report_etas),
                           out_path(config, artifact::kPruningCurve).string());
    std::vector<Document> corpus = read_configured_corpus(config);
    std::size_t k = std::min(config.report_top_k, records.size());
    save_rarity_gap_csv(rarity_gap_extremes(records, corpus, k),
                        out_path(config, artifact::kRarityGap).string());
    std::cerr << "report: " << records.size() << " records summarized\n";
}

void run_pipeline(const PipelineConfig &config) {
    run_build_vocab(config);
    run_count_freq(config);
    if (config.external_scores_path.empty()) {
        run_train_probe(config);
    }
    run_score(config);
    run_prune(config);
    run_report(config);
}

} // namespace entroprune
