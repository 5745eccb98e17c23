#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/frequency.hpp"
#include "entroprune/probe_model.hpp"
#include "entroprune/tokenizer.hpp"

namespace entroprune {

enum class ScoreSource { internal_probe, external };

const char *to_string(ScoreSource source);

// Per-sample importance: h_q is the probe NLL per word, h_f the mean
// inverse-frequency surprisal, score their sum. perplexity == e^h_q and
// weighted_perplexity == e^score are stored for convenience and must
// stay consistent with the entropies.
struct ScoreRecord {
    std::string id;
    double h_q = 0.0;
    double h_f = 0.0;
    double score = 0.0;
    double perplexity = 0.0;
    double weighted_perplexity = 0.0;
    std::uint64_t n_tokens = 0;
    ScoreSource source = ScoreSource::internal_probe;
};

ScoreRecord make_score_record(std::string id, double h_q, double h_f, std::uint64_t n_tokens,
                              ScoreSource source);

// Scores one document with the internal probe. Errors (with the
// document id) when the text tokenizes to nothing.
ScoreRecord score_sample(const Document &doc, const ProbeModel &model, const FrequencyTable &table,
                         const Vocab &vocab);

// Checks e^{h_q+h_f} == (prod 1/f(w_i))^{1/n} * e^{h_q} within 1e-9
// relative, evaluating the right-hand side through the literal product
// rather than through logs.
bool weighted_perplexity_identity(const ScoreRecord &record, std::span<const TokenId> doc_ids,
                                  const FrequencyTable &table);

// Reads {"id", "nll_per_word", ["log_base"]} records; base-2 values are
// converted to nats. Every corpus id must be covered exactly once.
std::map<std::string, double> import_external_scores(const std::string &path,
                                                     const std::vector<Document> &corpus);

struct CorpusScores {
    std::vector<ScoreRecord> records;          // corpus order, scorable docs only
    std::vector<std::string> unscorable_ids;   // corpus order
};

// Scores every document with the internal probe; empty documents land
// in the unscorable side list instead of aborting the run.
CorpusScores score_corpus(const std::vector<Document> &corpus, const ProbeModel &model,
                          const FrequencyTable &table, const Vocab &vocab, std::size_t workers = 1);

// Same, with h_q taken from externally computed NLLs (h_f stays
// internal so the combined score remains well-defined).
CorpusScores score_corpus(const std::vector<Document> &corpus,
                          const std::map<std::string, double> &external_h_q,
                          const FrequencyTable &table, const Vocab &vocab, std::size_t workers = 1);

// scores.jsonl: one record per line, keys id/h_q/h_f/score/perplexity/
// weighted_perplexity/n_tokens/source.
void save_scores_jsonl(const std::vector<ScoreRecord> &records, const std::string &path);
std::vector<ScoreRecord> load_scores_jsonl(const std::string &path);

void save_id_lines(const std::vector<std::string> &ids, const std::string &path);
std::vector<std::string> load_id_lines(const std::string &path);

} // namespace entroprune
