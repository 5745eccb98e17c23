#include "entroprune/scoring.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "entroprune/errors.hpp"

namespace entroprune {

using nlohmann::json;

const char *to_string(ScoreSource source) {
    return source == ScoreSource::internal_probe ? "internal_probe" : "external";
}

ScoreRecord make_score_record(std::string id, double h_q, double h_f, std::uint64_t n_tokens,
                              ScoreSource source) {
    if (n_tokens < 1) {
        throw ValidationError("score record requires n_tokens >= 1 (document " + id + ")");
    }
    ScoreRecord rec;
    rec.id = std::move(id);
    rec.h_q = h_q;
    rec.h_f = h_f;
    rec.score = h_q + h_f;
    rec.perplexity = std::exp(h_q);
    rec.weighted_perplexity = std::exp(rec.score);
    rec.n_tokens = n_tokens;
    rec.source = source;
    return rec;
}

ScoreRecord score_sample(const Document &doc, const ProbeModel &model, const FrequencyTable &table,
                         const Vocab &vocab) {
    std::vector<TokenId> ids = encode_text(doc.text, vocab);
    if (ids.empty()) {
        throw ValidationError("document " + doc.id + " has no tokens to score");
    }
    double h_q = model.nll_entropy(ids);
    double h_f = table.entropy(ids);
    return make_score_record(doc.id, h_q, h_f, ids.size(), ScoreSource::internal_probe);
}

bool weighted_perplexity_identity(const ScoreRecord &record, std::span<const TokenId> doc_ids,
                                  const FrequencyTable &table) {
    if (doc_ids.empty() || record.n_tokens != doc_ids.size()) {
        throw ValidationError("score record does not match document (id " + record.id + ")");
    }
    // Evaluate the geometric mean of inverse frequencies through the
    // literal product, tracking the binary exponent to avoid overflow.
    double mantissa = 1.0;
    long exponent = 0;
    for (TokenId id : doc_ids) {
        mantissa *= 1.0 / table.normalized_frequency(id);
        int e = 0;
        mantissa = std::frexp(mantissa, &e);
        exponent += e;
    }
    double n = static_cast<double>(doc_ids.size());
    double geo_mean = std::pow(mantissa, 1.0 / n) *
                      std::exp2(static_cast<double>(exponent) / n);
    double rhs = geo_mean * record.perplexity;
    double lhs = record.weighted_perplexity;
    double denom = std::max(std::abs(lhs), std::abs(rhs));
    if (denom == 0.0) {
        return true;
    }
    return std::abs(lhs - rhs) / denom <= 1e-9;
}

std::map<std::string, double> import_external_scores(const std::string &path,
                                                     const std::vector<Document> &corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open external scores: " + path);
    }
    std::map<std::string, double> h_q;
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
            !rec.contains("nll_per_word") || !rec["id"].is_string() ||
            !rec["nll_per_word"].is_number()) {
            throw IoError("external scores line " + std::to_string(line_number) +
                          ": malformed record [" + path + "]");
        }
        std::string id = rec["id"].get<std::string>();
        double nll = rec["nll_per_word"].get<double>();
        if (!(nll > 0.0)) {
            throw ValidationError("external scores line " + std::to_string(line_number) +
                                  ": nll_per_word must be positive (id " + id + ")");
        }
        if (rec.contains("log_base")) {
            std::string base = rec["log_base"].is_string() ? rec["log_base"].get<std::string>() : "";
            if (base == "2") {
                nll *= std::log(2.0);
            } else if (base != "e") {
                throw ValidationError("external scores line " + std::to_string(line_number) +
                                      ": log_base must be \"e\" or \"2\"");
            }
        }
        if (!h_q.emplace(std::move(id), nll).second) {
            throw ValidationError("duplicate id " + rec["id"].get<std::string>() +
                                  " in external scores");
        }
    }
    if (in.bad()) {
        throw IoError("read failure in external scores: " + path);
    }

    std::vector<std::string> missing;
    for (const Document &doc : corpus) {
        if (h_q.find(doc.id) == h_q.end()) {
            missing.push_back(doc.id);
            if (missing.size() == 10) {
                break;
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "external scores do not cover corpus ids:";
        for (const auto &id : missing) {
            msg += " " + id;
        }
        throw ValidationError(msg);
    }
    return h_q;
}

namespace {

// Shared parallel driver: h_q_of(doc_index, encoded_ids) supplies the
// model-side entropy; everything else is common.
template <typename HqFn>
CorpusScores score_corpus_impl(const std::vector<Document> &corpus, const FrequencyTable &table,
                               const Vocab &vocab, ScoreSource source, std::size_t workers,
                               HqFn h_q_of) {
    struct Slot {
        bool scorable = false;
        ScoreRecord record;
    };
    std::vector<Slot> slots(corpus.size());

    if (workers == 0) {
        workers = 1;
    }
    workers = std::min<std::size_t>(workers, corpus.size() == 0 ? 1 : corpus.size());

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t d = begin; d < end; ++d) {
            std::vector<TokenId> ids = encode_text(corpus[d].text, vocab);
            if (ids.empty()) {
                continue;
            }
            double h_q = h_q_of(d, ids);
            double h_f = table.entropy(ids);
            slots[d].record =
                make_score_record(corpus[d].id, h_q, h_f, ids.size(), source);
            slots[d].scorable = true;
        }
    };

    if (workers <= 1) {
        run_range(0, corpus.size());
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        std::size_t block = (corpus.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            std::size_t begin = std::min(w * block, corpus.size());
            std::size_t end = std::min(begin + block, corpus.size());
            threads.emplace_back(run_range, begin, end);
        }
        for (auto &t : threads) {
            t.join();
        }
    }

    CorpusScores out;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        if (slots[d].scorable) {
            out.records.push_back(std::move(slots[d].record));
        } else {
            out.unscorable_ids.push_back(corpus[d].id);
        }
    }
    return out;
}

} // namespace

CorpusScores score_corpus(const std::vector<Document> &corpus, const ProbeModel &model,
                          const FrequencyTable &table, const Vocab &vocab, std::size_t workers) {
    return score_corpus_impl(corpus, table, vocab, ScoreSource::internal_probe, workers,
                             [&](std::size_t, const std::vector<TokenId> &ids) {
                                 return model.nll_entropy(ids);
                             });
}

CorpusScores score_corpus(const std::vector<Document> &corpus,
                          const std::map<std::string, double> &external_h_q,
                          const FrequencyTable &table, const Vocab &vocab, std::size_t workers) {
    for (const Document &doc : corpus) {
        if (external_h_q.find(doc.id) == external_h_q.end()) {
            throw ValidationError("external scores do not cover corpus ids: " + doc.id);
        }
    }
    return score_corpus_impl(corpus, table, vocab, ScoreSource::external, workers,
                             [&](std::size_t d, const std::vector<TokenId> &) {
                                 return external_h_q.find(corpus[d].id)->second;
                             });
}

void save_scores_jsonl(const std::vector<ScoreRecord> &records, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write scores: " + path);
    }
    for (const ScoreRecord &rec : records) {
        json j;
        j["id"] = rec.id;
        j["h_q"] = rec.h_q;
        j["h_f"] = rec.h_f;
        j["score"] = rec.score;
        j["perplexity"] = rec.perplexity;
        j["weighted_perplexity"] = rec.weighted_perplexity;
        j["n_tokens"] = rec.n_tokens;
        j["source"] = to_string(rec.source);
        out << j.dump() << '\n';
    }
    if (!out) {
        throw IoError("write failure in scores: " + path);
    }
}

std::vector<ScoreRecord> load_scores_jsonl(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scores: " + path);
    }
    std::vector<ScoreRecord> records;
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw IoError("scores line " + std::to_string(line_number) + ": malformed record [" +
                          path + "]");
        }
        try {
            ScoreRecord rec;
            rec.id = j.at("id").get<std::string>();
            rec.h_q = j.at("h_q").get<double>();
            rec.h_f = j.at("h_f").get<double>();
            rec.score = j.at("score").get<double>();
            rec.perplexity = j.at("perplexity").get<double>();
            rec.weighted_perplexity = j.at("weighted_perplexity").get<double>();
            rec.n_tokens = j.at("n_tokens").get<std::uint64_t>();
            std::string source = j.at("source").get<std::string>();
            if (source == "internal_probe") {
                rec.source = ScoreSource::internal_probe;
            } else if (source == "external") {
                rec.source = ScoreSource::external;
            } else {
                throw IoError("scores line " + std::to_string(line_number) +
                              ": unknown source \"" + source + "\"");
            }
            records.push_back(std::move(rec));
        } catch (const json::exception &e) {
            throw IoError("scores line " + std::to_string(line_number) + ": " + e.what() + " [" +
                          path + "]");
        }
    }
    if (in.bad()) {
        throw IoError("read failure in scores: " + path);
    }
    return records;
}

void save_id_lines(const std::vector<std::string> &ids, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write id list: " + path);
    }
    for (const auto &id : ids) {
        out << id << '\n';
    }
    if (!out) {
        throw IoError("write failure in id list: " + path);
    }
}

std::vector<std::string> load_id_lines(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open id list: " + path);
    }
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            ids.push_back(line);
        }
    }
    if (in.bad()) {
        throw IoError("read failure in id list: " + path);
    }
    return ids;
}

} // namespace entroprune
