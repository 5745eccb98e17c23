#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/hashing.hpp"
#include "entroprune/tokenizer.hpp"

namespace entroprune {

// Interpolated Kneser-Ney n-gram language model used as the data probe.
// Counts are updatable document by document; probabilities are strictly
// positive and sum to one over the vocabulary for any fixed context.
class ProbeModel {
  public:
    ProbeModel(std::uint32_t order, double discount, std::uint32_t vocab_size);

    // Adds one document's n-gram events. Tokens never cross document
    // boundaries; the first token of a document has an empty context.
    void ingest(std::span<const TokenId> doc_ids);

    // q(token | context). Uses at most the trailing (order-1) context
    // tokens; levels with no mass back off to the next lower one, down
    // to the uniform distribution over the vocabulary.
    double conditional_prob(std::span<const TokenId> context, TokenId token) const;

    // (1/n) * sum ln(1 / q(w_i | w_<i)), nats per word. Errors on n==0.
    double nll_entropy(std::span<const TokenId> doc_ids) const;

    std::uint32_t order() const { return order_; }
    double discount() const { return discount_; }
    std::uint32_t vocab_size() const { return vocab_size_; }

    // Distinct n-gram types of the given length currently stored.
    std::uint64_t ngram_types(std::uint32_t length) const;

    void save(const std::string &path) const;
    static ProbeModel load(const std::string &path);

  private:
    struct ContextStat {
        std::uint64_t total = 0;
        std::uint64_t types = 0;
    };

    void bump_context(std::uint32_t level, std::string_view context_key, bool new_type);

    std::uint32_t order_;
    double discount_;
    std::uint32_t vocab_size_;
    // raw_[L-1]: raw counts of L-grams, L in [1, order].
    std::vector<StringKeyMap<std::uint64_t>> raw_;
    // cont_[L-1]: continuation counts (distinct left extensions) of
    // L-grams, L in [1, order-1].
    std::vector<StringKeyMap<std::uint64_t>> cont_;
    // ctx_[k]: total mass and distinct continuations per context of
    // length k, in the count space queried at level k.
    std::vector<StringKeyMap<ContextStat>> ctx_;
};

enum class StopReason { saturated, budget_exhausted, stream_ended };

const char *to_string(StopReason reason);

struct ProbeTrainConfig {
    std::uint32_t order = 3;
    double discount = 0.75;
    std::uint64_t chunk_docs = 500;
    double epsilon = 0.005;
    std::uint32_t patience = 2;
    double budget_fraction = 0.12;
    double dev_fraction = 0.02;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainingTrace {
    std::vector<double> chunk_losses;        // held-out mean NLL after each chunk
    std::vector<std::uint64_t> chunk_tokens; // cumulative training tokens per chunk
    StopReason stop_reason = StopReason::stream_ended;
    std::uint64_t tokens_consumed = 0;
    double budget_fraction = 0.0;
};

// True iff the most recent `patience` consecutive relative improvements
// (L[t-1] - L[t]) / L[t-1] are all below epsilon. Regressions (negative
// improvements) count as saturation. False with fewer than patience+1
// losses. Errors on a nonpositive loss.
bool saturation_check(std::span<const double> losses, double epsilon, std::uint32_t patience);

// Trains the probe on a seeded shuffle of the corpus: the first
// dev_fraction of the shuffled stream is held out, the rest is ingested
// chunk_docs documents at a time until held-out loss saturates, the
// token budget is spent, or the stream ends. Deterministic for a fixed
// (corpus, config) pair.
std::pair<ProbeModel, TrainingTrace> train_probe(const std::vector<Document> &corpus,
                                                 const Vocab &vocab, const ProbeTrainConfig &config);

// trace.csv: chunk_index,heldout_nll,tokens_consumed
void save_trace_csv(const TrainingTrace &trace, const std::string &path);

} // namespace entroprune
