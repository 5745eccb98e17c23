#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/tokenizer.hpp"

namespace entroprune {

// Corpus-wide token occurrence counts with an additive-smoothing floor
// so every id, observed or not, has a strictly positive frequency.
class FrequencyTable {
  public:
    FrequencyTable(std::vector<std::uint64_t> counts, double floor_alpha);

    // (counts[id] + alpha) / (total + alpha * |vocab|). With alpha == 0
    // this is the raw relative frequency and unseen ids get 0.
    double normalized_frequency(TokenId id) const;

    // Mean surprisal (1/n) * sum ln(1 / f(w_i)), in nats per word.
    double entropy(std::span<const TokenId> doc_ids) const;

    std::uint64_t count(TokenId id) const;
    std::uint64_t total() const { return total_; }
    double floor_alpha() const { return alpha_; }
    std::size_t vocab_size() const { return counts_.size(); }

    void save(const std::string &path) const;
    static FrequencyTable load(const std::string &path);

  private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_;
    double alpha_;
};

// Exact occurrence counts of encoded tokens across the corpus; unknown
// words count toward id 0. Deterministic for any worker count.
FrequencyTable count_frequencies(const std::vector<Document> &corpus, const Vocab &vocab,
                                 double floor_alpha = 1.0, std::size_t workers = 1);

} // namespace entroprune
