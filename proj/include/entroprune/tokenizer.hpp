#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/hashing.hpp"

namespace entroprune {

using TokenId = std::uint32_t;

inline constexpr TokenId kUnknownId = 0;
inline constexpr const char *kUnknownToken = "<unk>";

struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<TokenId> ids; // populated by encode(); same length as tokens
};

// Closed word vocabulary with "<unk>" reserved at id 0.
class Vocab {
  public:
    Vocab();

    // Tokens in id order, "<unk>" first.
    explicit Vocab(std::vector<std::string> tokens_in_id_order, std::uint32_t min_count);

    TokenId lookup(std::string_view token) const; // kUnknownId on miss
    const std::string &token(TokenId id) const;
    std::size_t size() const { return id_to_token_.size(); }
    std::uint32_t min_count() const { return min_count_; }

    void save(const std::string &path) const;
    static Vocab load(const std::string &path);

  private:
    std::vector<std::string> id_to_token_;
    StringKeyMap<TokenId> token_to_id_;
    std::uint32_t min_count_ = 0;
};

// Case-folds, splits on Unicode whitespace, and isolates each maximal
// run of punctuation/symbol characters into its own token. Total: any
// input yields a (possibly empty) sequence.
TokenSequence tokenize(std::string_view text);

// Counts tokens across the corpus and keeps those with count >=
// min_count. Ids are assigned by descending count, ties broken by
// lexicographic token order, starting at 1 ("<unk>" holds 0).
Vocab build_vocab(const std::vector<Document> &corpus, std::uint32_t min_count);

// Fills seq.ids from the vocabulary; unknown tokens map to id 0.
void encode(TokenSequence &seq, const Vocab &vocab);

// Convenience: tokenize + encode, returning ids only.
std::vector<TokenId> encode_text(std::string_view text, const Vocab &vocab);

} // namespace entroprune
