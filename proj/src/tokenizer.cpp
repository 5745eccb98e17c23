#include "entroprune/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "entroprune/errors.hpp"
#include "entroprune/unicode.hpp"

namespace entroprune {

using nlohmann::json;

TokenSequence tokenize(std::string_view text) {
    TokenSequence seq;
    std::string current;
    bool current_is_separator = false;

    auto flush = [&]() {
        if (!current.empty()) {
            seq.tokens.push_back(std::move(current));
            current.clear();
        }
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp;
        if (!utf8_next(text, i, cp)) {
            cp = 0xFFFD; // invalid byte; documents are validated at read time
        }
        cp = simple_case_fold(cp);
        if (is_whitespace(cp)) {
            flush();
            continue;
        }
        bool sep = is_separator_symbol(cp);
        if (!current.empty() && sep != current_is_separator) {
            flush();
        }
        current_is_separator = sep;
        utf8_append(cp, current);
    }
    flush();
    return seq;
}

Vocab::Vocab() : id_to_token_{kUnknownToken} {
    token_to_id_.emplace(kUnknownToken, kUnknownId);
}

Vocab::Vocab(std::vector<std::string> tokens_in_id_order, std::uint32_t min_count)
    : id_to_token_(std::move(tokens_in_id_order)), min_count_(min_count) {
    if (id_to_token_.empty() || id_to_token_[0] != kUnknownToken) {
        throw ValidationError("vocabulary must reserve \"<unk>\" at id 0");
    }
    token_to_id_.reserve(id_to_token_.size());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw ValidationError("duplicate token in vocabulary: " + id_to_token_[i]);
        }
    }
}

TokenId Vocab::lookup(std::string_view token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnknownId : it->second;
}

const std::string &Vocab::token(TokenId id) const {
    if (id >= id_to_token_.size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    return id_to_token_[id];
}

void Vocab::save(const std::string &path) const {
    json j;
    j["min_count"] = min_count_;
    j["tokens"] = id_to_token_;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write vocabulary: " + path);
    }
    out << j.dump() << '\n';
    if (!out) {
        throw IoError("write failure in vocabulary: " + path);
    }
}

Vocab Vocab::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open vocabulary: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("tokens") || !j.contains("min_count")) {
        throw IoError("malformed vocabulary file: " + path);
    }
    try {
        return Vocab(j["tokens"].get<std::vector<std::string>>(),
                     j["min_count"].get<std::uint32_t>());
    } catch (const Error &e) {
        throw IoError("malformed vocabulary file: " + path + " (" + e.what() + ")");
    } catch (const json::exception &e) {
        throw IoError("malformed vocabulary file: " + path + " (" + e.what() + ")");
    }
}

Vocab build_vocab(const std::vector<Document> &corpus, std::uint32_t min_count) {
    if (min_count == 0) {
        throw ValidationError("min_count must be >= 1");
    }
    std::unordered_map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const Document &doc : corpus) {
        TokenSequence seq = tokenize(doc.text);
        for (auto &tok : seq.tokens) {
            ++counts[std::move(tok)];
            ++total;
        }
    }
    if (corpus.empty() || total == 0) {
        throw ValidationError("cannot build vocabulary from empty corpus");
    }

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (auto &kv : counts) {
        if (kv.second >= min_count) {
            kept.emplace_back(kv.first, kv.second);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });

    std::vector<std::string> tokens;
    tokens.reserve(kept.size() + 1);
    tokens.emplace_back(kUnknownToken);
    for (auto &kv : kept) {
        tokens.push_back(std::move(kv.first));
    }
    return Vocab(std::move(tokens), min_count);
}

void encode(TokenSequence &seq, const Vocab &vocab) {
    seq.ids.clear();
    seq.ids.reserve(seq.tokens.size());
    for (const auto &tok : seq.tokens) {
        seq.ids.push_back(vocab.lookup(tok));
    }
}

std::vector<TokenId> encode_text(std::string_view text, const Vocab &vocab) {
    TokenSequence seq = tokenize(text);
    encode(seq, vocab);
    return std::move(seq.ids);
}

} // namespace entroprune
