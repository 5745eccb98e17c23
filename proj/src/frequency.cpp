#include "entroprune/frequency.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "entroprune/errors.hpp"

namespace entroprune {

using nlohmann::json;

FrequencyTable::FrequencyTable(std::vector<std::uint64_t> counts, double floor_alpha)
    : counts_(std::move(counts)), alpha_(floor_alpha) {
    if (counts_.empty()) {
        throw ValidationError("frequency table requires a non-empty vocabulary");
    }
    if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) {
        throw ValidationError("floor_alpha must be a finite value >= 0");
    }
    total_ = 0;
    for (std::uint64_t c : counts_) {
        total_ += c;
    }
    if (total_ == 0) {
        throw ValidationError("no tokens to count");
    }
}

double FrequencyTable::normalized_frequency(TokenId id) const {
    if (id >= counts_.size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    double denom = static_cast<double>(total_) + alpha_ * static_cast<double>(counts_.size());
    return (static_cast<double>(counts_[id]) + alpha_) / denom;
}

double FrequencyTable::entropy(std::span<const TokenId> doc_ids) const {
    if (doc_ids.empty()) {
        throw ValidationError("empty document has no frequency entropy");
    }
    double acc = 0.0;
    for (TokenId id : doc_ids) {
        acc += std::log(1.0 / normalized_frequency(id));
    }
    return acc / static_cast<double>(doc_ids.size());
}

std::uint64_t FrequencyTable::count(TokenId id) const {
    if (id >= counts_.size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    return counts_[id];
}

void FrequencyTable::save(const std::string &path) const {
    json j;
    j["alpha"] = alpha_;
    j["total"] = total_;
    j["counts"] = counts_;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write frequency table: " + path);
    }
    out << j.dump() << '\n';
    if (!out) {
        throw IoError("write failure in frequency table: " + path);
    }
}

FrequencyTable FrequencyTable::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open frequency table: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("alpha") || !j.contains("counts")) {
        throw IoError("malformed frequency table: " + path);
    }
    try {
        FrequencyTable table(j["counts"].get<std::vector<std::uint64_t>>(),
                             j["alpha"].get<double>());
        if (j.contains("total") && j["total"].get<std::uint64_t>() != table.total()) {
            throw IoError("frequency table total does not match counts: " + path);
        }
        return table;
    } catch (const ValidationError &e) {
        throw IoError("malformed frequency table: " + path + " (" + e.what() + ")");
    } catch (const json::exception &e) {
        throw IoError("malformed frequency table: " + path + " (" + e.what() + ")");
    }
}

FrequencyTable count_frequencies(const std::vector<Document> &corpus, const Vocab &vocab,
                                 double floor_alpha, std::size_t workers) {
    if (corpus.empty()) {
        throw ValidationError("no tokens to count");
    }
    if (workers == 0) {
        workers = 1;
    }
    workers = std::min(workers, corpus.size());

    // Per-worker partial counts merge by element-wise sum, so the result
    // is identical for any worker count.
    std::vector<std::vector<std::uint64_t>> partials(workers,
                                                     std::vector<std::uint64_t>(vocab.size(), 0));
    auto count_range = [&](std::size_t w, std::size_t begin, std::size_t end) {
        auto &local = partials[w];
        for (std::size_t d = begin; d < end; ++d) {
            for (TokenId id : encode_text(corpus[d].text, vocab)) {
                ++local[id];
            }
        }
    };

    if (workers == 1) {
        count_range(0, 0, corpus.size());
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        std::size_t block = (corpus.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            std::size_t begin = w * block;
            std::size_t end = std::min(begin + block, corpus.size());
            threads.emplace_back(count_range, w, begin, end);
        }
        for (auto &t : threads) {
            t.join();
        }
    }

    std::vector<std::uint64_t> merged(vocab.size(), 0);
    for (const auto &partial : partials) {
        for (std::size_t i = 0; i < merged.size(); ++i) {
            merged[i] += partial[i];
        }
    }
    return FrequencyTable(std::move(merged), floor_alpha);
}

} // namespace entroprune
