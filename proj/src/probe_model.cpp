#include "entroprune/probe_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "entroprune/errors.hpp"
#include "entroprune/rng.hpp"

namespace entroprune {

namespace {

// N-gram keys are token ids as big-endian 4-byte words, so byte-wise
// lexicographic order equals numeric order.
void append_id(std::string &key, TokenId id) {
    key.push_back(static_cast<char>(id >> 24));
    key.push_back(static_cast<char>(id >> 16));
    key.push_back(static_cast<char>(id >> 8));
    key.push_back(static_cast<char>(id));
}

} // namespace

ProbeModel::ProbeModel(std::uint32_t order, double discount, std::uint32_t vocab_size)
    : order_(order), discount_(discount), vocab_size_(vocab_size) {
    if (order_ < 1) {
        throw ValidationError("probe order must be >= 1");
    }
    if (!(discount_ > 0.0 && discount_ < 1.0)) {
        throw ValidationError("probe discount must be in (0, 1)");
    }
    if (vocab_size_ < 1) {
        throw ValidationError("probe vocab_size must be >= 1");
    }
    raw_.resize(order_);
    cont_.resize(order_ > 1 ? order_ - 1 : 0);
    ctx_.resize(order_);
}

void ProbeModel::bump_context(std::uint32_t level, std::string_view context_key, bool new_type) {
    auto it = ctx_[level].find(context_key);
    if (it == ctx_[level].end()) {
        it = ctx_[level].emplace(std::string(context_key), ContextStat{}).first;
    }
    it->second.total += 1;
    if (new_type) {
        it->second.types += 1;
    }
}

void ProbeModel::ingest(std::span<const TokenId> doc_ids) {
    for (TokenId id : doc_ids) {
        if (id >= vocab_size_) {
            throw ValidationError("token id out of range: " + std::to_string(id));
        }
    }
    std::string key;
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        std::uint32_t max_len = static_cast<std::uint32_t>(std::min<std::size_t>(i + 1, order_));
        for (std::uint32_t len = 1; len <= max_len; ++len) {
            key.clear();
            for (std::size_t j = i + 1 - len; j <= i; ++j) {
                append_id(key, doc_ids[j]);
            }
            auto [it, inserted] = raw_[len - 1].try_emplace(key, 0);
            bool novel = (++it->second == 1);
            (void)inserted;
            if (len == order_) {
                // Top level queries raw counts; its context stats track
                // every event.
                bump_context(order_ - 1, std::string_view(key).substr(0, (len - 1) * 4), novel);
            }
            if (novel && len >= 2) {
                // A new raw L-gram type extends the continuation count
                // of its (L-1)-token suffix.
                std::string_view suffix = std::string_view(key).substr(4);
                auto [cit, cinserted] = cont_[len - 2].try_emplace(std::string(suffix), 0);
                bool cont_novel = (++cit->second == 1);
                (void)cinserted;
                bump_context(len - 2, suffix.substr(0, suffix.size() - 4), cont_novel);
            }
        }
    }
}

double ProbeModel::conditional_prob(std::span<const TokenId> context, TokenId token) const {
    if (token >= vocab_size_) {
        throw ValidationError("token id out of range: " + std::to_string(token));
    }
    for (TokenId id : context) {
        if (id >= vocab_size_) {
            throw ValidationError("context token id out of range: " + std::to_string(id));
        }
    }
    std::size_t usable = std::min<std::size_t>(context.size(), order_ - 1);
    std::span<const TokenId> ctx = context.subspan(context.size() - usable);

    double p = 1.0 / static_cast<double>(vocab_size_);
    std::string event_key;
    event_key.reserve((usable + 1) * 4);
    for (std::size_t k = 0; k <= usable; ++k) {
        std::span<const TokenId> suffix = ctx.subspan(usable - k);
        event_key.clear();
        for (TokenId id : suffix) {
            append_id(event_key, id);
        }
        append_id(event_key, token);
        std::string_view context_key(event_key.data(), k * 4);

        auto stat_it = ctx_[k].find(context_key);
        if (stat_it == ctx_[k].end() || stat_it->second.total == 0) {
            continue; // no mass at this level: fully back off
        }
        const auto &store = (k + 1 == order_) ? raw_[order_ - 1] : cont_[k];
        auto count_it = store.find(std::string_view(event_key));
        double c = count_it == store.end() ? 0.0 : static_cast<double>(count_it->second);
        double total = static_cast<double>(stat_it->second.total);
        double types = static_cast<double>(stat_it->second.types);
        p = (std::max(c - discount_, 0.0) + discount_ * types * p) / total;
    }
    return p;
}

double ProbeModel::nll_entropy(std::span<const TokenId> doc_ids) const {
    if (doc_ids.empty()) {
        throw ValidationError("empty document has no NLL entropy");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        std::size_t ctx_len = std::min<std::size_t>(i, order_ - 1);
        std::span<const TokenId> context = doc_ids.subspan(i - ctx_len, ctx_len);
        acc += std::log(1.0 / conditional_prob(context, doc_ids[i]));
    }
    return acc / static_cast<double>(doc_ids.size());
}

std::uint64_t ProbeModel::ngram_types(std::uint32_t length) const {
    if (length < 1 || length > order_) {
        throw ValidationError("n-gram length out of range: " + std::to_string(length));
    }
    return raw_[length - 1].size();
}

namespace {

constexpr char kModelMagic[8] = {'E', 'P', 'R', 'O', 'B', 'E', '0', '1'};

void write_u32(std::ostream &out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) {
        buf[i] = static_cast<char>(v >> (8 * i));
    }
    out.write(buf, 4);
}

void write_u64(std::ostream &out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<char>(v >> (8 * i));
    }
    out.write(buf, 8);
}

std::uint32_t read_u32(std::istream &in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char *>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | buf[i];
    }
    return v;
}

std::uint64_t read_u64(std::istream &in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char *>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | buf[i];
    }
    return v;
}

void write_count_store(std::ostream &out, const StringKeyMap<std::uint64_t> &store) {
    std::vector<std::string_view> keys;
    keys.reserve(store.size());
    for (const auto &kv : store) {
        keys.push_back(kv.first);
    }
    std::sort(keys.begin(), keys.end());
    write_u64(out, keys.size());
    for (std::string_view key : keys) {
        out.write(key.data(), static_cast<std::streamsize>(key.size()));
        write_u64(out, store.find(key)->second);
    }
}

void read_count_store(std::istream &in, std::size_t key_bytes, StringKeyMap<std::uint64_t> &store,
                      const std::string &path) {
    std::uint64_t n = read_u64(in);
    if (!in) {
        throw IoError("truncated probe model: " + path);
    }
    store.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 22)));
    std::string key(key_bytes, '\0');
    for (std::uint64_t i = 0; i < n; ++i) {
        in.read(key.data(), static_cast<std::streamsize>(key_bytes));
        std::uint64_t count = read_u64(in);
        if (!in) {
            throw IoError("truncated probe model: " + path);
        }
        store.emplace(key, count);
    }
}

} // namespace

void ProbeModel::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write probe model: " + path);
    }
    out.write(kModelMagic, sizeof(kModelMagic));
    write_u32(out, 1); // format version
    write_u32(out, order_);
    write_u32(out, vocab_size_);
    std::uint64_t discount_bits;
    std::memcpy(&discount_bits, &discount_, sizeof(discount_bits));
    write_u64(out, discount_bits);
    for (const auto &store : raw_) {
        write_count_store(out, store);
    }
    for (const auto &store : cont_) {
        write_count_store(out, store);
    }
    out.flush();
    if (!out) {
        throw IoError("write failure in probe model: " + path);
    }
}

ProbeModel ProbeModel::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open probe model: " + path);
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw IoError("not a probe model file: " + path);
    }
    std::uint32_t version = read_u32(in);
    if (version != 1) {
        throw IoError("unsupported probe model version " + std::to_string(version) + ": " + path);
    }
    std::uint32_t order = read_u32(in);
    std::uint32_t vocab_size = read_u32(in);
    std::uint64_t discount_bits = read_u64(in);
    double discount;
    std::memcpy(&discount, &discount_bits, sizeof(discount));
    if (!in) {
        throw IoError("truncated probe model: " + path);
    }

    if (order < 1 || vocab_size < 1 || !(discount > 0.0 && discount < 1.0)) {
        throw IoError("invalid probe model header: " + path);
    }
    ProbeModel model(order, discount, vocab_size);
    for (std::uint32_t len = 1; len <= order; ++len) {
        read_count_store(in, len * 4, model.raw_[len - 1], path);
    }
    for (std::uint32_t len = 1; len + 1 <= order; ++len) {
        read_count_store(in, len * 4, model.cont_[len - 1], path);
    }

    // Context stats are derived, not stored: top level from raw
    // order-grams, lower levels from continuation counts.
    for (const auto &kv : model.raw_[order - 1]) {
        std::string_view context_key = std::string_view(kv.first).substr(0, (order - 1) * 4);
        auto it = model.ctx_[order - 1].find(context_key);
        if (it == model.ctx_[order - 1].end()) {
            it = model.ctx_[order - 1].emplace(std::string(context_key), ContextStat{}).first;
        }
        it->second.total += kv.second;
        it->second.types += 1;
    }
    for (std::uint32_t len = 1; len + 1 <= order; ++len) {
        for (const auto &kv : model.cont_[len - 1]) {
            std::string_view context_key = std::string_view(kv.first).substr(0, (len - 1) * 4);
            auto it = model.ctx_[len - 1].find(context_key);
            if (it == model.ctx_[len - 1].end()) {
                it = model.ctx_[len - 1].emplace(std::string(context_key), ContextStat{}).first;
            }
            it->second.total += kv.second;
            it->second.types += 1;
        }
    }
    return model;
}

const char *to_string(StopReason reason) {
    switch (reason) {
    case StopReason::saturated:
        return "saturated";
    case StopReason::budget_exhausted:
        return "budget_exhausted";
    case StopReason::stream_ended:
        return "stream_ended";
    }
    return "unknown";
}

void ProbeTrainConfig::validate() const {
    if (order < 1) {
        throw ValidationError("order must be >= 1");
    }
    if (!(discount > 0.0 && discount < 1.0)) {
        throw ValidationError("discount must be in (0, 1)");
    }
    if (chunk_docs < 1) {
        throw ValidationError("chunk_docs must be >= 1");
    }
    if (!(epsilon > 0.0)) {
        throw ValidationError("epsilon must be > 0");
    }
    if (patience < 1) {
        throw ValidationError("patience must be >= 1");
    }
    if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
        throw ValidationError("budget_fraction must be in (0, 1]");
    }
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
        throw ValidationError("dev_fraction must be in (0, 1)");
    }
}

bool saturation_check(std::span<const double> losses, double epsilon, std::uint32_t patience) {
    if (!(epsilon > 0.0)) {
        throw ValidationError("epsilon must be > 0");
    }
    if (patience < 1) {
        throw ValidationError("patience must be >= 1");
    }
    for (double loss : losses) {
        if (!(loss > 0.0)) {
            throw ValidationError("held-out loss must be positive, got " + std::to_string(loss));
        }
    }
    if (losses.size() < static_cast<std::size_t>(patience) + 1) {
        return false;
    }
    for (std::size_t t = losses.size() - patience; t < losses.size(); ++t) {
        double improvement = (losses[t - 1] - losses[t]) / losses[t - 1];
        if (improvement >= epsilon) {
            return false;
        }
    }
    return true;
}

namespace {

double heldout_mean_nll(const ProbeModel &model, const std::vector<std::vector<TokenId>> &dev_docs,
                        std::uint64_t dev_tokens) {
    double acc = 0.0;
    for (const auto &ids : dev_docs) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::size_t ctx_len = std::min<std::size_t>(i, model.order() - 1);
            std::span<const TokenId> context(ids.data() + (i - ctx_len), ctx_len);
            acc += std::log(1.0 / model.conditional_prob(context, ids[i]));
        }
    }
    return acc / static_cast<double>(dev_tokens);
}

} // namespace

std::pair<ProbeModel, TrainingTrace> train_probe(const std::vector<Document> &corpus,
                                                 const Vocab &vocab,
                                                 const ProbeTrainConfig &config) {
    config.validate();
    if (corpus.empty()) {
        throw ValidationError("cannot train probe on an empty corpus");
    }

    std::vector<std::vector<TokenId>> encoded(corpus.size());
    std::uint64_t total_tokens = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        encoded[i] = encode_text(corpus[i].text, vocab);
        total_tokens += encoded[i].size();
    }
    if (total_tokens == 0) {
        throw ValidationError("cannot train probe on a corpus with no tokens");
    }

    std::vector<std::size_t> order_of_use(corpus.size());
    for (std::size_t i = 0; i < order_of_use.size(); ++i) {
        order_of_use[i] = i;
    }
    Rng rng(config.seed);
    deterministic_shuffle(order_of_use, rng);

    if (corpus.size() < 2) {
        throw ValidationError("corpus too small to form a dev slice");
    }
    std::size_t dev_count =
        static_cast<std::size_t>(config.dev_fraction * static_cast<double>(corpus.size()));
    dev_count = std::max<std::size_t>(dev_count, 1);
    dev_count = std::min(dev_count, corpus.size() - 1);
    std::vector<std::vector<TokenId>> dev_docs;
    dev_docs.reserve(dev_count);
    std::uint64_t dev_tokens = 0;
    for (std::size_t i = 0; i < dev_count; ++i) {
        dev_docs.push_back(encoded[order_of_use[i]]);
        dev_tokens += dev_docs.back().size();
    }
    if (dev_tokens == 0) {
        throw ValidationError("dev slice has no tokens");
    }

    const double budget_tokens = config.budget_fraction * static_cast<double>(total_tokens);

    ProbeModel model(config.order, config.discount, static_cast<std::uint32_t>(vocab.size()));
    TrainingTrace trace;
    trace.budget_fraction = config.budget_fraction;

    std::size_t next = dev_count;
    bool stopped = false;
    while (next < order_of_use.size() && !stopped) {
        std::uint64_t docs_in_chunk = 0;
        while (next < order_of_use.size() && docs_in_chunk < config.chunk_docs) {
            const auto &ids = encoded[order_of_use[next]];
            model.ingest(ids);
            trace.tokens_consumed += ids.size();
            ++next;
            ++docs_in_chunk;
        }
        trace.chunk_losses.push_back(heldout_mean_nll(model, dev_docs, dev_tokens));
        trace.chunk_tokens.push_back(trace.tokens_consumed);

        if (saturation_check(trace.chunk_losses, config.epsilon, config.patience)) {
            trace.stop_reason = StopReason::saturated;
            stopped = true;
        } else if (static_cast<double>(trace.tokens_consumed) >= budget_tokens) {
            trace.stop_reason = StopReason::budget_exhausted;
            stopped = true;
        }
    }
    if (!stopped) {
        trace.stop_reason = StopReason::stream_ended;
    }
    return {std::move(model), std::move(trace)};
}

void save_trace_csv(const TrainingTrace &trace, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write training trace: " + path);
    }
    out << "chunk_index,heldout_nll,tokens_consumed\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.chunk_losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", trace.chunk_losses[i]);
        out << i << ',' << buf << ',' << trace.chunk_tokens[i] << '\n';
    }
    if (!out) {
        throw IoError("write failure in training trace: " + path);
    }
}

} // namespace entroprune
