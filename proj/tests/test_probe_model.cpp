#include <doctest.h>

#include <cmath>
#include <numeric>

#include "entroprune/errors.hpp"
#include "entroprune/probe_model.hpp"
#include "entroprune/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace entroprune;

namespace {

std::vector<Document> random_corpus(Rng &rng, std::size_t n_docs, std::size_t vocab_words,
                                    std::size_t min_len, std::size_t max_len) {
    auto words = testutil::word_inventory(vocab_words);
    std::vector<std::string> texts;
    texts.reserve(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) {
        texts.push_back(
            testutil::random_sentence(rng, words, min_len + rng.below(max_len - min_len + 1)));
    }
    return testutil::make_docs(texts);
}

} // namespace

TEST_SUITE("probe_model") {

TEST_CASE("saturation_check follows the literal predicate") {
    std::vector<double> a = {4.0, 3.0, 2.5, 2.49, 2.485};
    CHECK(saturation_check(a, 0.005, 2));

    std::vector<double> b = {4.0, 3.0};
    CHECK_FALSE(saturation_check(b, 0.005, 2));

    // Regressions (negative improvements) count as saturation.
    std::vector<double> c = {4.0, 4.2, 4.19};
    CHECK(saturation_check(c, 0.005, 2));

    // One large improvement inside the window blocks saturation.
    std::vector<double> d = {4.0, 3.0, 2.99};
    CHECK_FALSE(saturation_check(d, 0.005, 2));

    std::vector<double> bad = {4.0, -1.0};
    CHECK_THROWS_AS(saturation_check(bad, 0.005, 2), ValidationError);
    CHECK_THROWS_AS(saturation_check(a, -0.1, 2), ValidationError);
    CHECK_THROWS_AS(saturation_check(a, 0.005, 0), ValidationError);
}

TEST_CASE("repeated bigram dominates after training on 'a a a'") {
    // vocab {<unk>, a}; with discount 0.5 the oracle gives 0.9375.
    ProbeModel model(2, 0.5, 2);
    std::vector<TokenId> ids = {1, 1, 1};
    model.ingest(ids);

    oracle::KnOracle reference(2, 0.5, 2);
    reference.add_document(ids);
    reference.finalize();

    std::vector<TokenId> ctx = {1};
    double p = model.conditional_prob(ctx, 1);
    CHECK(p == doctest::Approx(reference.prob(ctx, 1)).epsilon(1e-12));
    CHECK(p == doctest::Approx(0.9375).epsilon(1e-12));
    CHECK(p > 0.9);
}

TEST_CASE("probabilities normalize over the vocabulary for random contexts") {
    Rng rng(23);
    auto docs = random_corpus(rng, 120, 30, 3, 25);
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    for (const auto &doc : docs) {
        model.ingest(encode_text(doc.text, vocab));
    }

    for (int trial = 0; trial < 100; ++trial) {
        std::size_t ctx_len = rng.below(4); // mixes empty, short, and full-order contexts
        std::vector<TokenId> ctx;
        for (std::size_t i = 0; i < ctx_len; ++i) {
            ctx.push_back(static_cast<TokenId>(rng.below(vocab.size())));
        }
        double sum = 0.0;
        for (TokenId w = 0; w < vocab.size(); ++w) {
            double p = model.conditional_prob(ctx, w);
            CHECK(p > 0.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("unseen tokens keep strictly positive probability") {
    auto docs = testutil::make_docs({"x y x y x"});
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    model.ingest(encode_text(docs[0].text, vocab));
    std::vector<TokenId> ctx = {vocab.lookup("x")};
    CHECK(model.conditional_prob(ctx, kUnknownId) > 0.0);
    CHECK_THROWS_AS(model.conditional_prob(ctx, static_cast<TokenId>(vocab.size())),
                    ValidationError);
}

TEST_CASE("an untrained probe is uniform, so nll is ln V") {
    ProbeModel model(3, 0.75, 4);
    std::vector<TokenId> doc = {0, 1, 2, 3, 2, 1};
    CHECK(model.nll_entropy(doc) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("nll errors on an empty document") {
    ProbeModel model(3, 0.75, 4);
    std::vector<TokenId> empty;
    CHECK_THROWS_WITH_AS(model.nll_entropy(empty), "empty document has no NLL entropy",
                         ValidationError);
}

TEST_CASE("memorized word order scores below a permuted one") {
    auto docs = testutil::make_docs({"the quick brown fox jumps over the lazy dog today"});
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    auto ids = encode_text(docs[0].text, vocab);
    model.ingest(ids);
    auto permuted = ids;
    std::swap(permuted[1], permuted[7]);
    std::swap(permuted[2], permuted[5]);
    CHECK(model.nll_entropy(ids) < model.nll_entropy(permuted));
}

TEST_CASE("nll equals per-token accumulation and the independent oracle") {
    Rng rng(31);
    auto docs = random_corpus(rng, 60, 20, 2, 20);
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    oracle::KnOracle reference(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    for (const auto &doc : docs) {
        auto ids = encode_text(doc.text, vocab);
        model.ingest(ids);
        reference.add_document(ids);
    }
    reference.finalize();

    for (std::size_t d = 0; d < docs.size(); d += 7) {
        auto ids = encode_text(docs[d].text, vocab);
        double per_token = 0.0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::size_t ctx_len = std::min<std::size_t>(i, 2);
            std::span<const TokenId> ctx(ids.data() + (i - ctx_len), ctx_len);
            per_token += std::log(1.0 / model.conditional_prob(ctx, ids[i]));
        }
        per_token /= static_cast<double>(ids.size());
        CHECK(oracle::rel_diff(model.nll_entropy(ids), per_token) <= 1e-12);
        CHECK(oracle::rel_diff(model.nll_entropy(ids), reference.nll(ids)) <= 1e-10);
    }
}

TEST_CASE("documents duplicated in training compress better than novel ones") {
    Rng rng(41);
    auto words = testutil::word_inventory(40);
    std::string duplicated = testutil::random_sentence(rng, words, 15);
    std::vector<std::string> texts(12, duplicated);
    for (int i = 0; i < 30; ++i) {
        texts.push_back(testutil::random_sentence(rng, words, 15));
    }
    auto docs = testutil::make_docs(texts);
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    for (const auto &doc : docs) {
        model.ingest(encode_text(doc.text, vocab));
    }
    double dup_nll = model.nll_entropy(encode_text(duplicated, vocab));
    double novel_mean = 0.0;
    for (std::size_t i = 12; i < docs.size(); ++i) {
        novel_mean += model.nll_entropy(encode_text(docs[i].text, vocab));
    }
    novel_mean /= 30.0;
    CHECK(dup_nll < novel_mean);
}

TEST_CASE("training is deterministic byte for byte") {
    Rng rng(53);
    auto docs = random_corpus(rng, 300, 25, 3, 15);
    Vocab vocab = build_vocab(docs, 2);
    ProbeTrainConfig config;
    config.chunk_docs = 40;
    config.dev_fraction = 0.05;
    config.seed = 9;

    testutil::TempDir dir("probe_det");
    auto [model_a, trace_a] = train_probe(docs, vocab, config);
    auto [model_b, trace_b] = train_probe(docs, vocab, config);
    model_a.save(dir.str("a.model"));
    model_b.save(dir.str("b.model"));
    CHECK(testutil::read_file(dir.str("a.model")) == testutil::read_file(dir.str("b.model")));
    CHECK(trace_a.chunk_losses == trace_b.chunk_losses);
    CHECK(trace_a.tokens_consumed == trace_b.tokens_consumed);
    CHECK(trace_a.stop_reason == trace_b.stop_reason);

    // A different seed consumes a different shuffle.
    config.seed = 10;
    auto [model_c, trace_c] = train_probe(docs, vocab, config);
    model_c.save(dir.str("c.model"));
    CHECK(testutil::read_file(dir.str("a.model")) != testutil::read_file(dir.str("c.model")));
}

TEST_CASE("a repeated-sentence corpus saturates well before the budget") {
    std::vector<std::string> texts(3000, "alpha beta gamma delta epsilon zeta eta theta");
    auto docs = testutil::make_docs(texts);
    Vocab vocab = build_vocab(docs, 1);
    ProbeTrainConfig config;
    config.chunk_docs = 20;

    auto [model, trace] = train_probe(docs, vocab, config);
    CHECK(trace.stop_reason == StopReason::saturated);
    REQUIRE(trace.chunk_losses.size() >= 2);
    for (std::size_t i = 1; i < trace.chunk_losses.size(); ++i) {
        CHECK(trace.chunk_losses[i] <= trace.chunk_losses[i - 1] + 1e-12);
    }
    // Far less than the 12% token budget was needed.
    std::uint64_t total_tokens = static_cast<std::uint64_t>(docs.size()) * 8;
    CHECK(static_cast<double>(trace.tokens_consumed) <
          0.12 * static_cast<double>(total_tokens) / 2.0);
}

TEST_CASE("incompressible text runs to the token budget") {
    Rng rng(67);
    auto words = testutil::word_inventory(400);
    std::vector<std::string> texts;
    for (int i = 0; i < 2000; ++i) {
        texts.push_back(testutil::random_sentence(rng, words, 50));
    }
    auto docs = testutil::make_docs(texts);
    Vocab vocab = build_vocab(docs, 1);
    ProbeTrainConfig config;
    config.chunk_docs = 120;
    config.budget_fraction = 0.12;

    auto [model, trace] = train_probe(docs, vocab, config);
    CHECK(trace.stop_reason == StopReason::budget_exhausted);
    std::uint64_t total_tokens = static_cast<std::uint64_t>(docs.size()) * 50;
    std::uint64_t chunk_tokens = config.chunk_docs * 50;
    CHECK(static_cast<double>(trace.tokens_consumed) <=
          0.12 * static_cast<double>(total_tokens) + static_cast<double>(chunk_tokens));
}

TEST_CASE("a stream can end before saturation or budget") {
    Rng rng(71);
    auto docs = random_corpus(rng, 80, 50, 5, 15);
    Vocab vocab = build_vocab(docs, 1);
    ProbeTrainConfig config;
    config.chunk_docs = 30;
    config.budget_fraction = 1.0;
    config.epsilon = 1e-12; // nothing counts as saturated
    config.dev_fraction = 0.05;

    auto [model, trace] = train_probe(docs, vocab, config);
    CHECK(trace.stop_reason == StopReason::stream_ended);
    CHECK(!trace.chunk_losses.empty());
    CHECK(trace.tokens_consumed > 0);
}

TEST_CASE("train_probe rejects corpora without a dev split") {
    auto docs = testutil::make_docs({"only one document"});
    Vocab vocab = build_vocab(docs, 1);
    ProbeTrainConfig config;
    CHECK_THROWS_WITH_AS(train_probe(docs, vocab, config), "corpus too small to form a dev slice",
                         ValidationError);
}

TEST_CASE("a unigram probe works through the same paths") {
    auto docs = testutil::make_docs({"a a b a b c"});
    Vocab vocab = build_vocab(docs, 1); // {<unk>, a, b, c}
    ProbeModel model(1, 0.75, static_cast<std::uint32_t>(vocab.size()));
    auto ids = encode_text(docs[0].text, vocab);
    model.ingest(ids);

    oracle::KnOracle reference(1, 0.75, static_cast<std::uint32_t>(vocab.size()));
    reference.add_document(ids);
    reference.finalize();

    double sum = 0.0;
    for (TokenId w = 0; w < vocab.size(); ++w) {
        double p = model.conditional_prob({}, w);
        CHECK(p == doctest::Approx(reference.prob({}, w)).epsilon(1e-12));
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Context is ignored beyond order-1 tokens.
    std::vector<TokenId> ctx = {1, 2};
    CHECK(model.conditional_prob(ctx, 1) == model.conditional_prob({}, 1));

    testutil::TempDir dir("probe_uni");
    model.save(dir.str("uni.model"));
    ProbeModel loaded = ProbeModel::load(dir.str("uni.model"));
    CHECK(loaded.nll_entropy(ids) == model.nll_entropy(ids));
}

TEST_CASE("models round-trip through their binary file") {
    Rng rng(83);
    auto docs = random_corpus(rng, 50, 15, 2, 12);
    Vocab vocab = build_vocab(docs, 1);
    ProbeModel model(3, 0.75, static_cast<std::uint32_t>(vocab.size()));
    for (const auto &doc : docs) {
        model.ingest(encode_text(doc.text, vocab));
    }

    testutil::TempDir dir("probe_rt");
    model.save(dir.str("probe.model"));
    ProbeModel loaded = ProbeModel::load(dir.str("probe.model"));
    CHECK(loaded.order() == model.order());
    CHECK(loaded.discount() == model.discount());
    CHECK(loaded.vocab_size() == model.vocab_size());
    for (const auto &doc : docs) {
        auto ids = encode_text(doc.text, vocab);
        CHECK(loaded.nll_entropy(ids) == model.nll_entropy(ids));
    }

    // Saving the reloaded model reproduces the file exactly.
    loaded.save(dir.str("probe2.model"));
    CHECK(testutil::read_file(dir.str("probe.model")) ==
          testutil::read_file(dir.str("probe2.model")));

    // A corrupt header is rejected.
    std::string bytes = testutil::read_file(dir.str("probe.model"));
    bytes[0] = 'X';
    testutil::write_file(dir.str("bad.model"), bytes);
    CHECK_THROWS_AS(ProbeModel::load(dir.str("bad.model")), IoError);
}

TEST_CASE("trace csv lists one row per chunk") {
    TrainingTrace trace;
    trace.chunk_losses = {3.5, 3.1};
    trace.chunk_tokens = {100, 200};
    trace.stop_reason = StopReason::stream_ended;
    trace.tokens_consumed = 200;
    testutil::TempDir dir("trace");
    save_trace_csv(trace, dir.str("trace.csv"));
    std::string body = testutil::read_file(dir.str("trace.csv"));
    CHECK(body == "chunk_index,heldout_nll,tokens_consumed\n0,3.5,100\n1,3.1000000000000001,200\n");
}

} // TEST_SUITE
