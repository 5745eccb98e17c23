#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sys/wait.h>

#include "entroprune/pipeline.hpp"
#include "entroprune/pruning.hpp"
#include "entroprune/rng.hpp"
#include "entroprune/scoring.hpp"
#include "entroprune/sha256.hpp"
#include "test_util.hpp"

using namespace entroprune;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string &args) {
    std::string cmd = std::string(ENTROPRUNE_BIN) + " " + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_cli_stderr(const std::string &args, const std::string &stderr_file) {
    std::string cmd = std::string(ENTROPRUNE_BIN) + " " + args + " 2>" + stderr_file;
    (void)!std::system(cmd.c_str());
    return testutil::read_file(stderr_file);
}

// Small corpus with enough repetition for a min_count 2 vocabulary.
void write_toy_corpus(const std::string &path, std::size_t n_docs = 12) {
    Rng rng(7);
    auto words = testutil::word_inventory(6);
    std::string body;
    for (std::size_t i = 0; i < n_docs; ++i) {
        body += "{\"text\":\"" + testutil::random_sentence(rng, words, 6 + rng.below(6)) + "\"}\n";
    }
    testutil::write_file(path, body);
}

std::string toy_config(const testutil::TempDir &dir, const std::string &out_dir,
                       const std::map<std::string, std::string> &overrides = {}) {
    std::map<std::string, std::string> kv = {
        {"corpus", dir.str("corpus.jsonl")},
        {"out_dir", out_dir},
        {"min_count", "1"},
        {"alpha", "1.0"},
        {"order", "2"},
        {"discount", "0.75"},
        {"chunk_docs", "3"},
        {"epsilon", "0.005"},
        {"patience", "2"},
        {"budget_fraction", "1.0"},
        {"dev_fraction", "0.2"},
        {"seed", "3"},
        {"eta_percent", "33.4"},
        {"unscorable_policy", "prune_first"},
        {"shard_size", "5"},
        {"workers", "1"},
        {"report_bins", "4"},
        {"report_top_k", "3"},
        {"report_etas", "0, 25, 50"},
    };
    for (const auto &[k, v] : overrides) {
        kv[k] = v;
    }
    std::string body = "# toy pipeline configuration\n";
    for (const auto &[k, v] : kv) {
        body += k + " = " + v + "\n";
    }
    std::string path = dir.str("config.txt");
    testutil::write_file(path, body);
    return path;
}

std::map<std::string, std::string> artifact_digests(const std::string &out_dir) {
    std::map<std::string, std::string> digests;
    for (const auto &entry : fs::recursive_directory_iterator(out_dir)) {
        if (entry.is_regular_file()) {
            digests[fs::relative(entry.path(), out_dir).string()] =
                Sha256::of_file(entry.path().string());
        }
    }
    return digests;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("pipeline produces the complete artifact set on a toy corpus") {
    testutil::TempDir dir("cli_pipeline");
    // Three documents, two sharing vocabulary; eta 33.4 floors to one pruned doc.
    testutil::write_file(dir.str("corpus.jsonl"),
                         "{\"text\":\"red red blue blue red\"}\n"
                         "{\"text\":\"red blue red blue\"}\n"
                         "{\"text\":\"green green red blue\"}\n");
    std::string config = toy_config(dir, dir.str("out"), {{"dev_fraction", "0.34"},
                                                          {"chunk_docs", "1"}});
    REQUIRE(run_cli("pipeline --config " + config) == 0);

    for (const char *name :
         {artifact::kVocab, artifact::kFrequency, artifact::kProbeModel, artifact::kTrace,
          artifact::kScores, artifact::kUnscorable, artifact::kPruneManifest, artifact::kSummary,
          artifact::kHistHq, artifact::kHistHf, artifact::kHistScore, artifact::kPruningCurve,
          artifact::kRarityGap, artifact::kConfigUsed}) {
        CHECK_MESSAGE(fs::exists(fs::path(dir.str("out")) / name), name);
    }
    CHECK(fs::exists(fs::path(dir.str("out")) / artifact::kPrunedDir / "manifest.json"));

    PruneManifest manifest =
        load_prune_manifest((fs::path(dir.str("out")) / artifact::kPruneManifest).string());
    CHECK(manifest.total_documents == 3);
    CHECK(manifest.kept_ids.size() == 2); // floor(0.334 * 3) = 1 pruned
    CorpusManifest pruned = load_corpus_manifest(
        (fs::path(dir.str("out")) / artifact::kPrunedDir / "manifest.json").string());
    CHECK(pruned.document_count == 2);
}

TEST_CASE("rerunning the pipeline reproduces identical artifact digests") {
    testutil::TempDir dir("cli_idempotent");
    write_toy_corpus(dir.str("corpus.jsonl"));
    std::string config = toy_config(dir, dir.str("out"));

    REQUIRE(run_cli("pipeline --config " + config) == 0);
    auto first = artifact_digests(dir.str("out"));
    REQUIRE(run_cli("pipeline --config " + config) == 0);
    auto second = artifact_digests(dir.str("out"));
    CHECK(first == second);
    CHECK(first.size() >= 14);
}

TEST_CASE("invalid eta fails fast without touching the output directory") {
    testutil::TempDir dir("cli_failfast");
    write_toy_corpus(dir.str("corpus.jsonl"));
    std::string config = toy_config(dir, dir.str("out"), {{"eta_percent", "100"}});
    std::string err = run_cli_stderr("pipeline --config " + config, dir.str("stderr.txt"));
    CHECK(run_cli("pipeline --config " + config) == 1);
    CHECK(err.find("pruning ratio must be in [0,100)") != std::string::npos);
    CHECK(!fs::exists(dir.str("out")));
}

TEST_CASE("prune before score names the missing step") {
    testutil::TempDir dir("cli_order");
    write_toy_corpus(dir.str("corpus.jsonl"));
    std::string config = toy_config(dir, dir.str("out"));
    std::string err = run_cli_stderr("prune --config " + config, dir.str("stderr.txt"));
    CHECK(run_cli("prune --config " + config) == 1);
    CHECK(err.find("score") != std::string::npos);
}

TEST_CASE("missing corpus file exits with the io status") {
    testutil::TempDir dir("cli_io");
    std::string config = toy_config(dir, dir.str("out")); // corpus.jsonl never written
    CHECK(run_cli("build-vocab --config " + config) == 2);
}

TEST_CASE("steps run individually in dependency order") {
    testutil::TempDir dir("cli_steps");
    write_toy_corpus(dir.str("corpus.jsonl"));
    std::string config = toy_config(dir, dir.str("out"));
    CHECK(run_cli("build-vocab --config " + config) == 0);
    CHECK(run_cli("count-freq --config " + config) == 0);
    CHECK(run_cli("train-probe --config " + config) == 0);
    CHECK(run_cli("score --config " + config) == 0);
    CHECK(run_cli("prune --config " + config) == 0);
    CHECK(run_cli("report --config " + config) == 0);
    CHECK(fs::exists(fs::path(dir.str("out")) / artifact::kRarityGap));
}

TEST_CASE("external scores flow through with source external") {
    testutil::TempDir dir("cli_external");
    write_toy_corpus(dir.str("corpus.jsonl"), 10);
    std::string config = toy_config(dir, dir.str("out"));
    REQUIRE(run_cli("build-vocab --config " + config) == 0);
    REQUIRE(run_cli("count-freq --config " + config) == 0);

    std::string nll;
    for (int i = 0; i < 10; ++i) {
        nll += "{\"id\":\"0:" + std::to_string(i) + "\",\"nll_per_word\":" +
               std::to_string(1.0 + 0.1 * i) + "}\n";
    }
    testutil::write_file(dir.str("nll.jsonl"), nll);

    REQUIRE(run_cli("score --config " + config + " --external-scores " + dir.str("nll.jsonl")) ==
            0);
    auto records = load_scores_jsonl((fs::path(dir.str("out")) / artifact::kScores).string());
    REQUIRE(!records.empty());
    for (const auto &rec : records) {
        CHECK(rec.source == ScoreSource::external);
    }
}

TEST_CASE("eta override changes the manifest") {
    testutil::TempDir dir("cli_eta");
    write_toy_corpus(dir.str("corpus.jsonl"), 10);
    std::string config = toy_config(dir, dir.str("out"));
    REQUIRE(run_cli("pipeline --config " + config + " --eta 50") == 0);
    PruneManifest manifest =
        load_prune_manifest((fs::path(dir.str("out")) / artifact::kPruneManifest).string());
    CHECK(manifest.eta_percent == 50.0);
    CHECK(manifest.pruned_count == 5);
}

TEST_CASE("unknown config keys are rejected with the line number") {
    testutil::TempDir dir("cli_badkey");
    write_toy_corpus(dir.str("corpus.jsonl"));
    testutil::write_file(dir.str("config.txt"),
                         "corpus = " + dir.str("corpus.jsonl") + "\nout_dir = " + dir.str("out") +
                             "\nmispelled_knob = 3\n");
    std::string err =
        run_cli_stderr("build-vocab --config " + dir.str("config.txt"), dir.str("stderr.txt"));
    CHECK(run_cli("build-vocab --config " + dir.str("config.txt")) == 1);
    CHECK(err.find("unknown key") != std::string::npos);
    CHECK(err.find("line 3") != std::string::npos);
}

} // TEST_SUITE
