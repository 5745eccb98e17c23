#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/scoring.hpp"

namespace entroprune {

enum class UnscorablePolicy { prune_first, keep };

const char *to_string(UnscorablePolicy policy);
UnscorablePolicy unscorable_policy_from_string(const std::string &s);

// Result of ranking by score and pruning the bottom eta percent.
// pruned_ids holds unscorable documents first (under prune_first),
// then scored documents in ascending (score, id) order; kept_ids are
// the remaining documents in ascending (score, id) order.
struct PruneManifest {
    double eta_percent = 0.0;
    std::uint64_t total_documents = 0;
    std::uint64_t pruned_count = 0;
    std::vector<std::string> kept_ids;
    std::vector<std::string> pruned_ids;
    std::string score_file_digest;
    UnscorablePolicy unscorable_policy = UnscorablePolicy::prune_first;
};

// Sorts scorable documents ascending by (score, id) and prunes the
// bottom floor(eta/100 * N_scorable). Unscorable documents do not
// consume the eta budget: prune_first removes them ahead of any scored
// document, keep retains them.
PruneManifest rank_and_prune(const std::vector<ScoreRecord> &scores,
                             const std::vector<std::string> &unscorable_ids, double eta_percent,
                             UnscorablePolicy policy, const std::string &score_file_digest = "");

// Writes the kept documents in original corpus order. Errors when the
// manifest references an id missing from the corpus or vice versa.
CorpusManifest apply_manifest(const std::vector<Document> &corpus, const PruneManifest &manifest,
                              const std::string &out_dir, std::size_t shard_size);

void save_prune_manifest(const PruneManifest &manifest, const std::string &path);
PruneManifest load_prune_manifest(const std::string &path);

} // namespace entroprune
