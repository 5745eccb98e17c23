#include "entroprune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "entroprune/errors.hpp"

namespace entroprune {

using nlohmann::json;

const char *to_string(UnscorablePolicy policy) {
    return policy == UnscorablePolicy::prune_first ? "prune_first" : "keep";
}

UnscorablePolicy unscorable_policy_from_string(const std::string &s) {
    if (s == "prune_first") {
        return UnscorablePolicy::prune_first;
    }
    if (s == "keep") {
        return UnscorablePolicy::keep;
    }
    throw ValidationError("unscorable_policy must be \"prune_first\" or \"keep\", got \"" + s +
                          "\"");
}

PruneManifest rank_and_prune(const std::vector<ScoreRecord> &scores,
                             const std::vector<std::string> &unscorable_ids, double eta_percent,
                             UnscorablePolicy policy, const std::string &score_file_digest) {
    if (!(eta_percent >= 0.0 && eta_percent < 100.0)) {
        throw ValidationError("pruning ratio must be in [0,100)");
    }
    if (scores.empty()) {
        throw ValidationError("cannot prune with an empty score list");
    }

    std::vector<const ScoreRecord *> ranked;
    ranked.reserve(scores.size());
    for (const auto &rec : scores) {
        ranked.push_back(&rec);
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoreRecord *a, const ScoreRecord *b) {
        if (a->score != b->score) {
            return a->score < b->score;
        }
        return a->id < b->id;
    });

    std::vector<std::string> unscorable_sorted = unscorable_ids;
    std::sort(unscorable_sorted.begin(), unscorable_sorted.end());

    const std::size_t n_scorable = ranked.size();
    const std::size_t prune_scored =
        static_cast<std::size_t>(std::floor(eta_percent / 100.0 * static_cast<double>(n_scorable)));

    PruneManifest manifest;
    manifest.eta_percent = eta_percent;
    manifest.total_documents = n_scorable + unscorable_sorted.size();
    manifest.unscorable_policy = policy;
    manifest.score_file_digest = score_file_digest;

    if (policy == UnscorablePolicy::prune_first) {
        manifest.pruned_ids = unscorable_sorted;
    } else {
        manifest.kept_ids = unscorable_sorted;
    }
    for (std::size_t i = 0; i < prune_scored; ++i) {
        manifest.pruned_ids.push_back(ranked[i]->id);
    }
    for (std::size_t i = prune_scored; i < n_scorable; ++i) {
        manifest.kept_ids.push_back(ranked[i]->id);
    }
    manifest.pruned_count = manifest.pruned_ids.size();
    return manifest;
}

CorpusManifest apply_manifest(const std::vector<Document> &corpus, const PruneManifest &manifest,
                              const std::string &out_dir, std::size_t shard_size) {
    std::unordered_set<std::string> kept(manifest.kept_ids.begin(), manifest.kept_ids.end());
    std::unordered_set<std::string> pruned(manifest.pruned_ids.begin(), manifest.pruned_ids.end());

    std::unordered_set<std::string> seen;
    seen.reserve(kept.size() + pruned.size());
    std::vector<Document> kept_docs;
    kept_docs.reserve(kept.size());
    for (const Document &doc : corpus) {
        bool in_kept = kept.count(doc.id) > 0;
        bool in_pruned = pruned.count(doc.id) > 0;
        if (!in_kept && !in_pruned) {
            throw ValidationError("corpus id " + doc.id + " not in manifest (stale manifest)");
        }
        seen.insert(doc.id);
        if (in_kept) {
            kept_docs.push_back(doc);
        }
    }
    for (const auto &id : manifest.kept_ids) {
        if (seen.find(id) == seen.end()) {
            throw ValidationError("manifest id " + id + " not in corpus");
        }
    }
    for (const auto &id : manifest.pruned_ids) {
        if (seen.find(id) == seen.end()) {
            throw ValidationError("manifest id " + id + " not in corpus");
        }
    }

    char eta_buf[32];
    std::snprintf(eta_buf, sizeof(eta_buf), "%.9g", manifest.eta_percent);
    std::string provenance = "pruned eta=" + std::string(eta_buf) + "% kept=" +
                             std::to_string(manifest.kept_ids.size()) + "/" +
                             std::to_string(manifest.total_documents) +
                             " score_digest=" + manifest.score_file_digest;
    return write_corpus(kept_docs, out_dir, shard_size, provenance);
}

void save_prune_manifest(const PruneManifest &manifest, const std::string &path) {
    json j;
    j["eta_percent"] = manifest.eta_percent;
    j["total_documents"] = manifest.total_documents;
    j["pruned_count"] = manifest.pruned_count;
    j["kept_ids"] = manifest.kept_ids;
    j["pruned_ids"] = manifest.pruned_ids;
    j["score_file_digest"] = manifest.score_file_digest;
    j["unscorable_policy"] = to_string(manifest.unscorable_policy);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write prune manifest: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failure in prune manifest: " + path);
    }
}

PruneManifest load_prune_manifest(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open prune manifest: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw IoError("malformed prune manifest: " + path);
    }
    PruneManifest m;
    try {
        m.eta_percent = j.at("eta_percent").get<double>();
        m.total_documents = j.at("total_documents").get<std::uint64_t>();
        m.pruned_count = j.at("pruned_count").get<std::uint64_t>();
        m.kept_ids = j.at("kept_ids").get<std::vector<std::string>>();
        m.pruned_ids = j.at("pruned_ids").get<std::vector<std::string>>();
        m.score_file_digest = j.at("score_file_digest").get<std::string>();
        m.unscorable_policy =
            unscorable_policy_from_string(j.at("unscorable_policy").get<std::string>());
    } catch (const json::exception &e) {
        throw IoError("malformed prune manifest: " + path + " (" + e.what() + ")");
    }
    return m;
}

} // namespace entroprune
