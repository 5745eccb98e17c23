#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace entroprune {

// One corpus sample. `n_tokens` is 0 until the document has been
// tokenized; empty text is representable here and rejected at scoring.
struct Document {
    std::string id;
    std::string text;
    std::uint64_t n_tokens = 0;
};

struct CorpusManifest {
    std::vector<std::string> shard_paths; // relative to the manifest's directory
    std::uint64_t document_count = 0;
    std::string created_from;
    std::string content_digest; // sha256 over shard bytes, in shard order
};

// Streams documents out of newline-delimited JSON shards in file order
// then record order. Records without an "id" get "<shard>:<record>"
// (zero-based). Malformed records raise IoError naming shard and line.
class CorpusReader {
  public:
    explicit CorpusReader(std::vector<std::string> paths);

    // Fills `doc` and returns true, or returns false at end of stream.
    bool next(Document &doc);

  private:
    bool open_next_shard();

    std::vector<std::string> paths_;
    std::size_t shard_index_ = 0;
    std::uint64_t record_index_ = 0;
    std::uint64_t line_number_ = 0;
    std::ifstream in_;
    bool shard_open_ = false;
};

// Reads the whole corpus into memory, preserving stream order.
std::vector<Document> read_corpus(const std::vector<std::string> &paths);

// Writes documents into `out_dir` as shards of `shard_size` records
// plus a manifest.json. Returns the manifest. Re-running with the same
// input produces byte-identical files.
CorpusManifest write_corpus(const std::vector<Document> &documents, const std::string &out_dir,
                            std::size_t shard_size, const std::string &created_from);

// sha256 over the concatenated bytes of the given files.
std::string digest_files(const std::vector<std::string> &paths);

void save_corpus_manifest(const CorpusManifest &manifest, const std::string &path);
CorpusManifest load_corpus_manifest(const std::string &path);

} // namespace entroprune
