#include "entroprune/corpus_io.hpp"

#include <filesystem>
#include <json.hpp>

#include "entroprune/errors.hpp"
#include "entroprune/sha256.hpp"
#include "entroprune/unicode.hpp"

namespace entroprune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string record_error(std::size_t shard, std::uint64_t line, const std::string &what,
                         const std::string &path) {
    return "shard " + std::to_string(shard) + ", line " + std::to_string(line) + ": " + what +
           " [" + path + "]";
}

std::string shard_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "shard-%06zu.jsonl", index);
    return buf;
}

} // namespace

CorpusReader::CorpusReader(std::vector<std::string> paths) : paths_(std::move(paths)) {
    for (const auto &p : paths_) {
        if (!fs::exists(p)) {
            throw IoError("corpus shard not found: " + p);
        }
    }
}

bool CorpusReader::open_next_shard() {
    if (shard_index_ >= paths_.size()) {
        return false;
    }
    in_.clear();
    in_.open(paths_[shard_index_], std::ios::binary);
    if (!in_) {
        throw IoError("cannot open corpus shard: " + paths_[shard_index_]);
    }
    shard_open_ = true;
    record_index_ = 0;
    line_number_ = 0;
    return true;
}

bool CorpusReader::next(Document &doc) {
    for (;;) {
        if (!shard_open_ && !open_next_shard()) {
            return false;
        }
        std::string line;
        if (!std::getline(in_, line)) {
            if (in_.bad()) {
                throw IoError("read failure in corpus shard: " + paths_[shard_index_]);
            }
            in_.close();
            ++shard_index_;
            shard_open_ = false;
            continue;
        }
        ++line_number_;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::string &path = paths_[shard_index_];
        if (!utf8_valid(line)) {
            throw IoError(record_error(shard_index_, line_number_, "invalid UTF-8", path));
        }
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw IoError(record_error(shard_index_, line_number_, "malformed record", path));
        }
        auto text_it = rec.find("text");
        if (text_it == rec.end()) {
            throw IoError(record_error(shard_index_, line_number_, "missing \"text\" field", path));
        }
        if (!text_it->is_string()) {
            throw IoError(record_error(shard_index_, line_number_, "\"text\" is not a string", path));
        }
        doc.text = text_it->get<std::string>();
        auto id_it = rec.find("id");
        if (id_it != rec.end()) {
            if (!id_it->is_string()) {
                throw IoError(record_error(shard_index_, line_number_, "\"id\" is not a string", path));
            }
            doc.id = id_it->get<std::string>();
        } else {
            doc.id = std::to_string(shard_index_) + ":" + std::to_string(record_index_);
        }
        doc.n_tokens = 0;
        ++record_index_;
        return true;
    }
}

std::vector<Document> read_corpus(const std::vector<std::string> &paths) {
    CorpusReader reader(paths);
    std::vector<Document> docs;
    Document doc;
    while (reader.next(doc)) {
        docs.push_back(std::move(doc));
    }
    return docs;
}

CorpusManifest write_corpus(const std::vector<Document> &documents, const std::string &out_dir,
                            std::size_t shard_size, const std::string &created_from) {
    if (shard_size == 0) {
        throw ValidationError("shard_size must be >= 1");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory: " + out_dir);
    }

    CorpusManifest manifest;
    manifest.created_from = created_from;
    manifest.document_count = documents.size();

    Sha256 digest;
    std::size_t shard_index = 0;
    std::size_t written_in_shard = 0;
    std::ofstream out;

    auto close_shard = [&]() {
        if (!out.is_open()) {
            return;
        }
        out.flush();
        if (!out) {
            throw IoError("write failure in shard: " +
                          (fs::path(out_dir) / manifest.shard_paths.back()).string());
        }
        out.close();
    };

    for (const Document &doc : documents) {
        if (written_in_shard == 0) {
            std::string name = shard_file_name(shard_index);
            out.open(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw IoError("cannot open shard for write: " +
                              (fs::path(out_dir) / name).string());
            }
            manifest.shard_paths.push_back(name);
        }
        json rec;
        rec["id"] = doc.id;
        rec["text"] = doc.text;
        std::string line = rec.dump();
        line += '\n';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        digest.update(line);
        ++written_in_shard;
        if (written_in_shard == shard_size) {
            close_shard();
            ++shard_index;
            written_in_shard = 0;
        }
    }
    close_shard();

    manifest.content_digest = digest.hex_digest();
    save_corpus_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

std::string digest_files(const std::vector<std::string> &paths) {
    Sha256 digest;
    for (const auto &path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open file for digest: " + path);
        }
        char buf[1 << 16];
        while (in) {
            in.read(buf, sizeof(buf));
            std::streamsize got = in.gcount();
            if (got > 0) {
                digest.update(buf, static_cast<std::size_t>(got));
            }
        }
        if (in.bad()) {
            throw IoError("read failure while digesting: " + path);
        }
    }
    return digest.hex_digest();
}

void save_corpus_manifest(const CorpusManifest &manifest, const std::string &path) {
    json j;
    j["shard_paths"] = manifest.shard_paths;
    j["document_count"] = manifest.document_count;
    j["created_from"] = manifest.created_from;
    j["content_digest"] = manifest.content_digest;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failure in manifest: " + path);
    }
}

CorpusManifest load_corpus_manifest(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open manifest: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw IoError("malformed manifest: " + path);
    }
    CorpusManifest m;
    try {
        m.shard_paths = j.at("shard_paths").get<std::vector<std::string>>();
        m.document_count = j.at("document_count").get<std::uint64_t>();
        m.created_from = j.at("created_from").get<std::string>();
        m.content_digest = j.at("content_digest").get<std::string>();
    } catch (const json::exception &e) {
        throw IoError("malformed manifest: " + path + " (" + e.what() + ")");
    }
    return m;
}

} // namespace entroprune
