#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "entroprune/corpus_io.hpp"
#include "entroprune/rng.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("entroprune_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::string str(const std::string &name = "") const {
        return name.empty() ? path_.string() : (path_ / name).string();
    }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<entroprune::Document> make_docs(const std::vector<std::string> &texts,
                                                   const std::string &id_prefix = "doc-") {
    std::vector<entroprune::Document> docs;
    docs.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        docs.push_back({id_prefix + std::to_string(i), texts[i], 0});
    }
    return docs;
}

// "w00" .. style synthetic word inventory.
inline std::vector<std::string> word_inventory(std::size_t n) {
    std::vector<std::string> words;
    words.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "w%03zu", i);
        words.emplace_back(buf);
    }
    return words;
}

inline std::string random_sentence(entroprune::Rng &rng, const std::vector<std::string> &words,
                                   std::size_t n_tokens) {
    std::string text;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (i > 0) {
            text += ' ';
        }
        text += words[rng.below(words.size())];
    }
    return text;
}

} // namespace testutil
