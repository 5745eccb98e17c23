#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace entroprune {

// Incremental SHA-256. Used for corpus content digests and artifact
// fingerprints in manifests.
class Sha256 {
  public:
    Sha256();

    void update(const void *data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    // Finalizes and returns the digest as 64 lowercase hex characters.
    // The object must not be updated afterwards.
    std::string hex_digest();

    static std::string of(std::string_view s);
    static std::string of_file(const std::string &path);

  private:
    void process_block(const std::uint8_t *block);

    std::uint32_t h_[8];
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
    std::uint64_t total_bits_ = 0;
};

} // namespace entroprune
