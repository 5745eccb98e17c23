#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace entroprune {

// Transparent hash so string-keyed maps accept string_view lookups
// without allocating.
struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

template <typename V>
using StringKeyMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;

} // namespace entroprune
