#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace magsim {

// FNV-1a, 64-bit; used for config and dataset provenance tags.
inline uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char ch : data) {
        h ^= static_cast<uint8_t>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t value);

// Hash of a file's raw bytes; throws DataError when unreadable.
uint64_t fnv1a64_file(const std::string& path);

}  // namespace magsim
