#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace evae {

/// 64-bit FNV-1a; used for checkpoint identity checks.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Git blob id: SHA-1 of "blob <size>\0" followed by the content, as hex.
std::string git_blob_hash(std::string_view content);

}  // namespace evae
