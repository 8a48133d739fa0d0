#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vid2scenic::util {

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);

/// 64-bit FNV-1a; stable across platforms, used for seeds.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace vid2scenic::util
