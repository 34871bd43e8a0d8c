#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small text utilities shared by the embedder, the sparse retriever and the
// answer parser.
namespace iotllm::text {

/// Lowercases ASCII and splits on anything that is not an ASCII letter or
/// digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Shortest decimal string that round-trips to `value`.
std::string shortest(double value);

}  // namespace iotllm::text
