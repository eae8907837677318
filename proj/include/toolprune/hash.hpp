#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace toolprune {

// FNV-1a 64-bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data);

// Finalizing mixer (splitmix64). FNV-1a leaves the top bits of keys that
// share a long prefix strongly correlated; mixing restores full avalanche
// so the high bits can be used as a uniform draw.
std::uint64_t mix64(std::uint64_t x);

// Hex-encoded SHA-256 (lowercase).
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// Unbiased uniform draw from [0, bound) by rejection sampling.
// mt19937_64 output is specified bit-exactly by the standard, so results
// are reproducible across platforms (std::uniform_int_distribution is not).
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound);

// k distinct values from {1, ..., n}, ascending. Partial Fisher-Yates.
std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k,
                                                      std::mt19937_64& rng);

}  // namespace toolprune
