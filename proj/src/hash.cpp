#include "toolprune/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "toolprune/error.hpp"

namespace toolprune {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

namespace {

std::string hex_digest(const unsigned char* digest, unsigned len) {
  static const char* kHex = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(len) * 2, '0');
  for (unsigned i = 0; i < len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  return hex_digest(digest, len);
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha256 context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (in.bad()) throw IoError("read failed on " + path.string());
  return hex_digest(digest, len);
}

std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound < 2) return 0;
  // Rejection sampling (arc4random_uniform scheme): discard the first
  // 2^64 mod bound values so the remainder is uniform. mt19937_64 output is
  // specified bit-exactly, so results are identical across platforms; the
  // standard distributions are not.
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k,
                                                      std::mt19937_64& rng) {
  if (k > n) throw InvalidArgument("sample size exceeds population");
  std::vector<std::uint32_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0u);
  // Partial Fisher-Yates: after i swaps the prefix holds an unbiased sample.
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uint64_t j = i + bounded_rand(rng, n - i);
    std::swap(pool[i], pool[static_cast<std::uint32_t>(j)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace toolprune
