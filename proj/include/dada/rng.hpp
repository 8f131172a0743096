#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dada {

// 64-bit FNV-1a; used for seed derivation and content hashing.
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                                 std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a_bytes(s.data(), s.size(), h);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed split: a task seed depends only on the master seed and
// the task's identity, never on scheduling order or on how many sibling
// tasks exist.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = fnv1a(tag);
  for (std::uint64_t idx : indices) h = fnv1a_bytes(&idx, sizeof idx, h);
  return splitmix64(master ^ h);
}

// Seeded random stream. Draw order is part of every caller's contract:
// identical seeds give identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace dada
