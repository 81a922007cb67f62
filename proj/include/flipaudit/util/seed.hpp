#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace flipaudit {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed, a label naming the
// consumer, and any number of indices. Every random draw in the pipeline is
// seeded this way; no generator is shared between consumers.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = mix64(h ^ mix64(master));
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(master, label, indices));
}

}  // namespace flipaudit
