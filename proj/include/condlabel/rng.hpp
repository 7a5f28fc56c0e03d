#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace condlabel {

using Rng = std::mt19937_64;

// Seed for a named sub-stream of a master seed. Streams with different names
// are decorrelated; the mapping is stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

inline Rng make_stream(std::uint64_t master, std::string_view stream) {
  return Rng(derive_seed(master, stream));
}

// Stream names used across the library.
namespace streams {
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kShuffle = "shuffle";
inline constexpr std::string_view kNegatives = "negatives";
inline constexpr std::string_view kSynthesis = "synthesis";
inline constexpr std::string_view kSplit = "split";
}  // namespace streams

}  // namespace condlabel
