#pragma once

#include <cstdint>

namespace kga::util {

/// Counter-based seed derivation: every stage of a run draws its seed from
/// (root, stage, index) so re-running one stage never shifts another.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stage, std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(root) ^ stage) ^ index);
}

// Stage tags for derive_seed.
namespace stage {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kOriginal = 3;
inline constexpr std::uint64_t kHelpers = 4;
inline constexpr std::uint64_t kUnlearn = 5;
inline constexpr std::uint64_t kSisa = 6;
inline constexpr std::uint64_t kTeacher = 7;
inline constexpr std::uint64_t kAttack = 8;
inline constexpr std::uint64_t kInit = 9;
inline constexpr std::uint64_t kShuffle = 10;
}  // namespace stage

}  // namespace kga::util
