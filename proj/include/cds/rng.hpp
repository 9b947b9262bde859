#pragma once

#include <cstdint>

#include "cds/tensor.hpp"

namespace cds::rng {

// SplitMix64 (Steele, Lea, Flood 2014). The stream is counter based: the
// i-th output of a stream seeded with s is mix(s + (i + 1) * kGolden), so
// any element can be generated independently of the others.
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t index) {
  return mix(seed + (index + 1) * kGolden);
}

// Child stream seed; distinct stream ids give unrelated streams.
constexpr std::uint64_t split(std::uint64_t seed, std::uint64_t stream) {
  return mix(seed ^ mix(stream + kGolden));
}

// Uniform in the open interval (0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Element i of the standard normal field for `seed`. Box-Muller on the pair
// (at(seed, 2j), at(seed, 2j+1)) with j = i / 2; even i take the cosine
// branch and odd i the sine branch.
double normal_at(std::uint64_t seed, std::uint64_t index);

LatentTensor normal_tensor(std::uint64_t seed, Shape shape);

}  // namespace cds::rng
