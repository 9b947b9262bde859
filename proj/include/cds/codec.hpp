#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cds/tensor.hpp"

namespace cds {

// CDST wire format, little-endian throughout:
//   "CDST" | u32 version (=1) | u32 rank (=3) | u32 C | u32 H | u32 W |
//   C*H*W binary32 values, row-major.
inline constexpr std::uint32_t kCdstVersion = 1;
inline constexpr std::size_t kCdstHeaderBytes = 24;

std::vector<std::uint8_t> tensor_write(const LatentTensor& tensor);
LatentTensor tensor_read(std::span<const std::uint8_t> bytes);

LatentTensor load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const LatentTensor& tensor);

}  // namespace cds
