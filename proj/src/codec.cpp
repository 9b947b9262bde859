#include "cds/codec.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cds/error.hpp"

namespace cds {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'S', 'T'};
constexpr std::uint32_t kRank = 3;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[offset + i]} << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> tensor_write(const LatentTensor& tensor) {
  std::vector<std::uint8_t> out;
  out.reserve(kCdstHeaderBytes + 4 * tensor.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCdstVersion);
  put_u32(out, kRank);
  put_u32(out, tensor.shape().channels);
  put_u32(out, tensor.shape().height);
  put_u32(out, tensor.shape().width);
  for (float v : tensor.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

LatentTensor tensor_read(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "CDST: missing magic");
  }
  if (bytes.size() < kCdstHeaderBytes) {
    fail(ErrorCode::Truncated, "CDST: truncated header (" +
                                   std::to_string(bytes.size()) + " bytes)");
  }
  std::uint32_t version = get_u32(bytes, 4);
  if (version != kCdstVersion) {
    fail(ErrorCode::VersionMismatch,
         "CDST: unsupported version " + std::to_string(version));
  }
  std::uint32_t rank = get_u32(bytes, 8);
  if (rank != kRank) {
    fail(ErrorCode::VersionMismatch, "CDST: unsupported rank " + std::to_string(rank));
  }
  Shape shape{get_u32(bytes, 12), get_u32(bytes, 16), get_u32(bytes, 20)};
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    fail(ErrorCode::InvalidArgument, "CDST: zero dimension in " + to_string(shape));
  }
  std::size_t count = shape.size();
  std::size_t payload = bytes.size() - kCdstHeaderBytes;
  if (payload / 4 < count) {
    fail(ErrorCode::Truncated, "CDST: payload holds " + std::to_string(payload / 4) +
                                   " values, header declares " + std::to_string(count));
  }
  if (payload != 4 * count) {
    fail(ErrorCode::Truncated, "CDST: " + std::to_string(payload - 4 * count) +
                                   " trailing bytes after payload");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kCdstHeaderBytes + 4 * i));
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::NonFinite, "CDST: non-finite value at index " + std::to_string(i));
    }
  }
  return LatentTensor(shape, std::move(values));
}

LatentTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return tensor_read(bytes);
}

void save_tensor(const std::filesystem::path& path, const LatentTensor& tensor) {
  auto bytes = tensor_write(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace cds
