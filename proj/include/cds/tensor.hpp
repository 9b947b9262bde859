#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cds {

struct Shape {
  std::uint32_t channels = 1;
  std::uint32_t height = 1;
  std::uint32_t width = 1;

  std::size_t size() const {
    return std::size_t{channels} * height * width;
  }
  std::size_t plane() const { return std::size_t{height} * width; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense C x H x W float32 tensor, row-major with channels outermost.
///
/// Holds the optimized latent and every noise prediction. Construction
/// validates the shape and that all values are finite; a LatentTensor that
/// exists is always well formed.
class LatentTensor {
 public:
  LatentTensor() = default;
  explicit LatentTensor(Shape shape, float fill = 0.0f);
  LatentTensor(Shape shape, std::vector<float> values);

  static LatentTensor zeros(Shape shape) { return LatentTensor(shape); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const std::vector<float>& values() const { return values_; }
  // Mutable access bypasses the finiteness check; kernels that write through
  // it are expected to call check_finite() on their result.
  std::span<float> mutable_values() { return values_; }

  float at(std::uint32_t c, std::uint32_t h, std::uint32_t w) const {
    return values_[(std::size_t{c} * shape_.height + h) * shape_.width + w];
  }
  float& at(std::uint32_t c, std::uint32_t h, std::uint32_t w) {
    return values_[(std::size_t{c} * shape_.height + h) * shape_.width + w];
  }

  bool all_finite() const;
  void check_finite(const std::string& context) const;

 private:
  Shape shape_{};
  std::vector<float> values_;
};

void check_same_shape(const LatentTensor& a, const LatentTensor& b,
                      const char* op);

/// Identifier naming a prompt condition registered at a backend.
struct ConditionRef {
  std::string id;

  explicit ConditionRef(std::string name);
  ConditionRef() = default;
  friend bool operator==(const ConditionRef&, const ConditionRef&) = default;
};

/// A concept adapter and the scale it is applied with.
struct AdapterSpec {
  std::string id;
  double scale = 0.8;

  AdapterSpec() = default;
  AdapterSpec(std::string name, double s);
  friend bool operator==(const AdapterSpec&, const AdapterSpec&) = default;
};

// Reductions over whole tensors, accumulated in double.
double l2_norm(const LatentTensor& a);
double l2_distance(const LatentTensor& a, const LatentTensor& b);
double max_abs(const LatentTensor& a);

}  // namespace cds
