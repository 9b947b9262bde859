#include "cds/rng.hpp"

#include <cmath>
#include <numbers>

#include "cds/kernels.hpp"

namespace cds::rng {

double normal_at(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t pair = index / 2;
  const double u1 = to_unit(at(seed, 2 * pair));
  const double u2 = to_unit(at(seed, 2 * pair + 1));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
}

LatentTensor normal_tensor(std::uint64_t seed, Shape shape) {
  LatentTensor out(shape);
  kernels::fill_normal(seed, out.mutable_values());
  return out;
}

}  // namespace cds::rng
