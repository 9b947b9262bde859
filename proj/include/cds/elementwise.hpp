#pragma once

#include "cds/tensor.hpp"

namespace cds {

enum class ElementwiseOp { Add, Sub, Scale, Hadamard };

// Tensor-tensor form; Scale is scalar-only and rejected here.
LatentTensor elementwise(ElementwiseOp op, const LatentTensor& a,
                         const LatentTensor& b);
// Tensor-scalar form; Hadamard with a scalar is the same as Scale.
LatentTensor elementwise(ElementwiseOp op, const LatentTensor& a, double b);

inline LatentTensor add(const LatentTensor& a, const LatentTensor& b) {
  return elementwise(ElementwiseOp::Add, a, b);
}
inline LatentTensor sub(const LatentTensor& a, const LatentTensor& b) {
  return elementwise(ElementwiseOp::Sub, a, b);
}
inline LatentTensor hadamard(const LatentTensor& a, const LatentTensor& b) {
  return elementwise(ElementwiseOp::Hadamard, a, b);
}
inline LatentTensor scaled(const LatentTensor& a, double s) {
  return elementwise(ElementwiseOp::Scale, a, s);
}
inline LatentTensor neg(const LatentTensor& a) { return scaled(a, -1.0); }

// alpha * a + beta * b
LatentTensor axpby(double alpha, const LatentTensor& a, double beta,
                   const LatentTensor& b);

}  // namespace cds
