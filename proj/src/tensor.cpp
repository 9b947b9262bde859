#include "cds/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "cds/elementwise.hpp"
#include "cds/error.hpp"
#include "cds/kernels.hpp"

namespace cds {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "bad_magic";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::UnknownCondition: return "unknown_condition";
    case ErrorCode::UnknownAdapter: return "unknown_adapter";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::Protocol: return "protocol";
    case ErrorCode::ServerError: return "server_error";
    case ErrorCode::NumericalAbort: return "numerical_abort";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

namespace {

void check_shape(const Shape& s) {
  if (s.channels == 0 || s.height == 0 || s.width == 0) {
    fail(ErrorCode::InvalidArgument,
         "tensor dimensions must be positive, got " + to_string(s));
  }
}

}  // namespace

LatentTensor::LatentTensor(Shape shape, float fill) : shape_(shape) {
  check_shape(shape_);
  if (!std::isfinite(fill)) fail(ErrorCode::NonFinite, "non-finite fill value");
  values_.assign(shape_.size(), fill);
}

LatentTensor::LatentTensor(Shape shape, std::vector<float> values)
    : shape_(shape), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != shape_.size()) {
    fail(ErrorCode::ShapeMismatch,
         "tensor " + to_string(shape_) + " needs " +
             std::to_string(shape_.size()) + " values, got " +
             std::to_string(values_.size()));
  }
  check_finite("tensor construction");
}

bool LatentTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](float v) { return std::isfinite(v); });
}

void LatentTensor::check_finite(const std::string& context) const {
  auto it = std::find_if(values_.begin(), values_.end(),
                         [](float v) { return !std::isfinite(v); });
  if (it != values_.end()) {
    fail(ErrorCode::NonFinite,
         context + ": non-finite value at index " +
             std::to_string(it - values_.begin()));
  }
}

void check_same_shape(const LatentTensor& a, const LatentTensor& b,
                      const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": shape " +
                                       to_string(a.shape()) + " vs " +
                                       to_string(b.shape()));
  }
}

ConditionRef::ConditionRef(std::string name) : id(std::move(name)) {
  if (id.empty()) fail(ErrorCode::InvalidArgument, "empty condition id");
}

AdapterSpec::AdapterSpec(std::string name, double s)
    : id(std::move(name)), scale(s) {
  if (id.empty()) fail(ErrorCode::InvalidArgument, "empty adapter id");
  if (!std::isfinite(scale)) {
    fail(ErrorCode::InvalidArgument, "adapter '" + id + "' scale not finite");
  }
}

double l2_norm(const LatentTensor& a) {
  double acc = 0.0;
  for (float v : a.values()) acc += double{v} * v;
  return std::sqrt(acc);
}

double l2_distance(const LatentTensor& a, const LatentTensor& b) {
  check_same_shape(a, b, "l2_distance");
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    double d = double{av[i]} - bv[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double max_abs(const LatentTensor& a) {
  double m = 0.0;
  for (float v : a.values()) m = std::max(m, std::abs(double{v}));
  return m;
}

LatentTensor elementwise(ElementwiseOp op, const LatentTensor& a,
                         const LatentTensor& b) {
  check_same_shape(a, b, "elementwise");
  LatentTensor out(a.shape());
  switch (op) {
    case ElementwiseOp::Add:
      kernels::add(a.values(), b.values(), out.mutable_values());
      break;
    case ElementwiseOp::Sub:
      kernels::sub(a.values(), b.values(), out.mutable_values());
      break;
    case ElementwiseOp::Hadamard:
      kernels::hadamard(a.values(), b.values(), out.mutable_values());
      break;
    case ElementwiseOp::Scale:
      fail(ErrorCode::InvalidArgument, "scale takes a scalar operand");
  }
  out.check_finite("elementwise");
  return out;
}

LatentTensor elementwise(ElementwiseOp op, const LatentTensor& a, double b) {
  if (!std::isfinite(b)) fail(ErrorCode::NonFinite, "non-finite scalar operand");
  LatentTensor out(a.shape());
  switch (op) {
    case ElementwiseOp::Add:
    case ElementwiseOp::Sub: {
      LatentTensor c(a.shape(), static_cast<float>(b));
      if (op == ElementwiseOp::Add) {
        kernels::add(a.values(), c.values(), out.mutable_values());
      } else {
        kernels::sub(a.values(), c.values(), out.mutable_values());
      }
      break;
    }
    case ElementwiseOp::Scale:
    case ElementwiseOp::Hadamard:
      kernels::scale(a.values(), b, out.mutable_values());
      break;
  }
  out.check_finite("elementwise");
  return out;
}

LatentTensor axpby(double alpha, const LatentTensor& a, double beta,
                   const LatentTensor& b) {
  check_same_shape(a, b, "axpby");
  LatentTensor out(a.shape());
  kernels::axpby(alpha, a.values(), beta, b.values(), out.mutable_values());
  out.check_finite("axpby");
  return out;
}

}  // namespace cds
