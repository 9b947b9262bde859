#include "cds/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cds/rng.hpp"

namespace cds::kernels {

namespace {

// Below this many elements the fork/join cost outweighs the loop.
constexpr std::ptrdiff_t kParallelMin = 4096;

inline double cosine(const float* a, const float* b, std::size_t len,
                     double zero_norm) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    dot += double{a[k]} * b[k];
    na += double{a[k]} * a[k];
    nb += double{b[k]} * b[k];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  bool za = na < zero_norm;
  bool zb = nb < zero_norm;
  if (za && zb) return 1.0;
  if (za || zb) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

inline void softmin_column(const double* s, std::size_t n, std::size_t cols,
                           std::size_t c, double tau, double* out) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, -s[i * cols + c] / tau);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = std::exp(-s[i * cols + c] / tau - top);
    out[i * cols + c] = e;
    total += e;
  }
  for (std::size_t i = 0; i < n; ++i) out[i * cols + c] /= total;
}

}  // namespace

void axpby(double alpha, std::span<const float> a, double beta,
           std::span<const float> b, std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(alpha * a[i] + beta * b[i]);
  }
}

void add(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void hadamard(std::span<const float> a, std::span<const float> b,
              std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(std::span<const float> a, double s, std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = static_cast<float>(s * a[i]);
}

void cosine_rows(std::span<const float> a, std::span<const float> b,
                 std::size_t rows, std::size_t len, double zero_norm,
                 std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (n * static_cast<std::ptrdiff_t>(len) >= kParallelMin)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    out[r] = cosine(a.data() + r * len, b.data() + r * len, len, zero_norm);
  }
}

void softmin_columns(std::span<const double> s, std::size_t n, std::size_t cols,
                     double tau, std::span<double> out) {
  const auto m = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static) if (m * static_cast<std::ptrdiff_t>(n) >= kParallelMin)
  for (std::ptrdiff_t c = 0; c < m; ++c) {
    softmin_column(s.data(), n, cols, static_cast<std::size_t>(c), tau, out.data());
  }
}

void weighted_sum(std::span<const float> preds, std::span<const double> weights,
                  std::size_t n, std::size_t channels, std::size_t plane,
                  std::span<float> out) {
  const auto total = static_cast<std::ptrdiff_t>(channels * plane);
  const std::size_t stride = channels * plane;
#pragma omp parallel for schedule(static) if (total >= kParallelMin)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t p = static_cast<std::size_t>(idx) % plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += weights[i * plane + p] * preds[i * stride + idx];
    }
    out[idx] = static_cast<float>(acc);
  }
}

void fill_normal(std::uint64_t seed, std::span<float> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(rng::normal_at(seed, static_cast<std::uint64_t>(i)));
  }
}

namespace serial {

void axpby(double alpha, std::span<const float> a, double beta,
           std::span<const float> b, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(alpha * a[i] + beta * b[i]);
  }
}

void add(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

void sub(std::span<const float> a, std::span<const float> b, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}

void hadamard(std::span<const float> a, std::span<const float> b,
              std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void scale(std::span<const float> a, double s, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(s * a[i]);
}

void cosine_rows(std::span<const float> a, std::span<const float> b,
                 std::size_t rows, std::size_t len, double zero_norm,
                 std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = cosine(a.data() + r * len, b.data() + r * len, len, zero_norm);
  }
}

void softmin_columns(std::span<const double> s, std::size_t n, std::size_t cols,
                     double tau, std::span<double> out) {
  for (std::size_t c = 0; c < cols; ++c) {
    softmin_column(s.data(), n, cols, c, tau, out.data());
  }
}

void weighted_sum(std::span<const float> preds, std::span<const double> weights,
                  std::size_t n, std::size_t channels, std::size_t plane,
                  std::span<float> out) {
  const std::size_t stride = channels * plane;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i * plane + p] * preds[i * stride + c * plane + p];
      }
      out[c * plane + p] = static_cast<float>(acc);
    }
  }
}

void fill_normal(std::uint64_t seed, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(rng::normal_at(seed, i));
  }
}

}  // namespace serial

}  // namespace cds::kernels
