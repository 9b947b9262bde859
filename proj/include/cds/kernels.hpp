#pragma once

// Data-parallel inner loops used by the engine.
//
// Every kernel exists twice: an OpenMP version in cds::kernels and a plain
// loop in cds::kernels::serial with the same signature. The serial versions
// are the reference the parallel ones are tested against and benchmarked
// with. Each output element depends only on its own inputs, so both versions
// produce bitwise-identical results for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace cds::kernels {

// out[i] = alpha * a[i] + beta * b[i], evaluated in double.
void axpby(double alpha, std::span<const float> a, double beta,
           std::span<const float> b, std::span<float> out);
void add(std::span<const float> a, std::span<const float> b,
         std::span<float> out);
void sub(std::span<const float> a, std::span<const float> b,
         std::span<float> out);
void hadamard(std::span<const float> a, std::span<const float> b,
              std::span<float> out);
void scale(std::span<const float> a, double s, std::span<float> out);

// Row-wise cosine similarity of two row-major (rows x len) matrices.
// Rows where both norms are below zero_norm get 1, rows where exactly one
// is get 0.
void cosine_rows(std::span<const float> a, std::span<const float> b,
                 std::size_t rows, std::size_t len, double zero_norm,
                 std::span<double> out);

// Column-wise SoftMin over an (n x cols) matrix: out[i][c] =
// exp(-s[i][c]/tau) / sum_j exp(-s[j][c]/tau), with max subtraction.
void softmin_columns(std::span<const double> s, std::size_t n,
                     std::size_t cols, double tau, std::span<double> out);

// out[c][h][w] = sum_i weights[i][h][w] * preds[i][c][h][w], where preds is
// n tensors of `channels` planes packed back to back and weights is n planes.
void weighted_sum(std::span<const float> preds, std::span<const double> weights,
                  std::size_t n, std::size_t channels, std::size_t plane,
                  std::span<float> out);

// Standard normal samples from the counter-based generator, see rng.hpp.
void fill_normal(std::uint64_t seed, std::span<float> out);

namespace serial {

void axpby(double alpha, std::span<const float> a, double beta,
           std::span<const float> b, std::span<float> out);
void add(std::span<const float> a, std::span<const float> b,
         std::span<float> out);
void sub(std::span<const float> a, std::span<const float> b,
         std::span<float> out);
void hadamard(std::span<const float> a, std::span<const float> b,
              std::span<float> out);
void scale(std::span<const float> a, double s, std::span<float> out);
void cosine_rows(std::span<const float> a, std::span<const float> b,
                 std::size_t rows, std::size_t len, double zero_norm,
                 std::span<double> out);
void softmin_columns(std::span<const double> s, std::size_t n,
                     std::size_t cols, double tau, std::span<double> out);
void weighted_sum(std::span<const float> preds, std::span<const double> weights,
                  std::size_t n, std::size_t channels, std::size_t plane,
                  std::span<float> out);
void fill_normal(std::uint64_t seed, std::span<float> out);

}  // namespace serial

}  // namespace cds::kernels
