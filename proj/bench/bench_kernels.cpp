// Serial reference vs OpenMP kernels on a 4x64x64 latent with three adapters.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cds/kernels.hpp"

namespace {

constexpr std::size_t kChannels = 4;
constexpr std::size_t kPlane = 64 * 64;
constexpr std::size_t kSize = kChannels * kPlane;
constexpr std::size_t kAdapters = 3;
constexpr std::size_t kPatches = kPlane / 4;

std::vector<float> random_floats(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = d(gen);
  return v;
}

template <bool Parallel>
void BM_axpby(benchmark::State& state) {
  auto a = random_floats(kSize, 1), b = random_floats(kSize, 2);
  std::vector<float> out(kSize);
  for (auto _ : state) {
    if constexpr (Parallel) cds::kernels::axpby(1.0, a, -0.2, b, out);
    else cds::kernels::serial::axpby(1.0, a, -0.2, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * kSize * sizeof(float) * 3);
}

template <bool Parallel>
void BM_cosine_rows(benchmark::State& state) {
  auto a = random_floats(kSize, 3), b = random_floats(kSize, 4);
  std::vector<double> out(kPatches);
  for (auto _ : state) {
    if constexpr (Parallel) cds::kernels::cosine_rows(a, b, kPatches, 16, 1e-8, out);
    else cds::kernels::serial::cosine_rows(a, b, kPatches, 16, 1e-8, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_softmin_columns(benchmark::State& state) {
  std::vector<double> s(kAdapters * kPatches), out(s.size());
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& x : s) x = d(gen);
  for (auto _ : state) {
    if constexpr (Parallel) cds::kernels::softmin_columns(s, kAdapters, kPatches, 0.002, out);
    else cds::kernels::serial::softmin_columns(s, kAdapters, kPatches, 0.002, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_weighted_sum(benchmark::State& state) {
  auto preds = random_floats(kAdapters * kSize, 6);
  std::vector<double> w(kAdapters * kPlane, 1.0 / kAdapters);
  std::vector<float> out(kSize);
  for (auto _ : state) {
    if constexpr (Parallel) cds::kernels::weighted_sum(preds, w, kAdapters, kChannels, kPlane, out);
    else cds::kernels::serial::weighted_sum(preds, w, kAdapters, kChannels, kPlane, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_fill_normal(benchmark::State& state) {
  std::vector<float> out(kSize);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    if constexpr (Parallel) cds::kernels::fill_normal(++seed, out);
    else cds::kernels::serial::fill_normal(++seed, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_axpby<false>)->Name("axpby/serial");
BENCHMARK(BM_axpby<true>)->Name("axpby/openmp");
BENCHMARK(BM_cosine_rows<false>)->Name("cosine_rows/serial");
BENCHMARK(BM_cosine_rows<true>)->Name("cosine_rows/openmp");
BENCHMARK(BM_softmin_columns<false>)->Name("softmin_columns/serial");
BENCHMARK(BM_softmin_columns<true>)->Name("softmin_columns/openmp");
BENCHMARK(BM_weighted_sum<false>)->Name("weighted_sum/serial");
BENCHMARK(BM_weighted_sum<true>)->Name("weighted_sum/openmp");
BENCHMARK(BM_fill_normal<false>)->Name("fill_normal/serial");
BENCHMARK(BM_fill_normal<true>)->Name("fill_normal/openmp");

BENCHMARK_MAIN();
