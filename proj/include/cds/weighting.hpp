#pragma once

// Dynamic concept weighting: each adapter's noise prediction is compared
// with the base model patch by patch, and adapters that diverge most from the
// base (lowest cosine similarity) receive the most weight at that patch.

#include <cstdint>
#include <span>
#include <vector>

#include "cds/predictor.hpp"
#include "cds/tensor.hpp"

namespace cds {

struct PatchSize {
  std::uint32_t height = 2;
  std::uint32_t width = 2;
  friend bool operator==(const PatchSize&, const PatchSize&) = default;
};

/// Non-overlapping patches of a tensor, one flat vector per patch. Patches
/// are ordered row-major over the patch grid; each vector holds the block's
/// values in (channel, row, col) order.
class PatchGrid {
 public:
  PatchGrid(Shape shape, PatchSize patch, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  PatchSize patch() const { return patch_; }
  std::size_t rows() const { return shape_.height / patch_.height; }
  std::size_t cols() const { return shape_.width / patch_.width; }
  std::size_t count() const { return rows() * cols(); }
  std::size_t length() const {
    return std::size_t{shape_.channels} * patch_.height * patch_.width;
  }

  std::span<const float> data() const { return data_; }
  std::span<const float> vector(std::size_t p) const {
    return std::span<const float>(data_).subspan(p * length(), length());
  }

 private:
  Shape shape_;
  PatchSize patch_;
  std::vector<float> data_;
};

PatchGrid partition_patches(const LatentTensor& eps, PatchSize patch);
LatentTensor unflatten_patches(const PatchGrid& grid);

// Patch vectors with norm below this count as zero for cosine purposes.
inline constexpr double kZeroNormThreshold = 1e-8;

std::vector<double> patch_cosine(const PatchGrid& base, const PatchGrid& other);

/// Row-major adapters x patches matrix; similarities lie in [-1, 1] and
/// weights in [0, 1] with columns summing to one.
struct PatchMatrix {
  std::size_t adapters = 0;
  std::size_t patches = 0;
  std::vector<double> values;

  PatchMatrix() = default;
  PatchMatrix(std::size_t n, std::size_t p, std::vector<double> v);

  double at(std::size_t i, std::size_t p) const { return values[i * patches + p]; }
};

using SimilarityMatrix = PatchMatrix;
using PatchWeights = PatchMatrix;

SimilarityMatrix make_similarity(std::size_t adapters, std::size_t patches,
                                 std::vector<double> values);

PatchWeights softmin_weights(const SimilarityMatrix& similarity, double tau);

// Mean over patches of the Shannon entropy (nats) of the adapter weights.
double mean_entropy(const PatchWeights& weights);

/// Per-adapter H x W weight fields, piecewise constant on the patch grid.
class WeightMap {
 public:
  WeightMap(std::size_t adapters, std::uint32_t height, std::uint32_t width,
            std::vector<double> values);

  std::size_t adapters() const { return adapters_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  double at(std::size_t i, std::uint32_t h, std::uint32_t w) const {
    return values_[(i * height_ + h) * width_ + w];
  }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t adapters_;
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<double> values_;
};

WeightMap upsample_weights(const PatchWeights& weights, PatchSize patch,
                           std::uint32_t height, std::uint32_t width);

// sum_i W_i (broadcast over channels) * preds_i.
LatentTensor composite_prediction(std::span<const LatentTensor> preds,
                                  const WeightMap& weights);

struct WeightedPrediction {
  LatentTensor prediction;
  PatchWeights weights;
  double entropy = 0.0;
};

// Full pipeline for one timestep: base and per-adapter predictions, patch
// similarity, SoftMin, upsampling and the Hadamard composite. With
// concurrent_calls the N + 1 backend calls run on OpenMP threads; the result
// does not depend on it.
WeightedPrediction dynamic_weighted_predict(const PredictorBackend& backend,
                                            std::span<const AdapterSpec> adapters,
                                            const LatentTensor& z_t, int t,
                                            const ConditionRef& cond,
                                            PatchSize patch, double tau,
                                            bool concurrent_calls = false);

}  // namespace cds
