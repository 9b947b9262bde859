#include "cds/weighting.hpp"

#include <cmath>
#include <exception>

#include "cds/error.hpp"
#include "cds/kernels.hpp"

namespace cds {

namespace {

void check_divisible(const Shape& shape, PatchSize patch) {
  if (patch.height == 0 || patch.width == 0) {
    fail(ErrorCode::InvalidArgument, "patch size must be positive");
  }
  if (shape.height % patch.height != 0 || shape.width % patch.width != 0) {
    fail(ErrorCode::InvalidArgument,
         "latent " + to_string(shape) + " is not divisible into " +
             std::to_string(patch.height) + "x" + std::to_string(patch.width) +
             " patches");
  }
}

}  // namespace

PatchGrid::PatchGrid(Shape shape, PatchSize patch, std::vector<float> data)
    : shape_(shape), patch_(patch), data_(std::move(data)) {
  check_divisible(shape_, patch_);
  if (data_.size() != shape_.size()) {
    fail(ErrorCode::ShapeMismatch, "patch grid data size mismatch");
  }
}

PatchGrid partition_patches(const LatentTensor& eps, PatchSize patch) {
  const Shape& s = eps.shape();
  check_divisible(s, patch);
  const std::uint32_t grid_cols = s.width / patch.width;
  const std::uint32_t grid_rows = s.height / patch.height;
  std::vector<float> data;
  data.reserve(eps.size());
  for (std::uint32_t pr = 0; pr < grid_rows; ++pr) {
    for (std::uint32_t pc = 0; pc < grid_cols; ++pc) {
      for (std::uint32_t c = 0; c < s.channels; ++c) {
        for (std::uint32_t dh = 0; dh < patch.height; ++dh) {
          for (std::uint32_t dw = 0; dw < patch.width; ++dw) {
            data.push_back(eps.at(c, pr * patch.height + dh, pc * patch.width + dw));
          }
        }
      }
    }
  }
  return PatchGrid(s, patch, std::move(data));
}

LatentTensor unflatten_patches(const PatchGrid& grid) {
  const Shape& s = grid.shape();
  const PatchSize patch = grid.patch();
  LatentTensor out(s);
  std::size_t k = 0;
  auto data = grid.data();
  for (std::size_t pr = 0; pr < grid.rows(); ++pr) {
    for (std::size_t pc = 0; pc < grid.cols(); ++pc) {
      for (std::uint32_t c = 0; c < s.channels; ++c) {
        for (std::uint32_t dh = 0; dh < patch.height; ++dh) {
          for (std::uint32_t dw = 0; dw < patch.width; ++dw) {
            out.at(c, static_cast<std::uint32_t>(pr * patch.height + dh),
                   static_cast<std::uint32_t>(pc * patch.width + dw)) = data[k++];
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> patch_cosine(const PatchGrid& base, const PatchGrid& other) {
  if (base.shape() != other.shape() || !(base.patch() == other.patch())) {
    fail(ErrorCode::ShapeMismatch, "patch_cosine: grid geometry differs");
  }
  std::vector<double> out(base.count());
  kernels::cosine_rows(base.data(), other.data(), base.count(), base.length(),
                       kZeroNormThreshold, out);
  return out;
}

PatchMatrix::PatchMatrix(std::size_t n, std::size_t p, std::vector<double> v)
    : adapters(n), patches(p), values(std::move(v)) {
  if (values.size() != n * p) {
    fail(ErrorCode::ShapeMismatch, "patch matrix needs " + std::to_string(n * p) +
                                       " entries, got " + std::to_string(values.size()));
  }
}

SimilarityMatrix make_similarity(std::size_t adapters, std::size_t patches,
                                 std::vector<double> values) {
  for (double s : values) {
    if (!(s >= -1.0 && s <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "similarity outside [-1, 1]");
    }
  }
  return SimilarityMatrix(adapters, patches, std::move(values));
}

PatchWeights softmin_weights(const SimilarityMatrix& similarity, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  if (similarity.adapters == 0) fail(ErrorCode::InvalidArgument, "softmin over zero adapters");
  std::vector<double> out(similarity.values.size());
  kernels::softmin_columns(similarity.values, similarity.adapters, similarity.patches,
                           tau, out);
  return PatchWeights(similarity.adapters, similarity.patches, std::move(out));
}

double mean_entropy(const PatchWeights& weights) {
  if (weights.patches == 0) return 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < weights.patches; ++p) {
    for (std::size_t i = 0; i < weights.adapters; ++i) {
      double w = weights.at(i, p);
      if (w > 0.0) total -= w * std::log(w);
    }
  }
  return total / static_cast<double>(weights.patches);
}

WeightMap::WeightMap(std::size_t adapters, std::uint32_t height, std::uint32_t width,
                     std::vector<double> values)
    : adapters_(adapters), height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != adapters_ * height_ * width_) {
    fail(ErrorCode::ShapeMismatch, "weight map size mismatch");
  }
}

WeightMap upsample_weights(const PatchWeights& weights, PatchSize patch,
                           std::uint32_t height, std::uint32_t width) {
  check_divisible(Shape{1, height, width}, patch);
  const std::uint32_t grid_cols = width / patch.width;
  const std::size_t expected = std::size_t{height / patch.height} * grid_cols;
  if (weights.patches != expected) {
    fail(ErrorCode::ShapeMismatch, "weights cover " + std::to_string(weights.patches) +
                                       " patches, geometry has " + std::to_string(expected));
  }
  std::vector<double> out(weights.adapters * height * width);
  for (std::size_t i = 0; i < weights.adapters; ++i) {
    for (std::uint32_t h = 0; h < height; ++h) {
      for (std::uint32_t w = 0; w < width; ++w) {
        std::size_t p = std::size_t{h / patch.height} * grid_cols + w / patch.width;
        out[(i * height + h) * width + w] = weights.at(i, p);
      }
    }
  }
  return WeightMap(weights.adapters, height, width, std::move(out));
}

LatentTensor composite_prediction(std::span<const LatentTensor> preds,
                                  const WeightMap& weights) {
  if (preds.empty()) fail(ErrorCode::InvalidArgument, "composite over zero predictions");
  const Shape shape = preds.front().shape();
  for (const auto& p : preds) check_same_shape(preds.front(), p, "composite_prediction");
  if (weights.adapters() != preds.size() || weights.height() != shape.height ||
      weights.width() != shape.width) {
    fail(ErrorCode::ShapeMismatch, "weight map does not match the predictions");
  }
  std::vector<float> packed;
  packed.reserve(preds.size() * shape.size());
  for (const auto& p : preds) packed.insert(packed.end(), p.values().begin(), p.values().end());
  LatentTensor out(shape);
  kernels::weighted_sum(packed, weights.values(), preds.size(), shape.channels,
                        shape.plane(), out.mutable_values());
  out.check_finite("composite_prediction");
  return out;
}

WeightedPrediction dynamic_weighted_predict(const PredictorBackend& backend,
                                            std::span<const AdapterSpec> adapters,
                                            const LatentTensor& z_t, int t,
                                            const ConditionRef& cond,
                                            PatchSize patch, double tau,
                                            bool concurrent_calls) {
  const std::size_t n = adapters.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "dynamic weighting needs at least one adapter");
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be positive");
  check_divisible(z_t.shape(), patch);

  // Slot 0 is the base model, slots 1..n the adapters.
  std::vector<LatentTensor> preds(n + 1);
  std::vector<std::exception_ptr> errors(n + 1);
  const bool parallel = concurrent_calls && backend.concurrent_safe();
  const auto jobs = static_cast<std::ptrdiff_t>(n + 1);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t k = 0; k < jobs; ++k) {
    try {
      if (k == 0) {
        preds[0] = predict(backend, z_t, t, cond);
      } else {
        preds[k] = predict(backend, z_t, t, cond, adapters.subspan(k - 1, 1));
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const PatchGrid base = partition_patches(preds[0], patch);
  const std::size_t patches = base.count();
  std::vector<double> sim(n * patches);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = patch_cosine(base, partition_patches(preds[i + 1], patch));
    std::copy(row.begin(), row.end(), sim.begin() + static_cast<std::ptrdiff_t>(i * patches));
  }
  PatchWeights weights = softmin_weights(SimilarityMatrix(n, patches, std::move(sim)), tau);
  const Shape& s = z_t.shape();
  WeightMap map = upsample_weights(weights, patch, s.height, s.width);
  LatentTensor composite = composite_prediction(
      std::span<const LatentTensor>(preds).subspan(1), map);
  double entropy = mean_entropy(weights);
  return WeightedPrediction{std::move(composite), std::move(weights), entropy};
}

}  // namespace cds
