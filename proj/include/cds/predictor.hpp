#pragma once

#include <span>
#include <string_view>

#include "cds/tensor.hpp"

namespace cds {

/// A noise predictor eps(z_t, condition, t, adapters).
///
/// Implementations must return tensors of latent_shape(), be deterministic
/// for identical inputs, and tolerate concurrent predict() calls when
/// concurrent_safe() reports true. An empty adapter list means the base
/// model.
class PredictorBackend {
 public:
  virtual ~PredictorBackend() = default;

  virtual Shape latent_shape() const = 0;
  virtual bool has_condition(std::string_view id) const = 0;
  virtual bool has_adapter(std::string_view id) const = 0;
  virtual bool concurrent_safe() const { return true; }

  virtual LatentTensor predict(const LatentTensor& z_t, int t,
                               const ConditionRef& cond,
                               std::span<const AdapterSpec> adapters) const = 0;
};

// Checks the request against the backend's declared capabilities and the
// reply against its declared shape, then forwards to backend.predict().
LatentTensor predict(const PredictorBackend& backend, const LatentTensor& z_t,
                     int t, const ConditionRef& cond,
                     std::span<const AdapterSpec> adapters = {});

// (1 + lambda) * positive - lambda * negative. lambda == 0 returns positive
// unchanged.
LatentTensor guide(const LatentTensor& positive, const LatentTensor& negative,
                   double lambda);

// Negative-prompt guidance. The negative branch runs with negative_adapters,
// which is empty (base model) unless the caller opts in.
LatentTensor guided_predict(const PredictorBackend& backend,
                            const LatentTensor& z_t, int t,
                            const ConditionRef& cond_pos,
                            const ConditionRef& cond_neg, double lambda,
                            std::span<const AdapterSpec> adapters = {},
                            std::span<const AdapterSpec> negative_adapters = {});

}  // namespace cds
