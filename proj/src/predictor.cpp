#include "cds/predictor.hpp"

#include <cmath>

#include "cds/elementwise.hpp"
#include "cds/error.hpp"

namespace cds {

LatentTensor predict(const PredictorBackend& backend, const LatentTensor& z_t,
                     int t, const ConditionRef& cond,
                     std::span<const AdapterSpec> adapters) {
  if (z_t.shape() != backend.latent_shape()) {
    fail(ErrorCode::ShapeMismatch, "predict: latent " + to_string(z_t.shape()) +
                                       " but backend serves " +
                                       to_string(backend.latent_shape()));
  }
  if (!backend.has_condition(cond.id)) {
    fail(ErrorCode::UnknownCondition, "unknown condition '" + cond.id + "'");
  }
  for (const auto& a : adapters) {
    if (!backend.has_adapter(a.id)) {
      fail(ErrorCode::UnknownAdapter, "unknown adapter '" + a.id + "'");
    }
  }
  LatentTensor eps = backend.predict(z_t, t, cond, adapters);
  if (eps.shape() != backend.latent_shape()) {
    fail(ErrorCode::ShapeMismatch, "backend returned " + to_string(eps.shape()) +
                                       ", declared " +
                                       to_string(backend.latent_shape()));
  }
  return eps;
}

LatentTensor guide(const LatentTensor& positive, const LatentTensor& negative,
                   double lambda) {
  if (!std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "guidance scale not finite");
  check_same_shape(positive, negative, "guide");
  if (lambda == 0.0) return positive;
  return axpby(1.0 + lambda, positive, -lambda, negative);
}

LatentTensor guided_predict(const PredictorBackend& backend,
                            const LatentTensor& z_t, int t,
                            const ConditionRef& cond_pos,
                            const ConditionRef& cond_neg, double lambda,
                            std::span<const AdapterSpec> adapters,
                            std::span<const AdapterSpec> negative_adapters) {
  LatentTensor positive = predict(backend, z_t, t, cond_pos, adapters);
  if (lambda == 0.0) return positive;
  LatentTensor negative = predict(backend, z_t, t, cond_neg, negative_adapters);
  return guide(positive, negative, lambda);
}

}  // namespace cds
