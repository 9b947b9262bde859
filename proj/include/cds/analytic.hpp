#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cds/predictor.hpp"
#include "cds/schedule.hpp"

namespace cds {

/// Closed-form backend over a Gaussian data model.
///
/// Clean latents are x0 ~ N(mu, variance * I) with
///   mu = base_mean + condition_offset + sum_i scale_i * adapter_offset_i.
/// The MMSE noise prediction at alpha_bar is then
///   eps = sqrt(1 - ab) * (z_t - sqrt(ab) * mu) / (ab * variance + 1 - ab),
/// which equals -sqrt(1 - ab) times the score of the noised marginal.
/// Adapter offsets vanish outside their spatial support mask, so an adapter
/// only changes predictions inside its region.
class GaussianConceptModel final : public PredictorBackend {
 public:
  GaussianConceptModel(NoiseSchedule schedule, LatentTensor base_mean,
                       double variance);

  void add_condition(const std::string& id, LatentTensor offset);
  void add_condition(const std::string& id);  // zero offset
  // mask is H*W, row-major, nonzero inside the support.
  void add_adapter(const std::string& id, LatentTensor offset,
                   std::vector<std::uint8_t> mask);

  Shape latent_shape() const override { return base_mean_.shape(); }
  bool has_condition(std::string_view id) const override;
  bool has_adapter(std::string_view id) const override;

  LatentTensor predict(const LatentTensor& z_t, int t, const ConditionRef& cond,
                       std::span<const AdapterSpec> adapters) const override;
  LatentTensor predict_at(const LatentTensor& z_t, double alpha_bar,
                          const ConditionRef& cond,
                          std::span<const AdapterSpec> adapters) const;

  // Data mean for a condition with the given adapters active.
  LatentTensor mean(const ConditionRef& cond,
                    std::span<const AdapterSpec> adapters = {}) const;

  const std::vector<std::uint8_t>& mask(const std::string& adapter) const;
  double variance() const { return variance_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  struct Adapter {
    LatentTensor offset;
    std::vector<std::uint8_t> mask;
  };

  NoiseSchedule schedule_;
  LatentTensor base_mean_;
  double variance_;
  std::map<std::string, LatentTensor, std::less<>> conditions_;
  std::map<std::string, Adapter, std::less<>> adapters_;
};

// Rectangular support [row0, row1) x [col0, col1) over an H x W plane.
std::vector<std::uint8_t> rect_mask(const Shape& shape, std::uint32_t row0,
                                    std::uint32_t col0, std::uint32_t row1,
                                    std::uint32_t col1);

// Per-channel constants inside a mask, zero elsewhere.
LatentTensor masked_field(const Shape& shape, const std::vector<float>& per_channel,
                          const std::vector<std::uint8_t>& mask);

}  // namespace cds
