#include "cds/analytic.hpp"

#include <cmath>

#include "cds/elementwise.hpp"
#include "cds/error.hpp"

namespace cds {

GaussianConceptModel::GaussianConceptModel(NoiseSchedule schedule,
                                           LatentTensor base_mean, double variance)
    : schedule_(std::move(schedule)), base_mean_(std::move(base_mean)),
      variance_(variance) {
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) {
    fail(ErrorCode::InvalidArgument, "analytic model variance must be positive");
  }
  if (base_mean_.empty()) fail(ErrorCode::InvalidArgument, "analytic model needs a base mean");
}

void GaussianConceptModel::add_condition(const std::string& id, LatentTensor offset) {
  ConditionRef ref(id);
  check_same_shape(base_mean_, offset, "add_condition");
  conditions_.insert_or_assign(ref.id, std::move(offset));
}

void GaussianConceptModel::add_condition(const std::string& id) {
  add_condition(id, LatentTensor::zeros(base_mean_.shape()));
}

void GaussianConceptModel::add_adapter(const std::string& id, LatentTensor offset,
                                       std::vector<std::uint8_t> mask) {
  AdapterSpec ref(id, 1.0);
  check_same_shape(base_mean_, offset, "add_adapter");
  const Shape& s = offset.shape();
  if (mask.size() != s.plane()) {
    fail(ErrorCode::ShapeMismatch, "adapter '" + id + "' mask has " +
                                       std::to_string(mask.size()) + " cells, need " +
                                       std::to_string(s.plane()));
  }
  for (std::uint32_t c = 0; c < s.channels; ++c) {
    for (std::size_t p = 0; p < s.plane(); ++p) {
      if (!mask[p] && offset.values()[c * s.plane() + p] != 0.0f) {
        fail(ErrorCode::InvalidArgument,
             "adapter '" + id + "' offset is nonzero outside its mask");
      }
    }
  }
  adapters_.insert_or_assign(ref.id, Adapter{std::move(offset), std::move(mask)});
}

bool GaussianConceptModel::has_condition(std::string_view id) const {
  return conditions_.find(id) != conditions_.end();
}

bool GaussianConceptModel::has_adapter(std::string_view id) const {
  return adapters_.find(id) != adapters_.end();
}

const std::vector<std::uint8_t>& GaussianConceptModel::mask(const std::string& adapter) const {
  auto it = adapters_.find(adapter);
  if (it == adapters_.end()) fail(ErrorCode::UnknownAdapter, "unknown adapter '" + adapter + "'");
  return it->second.mask;
}

LatentTensor GaussianConceptModel::mean(const ConditionRef& cond,
                                        std::span<const AdapterSpec> adapters) const {
  auto c = conditions_.find(cond.id);
  if (c == conditions_.end()) {
    fail(ErrorCode::UnknownCondition, "unknown condition '" + cond.id + "'");
  }
  LatentTensor mu = add(base_mean_, c->second);
  for (const auto& spec : adapters) {
    auto a = adapters_.find(spec.id);
    if (a == adapters_.end()) {
      fail(ErrorCode::UnknownAdapter, "unknown adapter '" + spec.id + "'");
    }
    mu = axpby(1.0, mu, spec.scale, a->second.offset);
  }
  return mu;
}

LatentTensor GaussianConceptModel::predict_at(const LatentTensor& z_t, double alpha_bar,
                                              const ConditionRef& cond,
                                              std::span<const AdapterSpec> adapters) const {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "alpha_bar outside [0, 1]");
  }
  check_same_shape(base_mean_, z_t, "analytic predict");
  const LatentTensor mu = mean(cond, adapters);
  const double noise = 1.0 - alpha_bar;
  const double gain = std::sqrt(noise) / (alpha_bar * variance_ + noise);
  return axpby(gain, z_t, -gain * std::sqrt(alpha_bar), mu);
}

LatentTensor GaussianConceptModel::predict(const LatentTensor& z_t, int t,
                                           const ConditionRef& cond,
                                           std::span<const AdapterSpec> adapters) const {
  return predict_at(z_t, schedule_.alpha_bar(t), cond, adapters);
}

std::vector<std::uint8_t> rect_mask(const Shape& shape, std::uint32_t row0,
                                    std::uint32_t col0, std::uint32_t row1,
                                    std::uint32_t col1) {
  if (row0 >= row1 || col0 >= col1 || row1 > shape.height || col1 > shape.width) {
    fail(ErrorCode::InvalidArgument, "region outside the " + to_string(shape) + " latent");
  }
  std::vector<std::uint8_t> mask(shape.plane(), 0);
  for (std::uint32_t h = row0; h < row1; ++h) {
    for (std::uint32_t w = col0; w < col1; ++w) mask[std::size_t{h} * shape.width + w] = 1;
  }
  return mask;
}

LatentTensor masked_field(const Shape& shape, const std::vector<float>& per_channel,
                          const std::vector<std::uint8_t>& mask) {
  if (per_channel.size() != 1 && per_channel.size() != shape.channels) {
    fail(ErrorCode::InvalidArgument, "field needs 1 or " +
                                         std::to_string(shape.channels) + " channel values");
  }
  if (mask.size() != shape.plane()) fail(ErrorCode::ShapeMismatch, "field mask size mismatch");
  LatentTensor out(shape);
  for (std::uint32_t c = 0; c < shape.channels; ++c) {
    float v = per_channel.size() == 1 ? per_channel[0] : per_channel[c];
    for (std::size_t p = 0; p < shape.plane(); ++p) {
      if (mask[p]) out.mutable_values()[c * shape.plane() + p] = v;
    }
  }
  out.check_finite("masked_field");
  return out;
}

}  // namespace cds
