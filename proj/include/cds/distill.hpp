#pragma once

#include <string>
#include <string_view>

#include "cds/tensor.hpp"

namespace cds {

enum class RegularizerMode {
  L2Signed,    // eta * (x_tgt - x_src), gradient of (eta/2)||x_tgt - x_src||^2
  L1Sign,      // eta * sign(x_tgt - x_src)
  LiteralAbs,  // eta * |x_tgt - x_src|
};

RegularizerMode parse_regularizer_mode(std::string_view name);
std::string_view to_string(RegularizerMode mode);

/// Timestep weighting w(t). Only the "constant" preset (w = 1) exists.
struct TimeWeight {
  std::string preset = "constant";

  static TimeWeight parse(std::string_view name);
  double operator()(int t) const;
};

struct GradConfig {
  double eta = 0.5;
  double lambda = 10.0;
  RegularizerMode regularizer_mode = RegularizerMode::L2Signed;
  TimeWeight w_t;
  double learning_rate = 0.2;

  void validate() const;
};

struct GradResult {
  LatentTensor grad;
  double noise_delta_norm = 0.0;
  double regularizer_norm = 0.0;
};

// w(t) * (eps_pred - eps_sampled); the latent is the parameter, so the
// Jacobian of z0 is the identity.
GradResult sds_grad(const LatentTensor& eps_pred, const LatentTensor& eps_sampled,
                    int t, const TimeWeight& w_t);

// w(t) * (eps_tgt - eps_src)
GradResult dds_grad(const LatentTensor& eps_tgt, const LatentTensor& eps_src,
                    int t, const TimeWeight& w_t);

LatentTensor regularizer(RegularizerMode mode, double eta, const LatentTensor& x0_tgt,
                         const LatentTensor& x0_src);

// regularizer(eta, x0_tgt - x0_src) + (eps_tgt - eps_src). With eta == 0 the
// result is bitwise identical to dds_grad with w = 1.
GradResult cds_grad(const LatentTensor& eps_tgt, const LatentTensor& eps_src,
                    const LatentTensor& x0_tgt, const LatentTensor& x0_src,
                    const GradConfig& cfg);

// latent - lr * grad. A non-finite result raises NumericalAbort naming
// step_index when one is given.
LatentTensor apply_update(const LatentTensor& latent, const LatentTensor& grad,
                          double lr, int step_index = -1);

}  // namespace cds
