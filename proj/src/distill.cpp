#include "cds/distill.hpp"

#include <cmath>

#include "cds/elementwise.hpp"
#include "cds/error.hpp"
#include "cds/kernels.hpp"

namespace cds {

RegularizerMode parse_regularizer_mode(std::string_view name) {
  if (name == "l2_signed") return RegularizerMode::L2Signed;
  if (name == "l1_sign") return RegularizerMode::L1Sign;
  if (name == "literal_abs") return RegularizerMode::LiteralAbs;
  fail(ErrorCode::InvalidArgument, "unknown regularizer mode '" + std::string(name) + "'");
}

std::string_view to_string(RegularizerMode mode) {
  switch (mode) {
    case RegularizerMode::L2Signed: return "l2_signed";
    case RegularizerMode::L1Sign: return "l1_sign";
    case RegularizerMode::LiteralAbs: return "literal_abs";
  }
  return "l2_signed";
}

TimeWeight TimeWeight::parse(std::string_view name) {
  if (name != "constant") {
    fail(ErrorCode::InvalidArgument, "unknown w_t preset '" + std::string(name) + "'");
  }
  return TimeWeight{std::string(name)};
}

double TimeWeight::operator()(int) const { return 1.0; }

void GradConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorCode::InvalidArgument, "eta must be >= 0");
  if (!std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  }
}

namespace {

GradResult weighted_delta(const LatentTensor& a, const LatentTensor& b, double w) {
  LatentTensor delta = sub(a, b);
  if (w != 1.0) delta = scaled(delta, w);
  double norm = l2_norm(delta);
  return GradResult{std::move(delta), norm, 0.0};
}

}  // namespace

GradResult sds_grad(const LatentTensor& eps_pred, const LatentTensor& eps_sampled,
                    int t, const TimeWeight& w_t) {
  return weighted_delta(eps_pred, eps_sampled, w_t(t));
}

GradResult dds_grad(const LatentTensor& eps_tgt, const LatentTensor& eps_src, int t,
                    const TimeWeight& w_t) {
  return weighted_delta(eps_tgt, eps_src, w_t(t));
}

LatentTensor regularizer(RegularizerMode mode, double eta, const LatentTensor& x0_tgt,
                         const LatentTensor& x0_src) {
  LatentTensor delta = sub(x0_tgt, x0_src);
  auto v = delta.mutable_values();
  for (float& d : v) {
    switch (mode) {
      case RegularizerMode::L2Signed:
        break;
      case RegularizerMode::L1Sign:
        d = static_cast<float>((d > 0.0f) - (d < 0.0f));
        break;
      case RegularizerMode::LiteralAbs:
        d = std::abs(d);
        break;
    }
  }
  return scaled(delta, eta);
}

GradResult cds_grad(const LatentTensor& eps_tgt, const LatentTensor& eps_src,
                    const LatentTensor& x0_tgt, const LatentTensor& x0_src,
                    const GradConfig& cfg) {
  cfg.validate();
  check_same_shape(eps_tgt, eps_src, "cds_grad");
  check_same_shape(eps_tgt, x0_tgt, "cds_grad");
  check_same_shape(x0_tgt, x0_src, "cds_grad");
  LatentTensor noise = sub(eps_tgt, eps_src);
  GradResult out;
  out.noise_delta_norm = l2_norm(noise);
  if (cfg.eta == 0.0) {
    out.grad = std::move(noise);
    return out;
  }
  LatentTensor reg = regularizer(cfg.regularizer_mode, cfg.eta, x0_tgt, x0_src);
  out.regularizer_norm = l2_norm(reg);
  out.grad = add(reg, noise);
  return out;
}

LatentTensor apply_update(const LatentTensor& latent, const LatentTensor& grad,
                          double lr, int step_index) {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::InvalidArgument, "learning rate must be > 0");
  check_same_shape(latent, grad, "apply_update");
  LatentTensor out(latent.shape());
  kernels::axpby(1.0, latent.values(), -lr, grad.values(), out.mutable_values());
  if (!out.all_finite()) {
    std::string where = step_index >= 0 ? " at step " + std::to_string(step_index) : "";
    fail(ErrorCode::NumericalAbort, "latent update produced non-finite values" + where);
  }
  return out;
}

}  // namespace cds
