#include "cds/schedule.hpp"

#include <cmath>

#include "cds/elementwise.hpp"
#include "cds/error.hpp"

namespace cds {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "scaled_linear") return ScheduleKind::ScaledLinear;
  fail(ErrorCode::InvalidArgument, "unknown schedule kind '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Linear ? "linear" : "scaled_linear";
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar)
    : alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.empty()) fail(ErrorCode::InvalidArgument, "empty noise schedule");
  for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
    double a = alpha_bar_[i];
    if (!(a > 0.0 && a < 1.0)) {
      fail(ErrorCode::InvalidArgument,
           "alpha_bar_" + std::to_string(i + 1) + " = " + std::to_string(a) +
               " outside (0, 1)");
    }
    if (i > 0 && !(a < alpha_bar_[i - 1])) {
      fail(ErrorCode::InvalidArgument,
           "alpha_bar not strictly decreasing at t=" + std::to_string(i + 1));
    }
  }
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 1 || t > steps()) {
    fail(ErrorCode::InvalidArgument, "timestep " + std::to_string(t) +
                                         " outside [1, " + std::to_string(steps()) + "]");
  }
  return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule build_noise_schedule(ScheduleKind kind, int steps,
                                   double beta_start, double beta_end) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail(ErrorCode::InvalidArgument, "need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> alpha_bar(static_cast<std::size_t>(steps));
  double product = 1.0;
  for (int s = 0; s < steps; ++s) {
    double frac = steps == 1 ? 0.0 : static_cast<double>(s) / (steps - 1);
    double beta;
    if (kind == ScheduleKind::Linear) {
      beta = beta_start + frac * (beta_end - beta_start);
    } else {
      double root = std::sqrt(beta_start) +
                    frac * (std::sqrt(beta_end) - std::sqrt(beta_start));
      beta = root * root;
    }
    product *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(s)] = product;
  }
  return NoiseSchedule(std::move(alpha_bar));
}

TimestepPlan::TimestepPlan(std::vector<int> steps) : steps_(std::move(steps)) {
  if (steps_.empty()) fail(ErrorCode::InvalidArgument, "empty timestep plan");
  for (std::size_t k = 1; k < steps_.size(); ++k) {
    if (steps_[k] >= steps_[k - 1]) {
      fail(ErrorCode::InvalidArgument,
           "timestep plan not strictly decreasing at index " + std::to_string(k));
    }
  }
}

TimestepPlan plan_timesteps(int steps, int t_max, int t_min) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "plan needs K >= 1");
  if (t_min < 1 || t_min > t_max) {
    fail(ErrorCode::InvalidArgument, "need 1 <= t_min <= t_max");
  }
  if (steps > t_max - t_min + 1) {
    fail(ErrorCode::InvalidArgument,
         "K=" + std::to_string(steps) + " exceeds the " +
             std::to_string(t_max - t_min + 1) + " timesteps in [" +
             std::to_string(t_min) + ", " + std::to_string(t_max) + "]; use a smaller K");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out.push_back(t_max);
  } else {
    const double stride = static_cast<double>(t_max - t_min) / (steps - 1);
    for (int k = 0; k < steps; ++k) {
      int t = static_cast<int>(std::lround(t_max - k * stride));
      if (!out.empty() && t >= out.back()) {
        fail(ErrorCode::InvalidArgument,
             "timestep rounding collision at k=" + std::to_string(k) +
                 "; use a smaller K");
      }
      out.push_back(t);
    }
  }
  return TimestepPlan(std::move(out));
}

LatentTensor add_noise_at(const LatentTensor& x0, const LatentTensor& eps,
                          double alpha_bar) {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "alpha_bar outside [0, 1]");
  }
  return axpby(std::sqrt(alpha_bar), x0, std::sqrt(1.0 - alpha_bar), eps);
}

LatentTensor add_noise(const LatentTensor& x0, const LatentTensor& eps, int t,
                       const NoiseSchedule& schedule) {
  return add_noise_at(x0, eps, schedule.alpha_bar(t));
}

}  // namespace cds
