#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cds/tensor.hpp"

namespace cds {

enum class ScheduleKind { Linear, ScaledLinear };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind);

/// Cumulative signal fractions alpha_bar_1 ... alpha_bar_T of a discrete
/// diffusion schedule. Timesteps are 1-based.
class NoiseSchedule {
 public:
  // Validates strict decrease and that every value lies in (0, 1).
  explicit NoiseSchedule(std::vector<double> alpha_bar);

  int steps() const { return static_cast<int>(alpha_bar_.size()); }
  double alpha_bar(int t) const;
  const std::vector<double>& values() const { return alpha_bar_; }

 private:
  std::vector<double> alpha_bar_;
};

// linear: beta ramps linearly from beta_start to beta_end.
// scaled_linear: sqrt(beta) ramps linearly (Stable Diffusion convention).
NoiseSchedule build_noise_schedule(ScheduleKind kind, int steps,
                                   double beta_start, double beta_end);

/// Strictly descending timesteps visited by the optimization loop.
class TimestepPlan {
 public:
  explicit TimestepPlan(std::vector<int> steps);

  const std::vector<int>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  int operator[](std::size_t k) const { return steps_[k]; }

 private:
  std::vector<int> steps_;
};

// Evenly spaced from t_max down to t_min (rounded to the nearest integer).
TimestepPlan plan_timesteps(int steps, int t_max, int t_min);

// sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps. The alpha_bar overload
// accepts the closed interval [0, 1] so the limits can be exercised.
LatentTensor add_noise(const LatentTensor& x0, const LatentTensor& eps, int t,
                       const NoiseSchedule& schedule);
LatentTensor add_noise_at(const LatentTensor& x0, const LatentTensor& eps,
                          double alpha_bar);

}  // namespace cds
