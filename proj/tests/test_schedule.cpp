#include <cmath>
#include <random>

#include "doctest.h"

#include "cds/elementwise.hpp"
#include "cds/error.hpp"
#include "cds/schedule.hpp"
#include "support.hpp"

using namespace cds;

namespace {

// Independent route: sum of log(1 - beta) in long double, exponentiated.
std::vector<long double> oracle_alpha_bar(ScheduleKind kind, int steps, long double b0,
                                          long double b1) {
  std::vector<long double> out;
  long double log_sum = 0.0L;
  for (int s = 1; s <= steps; ++s) {
    long double f = steps == 1 ? 0.0L : static_cast<long double>(s - 1) / (steps - 1);
    long double beta = kind == ScheduleKind::Linear
                           ? b0 * (1.0L - f) + b1 * f
                           : std::pow(std::sqrt(b0) * (1.0L - f) + std::sqrt(b1) * f, 2.0L);
    log_sum += std::log1p(-beta);
    out.push_back(std::exp(log_sum));
  }
  return out;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("linear two-step schedule") {
  NoiseSchedule s = build_noise_schedule(ScheduleKind::Linear, 2, 0.1, 0.2);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
}

TEST_CASE("stable diffusion schedule first step") {
  NoiseSchedule s = build_noise_schedule(ScheduleKind::ScaledLinear, 1000, 0.00085, 0.012);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.99915).epsilon(1e-14));
  CHECK(s.steps() == 1000);
}

TEST_CASE("schedules match the log-space oracle") {
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::ScaledLinear}) {
    NoiseSchedule s = build_noise_schedule(kind, 1000, 0.00085, 0.012);
    auto oracle = oracle_alpha_bar(kind, 1000, 0.00085L, 0.012L);
    double worst = 0.0;
    for (int t = 1; t <= 1000; ++t) {
      worst = std::max(worst, static_cast<double>(std::abs(s.alpha_bar(t) - oracle[t - 1])));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("random schedules are strictly decreasing in (0, 1)") {
  std::mt19937 gen(5);
  // beta <= 0.05 keeps alpha_bar_T >= 0.95^2000, well inside double range.
  std::uniform_real_distribution<double> u(1e-5, 0.05);
  std::uniform_int_distribution<int> steps(1, 2000);
  for (int i = 0; i < 200; ++i) {
    double a = u(gen), b = u(gen);
    NoiseSchedule s = build_noise_schedule(i % 2 ? ScheduleKind::Linear : ScheduleKind::ScaledLinear,
                                           steps(gen), std::min(a, b), std::max(a, b));
    const auto& v = s.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      REQUIRE(v[k] > 0.0);
      REQUIRE(v[k] < 1.0);
      if (k) REQUIRE(v[k] < v[k - 1]);
    }
  }
}

TEST_CASE("schedule argument errors") {
  CHECK_THROWS_AS(build_noise_schedule(ScheduleKind::Linear, 0, 0.1, 0.2), Error);
  CHECK_THROWS_AS(build_noise_schedule(ScheduleKind::Linear, 10, 0.2, 0.1), Error);
  CHECK_THROWS_AS(build_noise_schedule(ScheduleKind::Linear, 10, 0.0, 0.1), Error);
  CHECK_THROWS_AS(build_noise_schedule(ScheduleKind::Linear, 10, 0.1, 1.0), Error);
  CHECK_THROWS_AS(NoiseSchedule({0.5, 0.6}), Error);
  // alpha_bar underflows to zero long before t = 5000 with beta = 0.5.
  CHECK_THROWS_AS(build_noise_schedule(ScheduleKind::Linear, 5000, 0.4, 0.5), Error);
  NoiseSchedule s({0.9, 0.5});
  CHECK_THROWS_AS(s.alpha_bar(0), Error);
  CHECK_THROWS_AS(s.alpha_bar(3), Error);
}

TEST_CASE("timestep plan examples") {
  CHECK(plan_timesteps(2, 970, 30).steps() == std::vector<int>{970, 30});
  CHECK(plan_timesteps(5, 900, 100).steps() == std::vector<int>{900, 700, 500, 300, 100});
  CHECK(plan_timesteps(1, 500, 30).steps() == std::vector<int>{500});
  auto full = plan_timesteps(300, 970, 30);
  CHECK(full.size() == 300);
  CHECK(full[0] == 970);
  CHECK(full[299] == 30);
}

TEST_CASE("timestep plan errors") {
  CHECK_THROWS_AS(plan_timesteps(0, 10, 1), Error);
  CHECK_THROWS_AS(plan_timesteps(3, 10, 0), Error);
  CHECK_THROWS_AS(plan_timesteps(3, 5, 10), Error);
  try {
    plan_timesteps(12, 10, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("smaller K") != std::string::npos);
  }
}

TEST_CASE("random plans are strictly decreasing and bounded") {
  std::mt19937 gen(17);
  std::uniform_int_distribution<int> t(1, 1000);
  for (int i = 0; i < 1000; ++i) {
    int a = t(gen), b = t(gen);
    int t_max = std::max(a, b), t_min = std::min(a, b);
    std::uniform_int_distribution<int> k(1, t_max - t_min + 1);
    int steps = k(gen);
    auto plan = plan_timesteps(steps, t_max, t_min);
    REQUIRE(plan.size() == static_cast<std::size_t>(steps));
    REQUIRE(plan[0] == t_max);
    for (std::size_t j = 0; j < plan.size(); ++j) {
      REQUIRE(plan[j] <= t_max);
      REQUIRE(plan[j] >= t_min);
      if (j) REQUIRE(plan[j] < plan[j - 1]);
    }
    if (steps > 1) REQUIRE(plan[plan.size() - 1] == t_min);
  }
}

TEST_CASE("add_noise limits and hand check") {
  LatentTensor x0 = cds::testing::random_tensor(1, Shape{2, 3, 3});
  LatentTensor eps = cds::testing::random_tensor(2, Shape{2, 3, 3});
  CHECK(std::ranges::equal(add_noise_at(x0, eps, 1.0).values(), x0.values()));
  CHECK(std::ranges::equal(add_noise_at(x0, eps, 0.0).values(), eps.values()));

  LatentTensor two(Shape{1, 1, 1}, 2.0f), one(Shape{1, 1, 1}, 1.0f);
  CHECK(add_noise_at(two, one, 0.25).values()[0] == doctest::Approx(1.8660254).epsilon(1e-6));

  NoiseSchedule s({0.9, 0.25});
  CHECK(add_noise(two, one, 2, s).values()[0] == doctest::Approx(1.8660254).epsilon(1e-6));
  CHECK_THROWS_AS(add_noise(two, one, 3, s), Error);
}

TEST_CASE("add_noise is linear") {
  NoiseSchedule s = build_noise_schedule(ScheduleKind::ScaledLinear, 1000, 0.00085, 0.012);
  LatentTensor x0 = cds::testing::random_tensor(3, Shape{4, 8, 8});
  LatentTensor eps = cds::testing::random_tensor(4, Shape{4, 8, 8});
  for (double a : {-2.0, 0.5, 3.0}) {
    for (int t : {1, 500, 1000}) {
      LatentTensor lhs = add_noise(scaled(x0, a), scaled(eps, a), t, s);
      LatentTensor rhs = scaled(add_noise(x0, eps, t, s), a);
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        REQUIRE(lhs.values()[i] == doctest::Approx(rhs.values()[i]).epsilon(1e-6));
      }
    }
  }
}

}  // TEST_SUITE
