// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "panometric/diffusion.hpp"
#include "panometric/error.hpp"
#include "panometric/rng.hpp"

using namespace panometric;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<double> unit(std::vector<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> basis(std::size_t d, std::size_t k) {
  std::vector<double> v(d, 0.0);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("noise schedule products match hand-computed cases") {
  const NoiseSchedule one = make_schedule(1, 0.5, 0.5);
  REQUIRE(one.T == 1);
  CHECK(one.beta[0] == 0.5);
  CHECK(one.alpha_bar[0] == 0.5);

  const NoiseSchedule two = make_schedule(2, 0.1, 0.2);
  CHECK(two.beta[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(two.beta[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(two.alpha_bar[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(two.alpha_bar[1] == doctest::Approx(0.72).epsilon(1e-15));

  const NoiseSchedule full = make_schedule();
  REQUIRE(full.T == 1000);
  CHECK(full.beta.front() == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(full.beta.back() == doctest::Approx(0.02).epsilon(1e-15));
  for (int t = 1; t < full.T; ++t) {
    CHECK(full.alpha_bar[t] < full.alpha_bar[t - 1]);
    CHECK(full.alpha_bar[t] > 0.0);
  }

  CHECK_THROWS_AS(make_schedule(0), ValidationError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ValidationError);
  CHECK_THROWS_AS(make_schedule(10, 0.5, 0.1), ValidationError);
}

TEST_CASE("add_noise follows the closed form") {
  const NoiseSchedule sched = make_schedule(10, 1e-3, 0.3);
  const std::vector<double> z0 = random_vec(12, 60);
  const std::vector<double> eps = random_vec(12, 61);
  const int t = 5;
  const double a = std::sqrt(sched.alpha_bar[t]);
  const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
  const std::vector<double> zt = add_noise(z0, eps, t, sched);
  for (std::size_t i = 0; i < z0.size(); ++i)
    CHECK(zt[i] == doctest::Approx(a * z0[i] + b * eps[i]).epsilon(1e-15));

  const std::vector<double> zeros(z0.size(), 0.0);
  const std::vector<double> pure = add_noise(z0, zeros, t, sched);
  for (std::size_t i = 0; i < z0.size(); ++i)
    CHECK(pure[i] == doctest::Approx(a * z0[i]).epsilon(1e-15));

  CHECK_THROWS_AS(add_noise(z0, eps, -1, sched), ValidationError);
  CHECK_THROWS_AS(add_noise(z0, eps, sched.T, sched), ValidationError);
  CHECK_THROWS_AS(add_noise(z0, random_vec(5, 62), t, sched), ValidationError);
}

TEST_CASE("recover_z0 inverts add_noise at every timestep") {
  const NoiseSchedule sched = make_schedule();
  const std::vector<double> z0 = random_vec(16, 63);
  const std::vector<double> eps = random_vec(16, 64);
  for (int t = 0; t < sched.T; ++t) {
    const std::vector<double> zt = add_noise(z0, eps, t, sched);
    const std::vector<double> back = recover_z0(zt, eps, t, sched);
    for (std::size_t i = 0; i < z0.size(); ++i) CHECK(std::fabs(back[i] - z0[i]) < 1e-10);
  }

  // with the true eps withheld, recovery rescales z_t by 1/sqrt(alpha_bar)
  const int t = 7;
  const std::vector<double> zeros(z0.size(), 0.0);
  const std::vector<double> scaled = recover_z0(z0, zeros, t, sched);
  const double a = std::sqrt(sched.alpha_bar[t]);
  for (std::size_t i = 0; i < z0.size(); ++i)
    CHECK(scaled[i] == doctest::Approx(z0[i] / a).epsilon(1e-15));
}

TEST_CASE("noised marginals keep unit variance for unit-variance data") {
  const NoiseSchedule sched = make_schedule();
  const std::size_t n = 10000;
  SplitMix64 rng(65);
  for (int t : {0, 250, 500, 999}) {
    const double a = std::sqrt(sched.alpha_bar[t]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = a * rng.normal() + b * rng.normal();
      acc += v * v;
    }
    CHECK(std::fabs(acc / static_cast<double>(n) - 1.0) < 0.03);
  }
}

TEST_CASE("loss_rec is the plain mean squared error") {
  const std::vector<double> x = random_vec(9, 66);
  CHECK(loss_rec(x, x) == 0.0);

  std::vector<double> shifted = x;
  for (double& v : shifted) v += 1.0;
  CHECK(loss_rec(x, shifted) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> y = random_vec(9, 67);
  double expected = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) expected += (x[i] - y[i]) * (x[i] - y[i]);
  expected /= static_cast<double>(x.size());
  CHECK(loss_rec(x, y) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(loss_rec(x, random_vec(4, 68)), ValidationError);
  CHECK_THROWS_AS(loss_rec({}, {}), ValidationError);
}

TEST_CASE("loss_dist rewards the matching prompt and penalizes the other two") {
  const std::size_t d = 8;
  // feature on the first prompt, other prompts orthogonal: 1 - 0 - 0
  CHECK(loss_dist(basis(d, 0), {basis(d, 0), basis(d, 1), basis(d, 2)}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // everything orthogonal: 0 - 0 - 0
  CHECK(loss_dist(basis(d, 3), {basis(d, 0), basis(d, 1), basis(d, 2)}) ==
        doctest::Approx(0.0));

  const std::vector<double> x = unit(random_vec(d, 70));
  const std::array<std::vector<double>, 3> z = {unit(random_vec(d, 71)),
                                                unit(random_vec(d, 72)),
                                                unit(random_vec(d, 73))};
  double dots[3];
  for (int k = 0; k < 3; ++k) {
    dots[k] = 0.0;
    for (std::size_t i = 0; i < d; ++i) dots[k] += x[i] * z[k][i];
  }
  CHECK(loss_dist(x, z) == doctest::Approx(dots[0] - dots[1] - dots[2]).epsilon(1e-12));

  std::vector<double> not_unit = x;
  not_unit[0] += 0.5;
  CHECK_THROWS_AS(loss_dist(not_unit, z), ValidationError);
  CHECK_THROWS_AS(loss_dist(unit(random_vec(4, 74)), z), ValidationError);
}

TEST_CASE("total_loss subtracts the weighted distortion affinity") {
  const std::size_t d = 8;
  const std::vector<double> eps_true = random_vec(d, 75);
  const std::vector<double> eps_pred = random_vec(d, 76);
  const std::vector<double> x = unit(random_vec(d, 77));
  const std::array<std::vector<double>, 3> z = {unit(random_vec(d, 78)),
                                                unit(random_vec(d, 79)),
                                                unit(random_vec(d, 80))};

  CHECK(total_loss(eps_true, eps_pred, x, z, 0.0) ==
        doctest::Approx(loss_rec(eps_true, eps_pred)).epsilon(1e-12));
  const double expected = loss_rec(eps_true, eps_pred) - 0.05 * loss_dist(x, z);
  CHECK(total_loss(eps_true, eps_pred, x, z) == doctest::Approx(expected).epsilon(1e-12));

  // perfect prediction with a perfectly matched prompt: 0 - 0.05 * 1
  CHECK(total_loss(eps_true, eps_true, basis(d, 0), {basis(d, 0), basis(d, 1), basis(d, 2)}) ==
        doctest::Approx(-0.05).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss(eps_true, eps_pred, x, z, -0.1), ValidationError);
}

TEST_CASE("ascending the distortion affinity pulls the feature toward its prompt") {
  const std::size_t d = 8;
  std::vector<double> x = unit(random_vec(d, 81));
  const std::array<std::vector<double>, 3> z = {unit(random_vec(d, 82)),
                                                unit(random_vec(d, 83)),
                                                unit(random_vec(d, 84))};
  const double before = loss_dist(x, z);
  // d(loss_dist)/dx = z_P - z_N - z_R; one ascent step plus renormalization
  const double lr = 0.05;
  for (std::size_t i = 0; i < d; ++i) x[i] += lr * (z[0][i] - z[1][i] - z[2][i]);
  x = unit(x);
  CHECK(loss_dist(x, z) > before);
}
