// SPDX-License-Identifier: Apache-2.0
#include "panometric/diffusion.hpp"

#include <cmath>

#include "panometric/error.hpp"

namespace panometric {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw ValidationError("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw ValidationError("make_schedule needs 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    s.beta[t] = T == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * t / static_cast<double>(T - 1);
    s.alpha[t] = 1.0 - s.beta[t];
    prod *= s.alpha[t];
    s.alpha_bar[t] = prod;
  }
  for (int t = 1; t < T; ++t)
    if (!(s.alpha_bar[t] < s.alpha_bar[t - 1]))
      throw ValidationError("make_schedule: alpha_bar not strictly decreasing");
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 0 || t >= sched.T) throw ValidationError("timestep out of range");
}

void check_shapes(const std::vector<double>& a, const std::vector<double>& b,
                  const char* what) {
  if (a.size() != b.size()) throw ValidationError(std::string(what) + ": shape mismatch");
  if (a.empty()) throw ValidationError(std::string(what) + ": empty tensors");
}

}  // namespace

std::vector<double> add_noise(const std::vector<double>& z0, const std::vector<double>& eps,
                              int t, const NoiseSchedule& sched) {
  check_shapes(z0, eps, "add_noise");
  check_step(t, sched);
  const double a = std::sqrt(sched.alpha_bar[t]);
  const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
  std::vector<double> out(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) out[i] = a * z0[i] + b * eps[i];
  return out;
}

std::vector<double> recover_z0(const std::vector<double>& z_t, const std::vector<double>& eps,
                               int t, const NoiseSchedule& sched) {
  check_shapes(z_t, eps, "recover_z0");
  check_step(t, sched);
  if (!(sched.alpha_bar[t] > 0.0))
    throw ValidationError("recover_z0: alpha_bar is zero at this timestep");
  const double a = std::sqrt(sched.alpha_bar[t]);
  const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
  std::vector<double> out(z_t.size());
  for (std::size_t i = 0; i < z_t.size(); ++i) out[i] = (z_t[i] - b * eps[i]) / a;
  return out;
}

double loss_rec(const std::vector<double>& eps_true, const std::vector<double>& eps_pred) {
  check_shapes(eps_true, eps_pred, "loss_rec");
  double acc = 0.0;
  for (std::size_t i = 0; i < eps_true.size(); ++i) {
    const double d = eps_true[i] - eps_pred[i];
    acc += d * d;
  }
  return acc / static_cast<double>(eps_true.size());
}

namespace {

void require_unit(const std::vector<double>& v, const char* what) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (std::fabs(std::sqrt(n2) - 1.0) > 1e-6)
    throw ValidationError(std::string(what) + ": vector must be unit-normalized");
}

}  // namespace

double loss_dist(const std::vector<double>& x_feature,
                 const std::array<std::vector<double>, 3>& text_embs) {
  require_unit(x_feature, "loss_dist");
  for (const auto& z : text_embs) {
    if (z.size() != x_feature.size()) throw ValidationError("loss_dist: dimension mismatch");
    require_unit(z, "loss_dist");
  }
  double dots[3];
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x_feature.size(); ++i) s += x_feature[i] * text_embs[k][i];
    dots[k] = s;
  }
  return dots[0] - dots[1] - dots[2];
}

double total_loss(const std::vector<double>& eps_true, const std::vector<double>& eps_pred,
                  const std::vector<double>& x_feature,
                  const std::array<std::vector<double>, 3>& text_embs, double lambda) {
  if (lambda < 0.0) throw ValidationError("total_loss: lambda must be >= 0");
  return loss_rec(eps_true, eps_pred) - lambda * loss_dist(x_feature, text_embs);
}

}  // namespace panometric
