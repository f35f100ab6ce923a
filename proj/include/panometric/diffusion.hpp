// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

namespace panometric {

// Linear-beta DDPM schedule with cumulative products.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha
};

NoiseSchedule make_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02);

// Latent field with its timestep; data is flat C*h*w, values unconstrained.
struct LatentState {
  int channels = 0;
  int h = 0;
  int w = 0;
  int t = 0;
  std::vector<double> z;
};

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps
std::vector<double> add_noise(const std::vector<double>& z0, const std::vector<double>& eps,
                              int t, const NoiseSchedule& sched);

// z0 = (z_t - sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_bar_t)
std::vector<double> recover_z0(const std::vector<double>& z_t, const std::vector<double>& eps,
                               int t, const NoiseSchedule& sched);

// Mean squared error over all elements.
double loss_rec(const std::vector<double>& eps_true, const std::vector<double>& eps_pred);

// x.z_P - x.z_N - x.z_R over unit vectors; the full objective subtracts
// lambda times this, so training ascends it.
double loss_dist(const std::vector<double>& x_feature,
                 const std::array<std::vector<double>, 3>& text_embs);

// loss_rec - lambda * loss_dist.
double total_loss(const std::vector<double>& eps_true, const std::vector<double>& eps_pred,
                  const std::vector<double>& x_feature,
                  const std::array<std::vector<double>, 3>& text_embs, double lambda = 0.05);

}  // namespace panometric
