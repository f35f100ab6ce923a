// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "panometric/io.hpp"
#include "panometric/numerics.hpp"

namespace panometric {

// Sample mean and covariance (divisor n - 1) of n feature rows.
struct GaussianStats {
  std::vector<double> mean;
  Matrix covariance;
  int n = 0;
};

// rows: n x d row-major. Requires n >= 2.
GaussianStats gaussian_stats(const std::vector<double>& rows, int n, int d);
GaussianStats gaussian_stats(const FeatureFile& file);

// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 sqrt(S1 S2)), with the cross term computed
// in the symmetric form sqrt(sqrt(S1) S2 sqrt(S1)). Clamped at zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Frechet distance between two feature files. Throws ValidationError when the
// extractor hashes differ: scores from different extractors do not compare.
double distort_fid(const FeatureFile& generated, const FeatureFile& reference);

// Inception score over class posteriors (n x k, rows sum to 1). Per split:
// exp(mean_i KL(p_i || mean of the split)). Returns {mean, std} over splits.
std::pair<double, double> inception_score(const std::vector<double>& probs, int n, int k,
                                          int splits = 10);

// All pairwise dot products of unit-norm rows: out[i*m+j] = x_i . y_j.
std::vector<double> similarity_matrix(const std::vector<double>& x, int n,
                                      const std::vector<double>& y, int m, int d);

}  // namespace panometric
