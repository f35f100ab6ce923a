// SPDX-License-Identifier: Apache-2.0
#include "panometric/metrics.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "panometric/error.hpp"

namespace panometric {

GaussianStats gaussian_stats(const std::vector<double>& rows, int n, int d) {
  if (n < 2) throw ValidationError("covariance needs at least 2 samples, got " + std::to_string(n));
  if (d < 1) throw ValidationError("feature dimension must be positive");
  if (rows.size() != static_cast<std::size_t>(n) * d)
    throw ValidationError("feature buffer size does not match n x d");
  GaussianStats s;
  s.n = n;
  s.mean.assign(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) s.mean[j] += rows[static_cast<std::size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) s.mean[j] /= n;

  s.covariance = Matrix(d, d);
  for (int i = 0; i < n; ++i) {
    const double* r = &rows[static_cast<std::size_t>(i) * d];
    for (int a = 0; a < d; ++a) {
      const double da = r[a] - s.mean[a];
      for (int b = a; b < d; ++b) s.covariance.at(a, b) += da * (r[b] - s.mean[b]);
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const double v = s.covariance.at(a, b) / (n - 1);
      s.covariance.at(a, b) = v;
      s.covariance.at(b, a) = v;
    }
  return s;
}

GaussianStats gaussian_stats(const FeatureFile& file) {
  std::vector<double> rows(file.data.begin(), file.data.end());
  return gaussian_stats(rows, static_cast<int>(file.n), static_cast<int>(file.d));
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const int d = static_cast<int>(a.mean.size());
  if (static_cast<int>(b.mean.size()) != d)
    throw ValidationError("frechet distance between different dimensions: " +
                          std::to_string(d) + " vs " + std::to_string(b.mean.size()));
  double mean_term = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a.mean[j] - b.mean[j];
    mean_term += diff * diff;
  }
  const Matrix s = matrix_sqrt_psd(a.covariance).sqrt;
  const Matrix cross = matrix_sqrt_psd(matmul(matmul(s, b.covariance), s)).sqrt;
  const double value =
      mean_term + trace(a.covariance) + trace(b.covariance) - 2.0 * trace(cross);
  return value < 0.0 ? 0.0 : value;
}

double distort_fid(const FeatureFile& generated, const FeatureFile& reference) {
  if (std::memcmp(generated.extractor_hash.data(), reference.extractor_hash.data(),
                  generated.extractor_hash.size()) != 0)
    throw ValidationError("feature files come from different extractors (" +
                          hex_digest(generated.extractor_hash) + " vs " +
                          hex_digest(reference.extractor_hash) + ")");
  return frechet_distance(gaussian_stats(generated), gaussian_stats(reference));
}

std::pair<double, double> inception_score(const std::vector<double>& probs, int n, int k,
                                          int splits) {
  if (n < 1 || k < 1) throw ValidationError("inception score needs n >= 1 and k >= 1");
  if (probs.size() != static_cast<std::size_t>(n) * k)
    throw ValidationError("probability buffer size does not match n x k");
  if (splits < 1) throw ValidationError("inception score needs splits >= 1");
  if (n % splits != 0)
    throw ValidationError("sample count " + std::to_string(n) +
                          " is not divisible by splits " + std::to_string(splits));
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < k; ++j) {
      const double p = probs[static_cast<std::size_t>(i) * k + j];
      if (p < 0.0) throw ValidationError("negative probability in row " + std::to_string(i));
      row_sum += p;
    }
    if (std::fabs(row_sum - 1.0) > 1e-6)
      throw ValidationError("probability row " + std::to_string(i) + " sums to " +
                            std::to_string(row_sum));
  }

  const int per_split = n / splits;
  std::vector<double> scores(splits);
  std::vector<double> marginal(k);
  for (int s = 0; s < splits; ++s) {
    std::fill(marginal.begin(), marginal.end(), 0.0);
    const int base = s * per_split;
    for (int i = 0; i < per_split; ++i)
      for (int j = 0; j < k; ++j)
        marginal[j] += probs[static_cast<std::size_t>(base + i) * k + j];
    for (int j = 0; j < k; ++j) marginal[j] /= per_split;

    double mean_kl = 0.0;
    for (int i = 0; i < per_split; ++i) {
      double kl = 0.0;
      for (int j = 0; j < k; ++j) {
        const double p = probs[static_cast<std::size_t>(base + i) * k + j];
        if (p > 0.0) kl += p * std::log(p / marginal[j]);
      }
      mean_kl += kl;
    }
    scores[s] = std::exp(mean_kl / per_split);
  }

  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= splits;
  double var = 0.0;
  for (double v : scores) var += (v - mean) * (v - mean);
  const double stddev = splits > 1 ? std::sqrt(var / splits) : 0.0;
  return {mean, stddev};
}

std::vector<double> similarity_matrix(const std::vector<double>& x, int n,
                                      const std::vector<double>& y, int m, int d) {
  if (n < 1 || m < 1 || d < 1) throw ValidationError("similarity matrix needs n, m, d >= 1");
  if (x.size() != static_cast<std::size_t>(n) * d || y.size() != static_cast<std::size_t>(m) * d)
    throw ValidationError("embedding buffer sizes do not match the given shapes");
  auto check_unit = [d](const std::vector<double>& rows, int count, const char* side) {
    for (int i = 0; i < count; ++i) {
      double norm_sq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = rows[static_cast<std::size_t>(i) * d + j];
        norm_sq += v * v;
      }
      if (std::fabs(std::sqrt(norm_sq) - 1.0) > 1e-6)
        throw ValidationError(std::string(side) + " row " + std::to_string(i) +
                              " is not unit norm");
    }
  };
  check_unit(x, n, "left");
  check_unit(y, m, "right");

  std::vector<double> out(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c)
        dot += x[static_cast<std::size_t>(i) * d + c] * y[static_cast<std::size_t>(j) * d + c];
      out[static_cast<std::size_t>(i) * m + j] = dot;
    }
  return out;
}

}  // namespace panometric
