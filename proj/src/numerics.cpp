// SPDX-License-Identifier: Apache-2.0
#include "panometric/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "panometric/error.hpp"

namespace panometric {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ValidationError("matmul shape mismatch");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      const double v = a.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += v * b.at(k, j);
    }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ValidationError("matrix add shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ValidationError("matrix sub shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

double trace(const Matrix& a) {
  if (a.rows != a.cols) throw ValidationError("trace needs a square matrix");
  double t = 0.0;
  for (int i = 0; i < a.rows; ++i) t += a.at(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      if (i != j) s += a.at(i, j) * a.at(i, j);
  return std::sqrt(s);
}

void require_symmetric(const Matrix& a) {
  if (a.rows != a.cols) throw ValidationError("sym_eigen needs a square matrix");
  const double scale = std::max(1.0, frobenius_norm(a));
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j)
      if (std::fabs(a.at(i, j) - a.at(j, i)) > 1e-8 * scale)
        throw ValidationError("sym_eigen input is not symmetric");
}

}  // namespace

SymEigenResult sym_eigen(const Matrix& input, int max_sweeps, double tol) {
  require_symmetric(input);
  const int n = input.rows;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a.at(i, j) = 0.5 * (input.at(i, j) + input.at(j, i));
  Matrix v = Matrix::identity(n);

  const double frob = std::max(frobenius_norm(a), 1e-300);
  int sweep = 0;
  double off = off_diagonal_norm(a);
  while (off > tol * frob) {
    if (sweep >= max_sweeps)
      throw ValidationError("jacobi eigensolver did not converge after " +
                            std::to_string(sweep) + " sweeps, off-diagonal norm " +
                            std::to_string(off));
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a.at(x, x) < a.at(y, y); });

  SymEigenResult res;
  res.values.resize(n);
  res.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    res.values[j] = a.at(order[j], order[j]);
    for (int i = 0; i < n; ++i) res.vectors.at(i, j) = v.at(i, order[j]);
  }
  res.sweeps = sweep;
  res.off_diagonal = off;
  return res;
}

MatrixSqrtResult matrix_sqrt_psd(const Matrix& a, double clamp_eps) {
  SymEigenResult eig = sym_eigen(a);
  const int n = a.rows;
  MatrixSqrtResult res;
  res.sqrt = Matrix(n, n);
  std::vector<double> roots(n);
  for (int i = 0; i < n; ++i) {
    if (eig.values[i] < -clamp_eps)
      throw ValidationError("matrix_sqrt_psd: eigenvalue " + std::to_string(eig.values[i]) +
                            " below the -" + std::to_string(clamp_eps) + " tolerance");
    if (eig.values[i] < clamp_eps) {
      roots[i] = 0.0;
      if (eig.values[i] < 0.0) ++res.clamped;
    } else {
      roots[i] = std::sqrt(eig.values[i]);
    }
  }
  // V diag(sqrt(w)) V^T without forming intermediates.
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += eig.vectors.at(i, k) * roots[k] * eig.vectors.at(j, k);
      res.sqrt.at(i, j) = s;
      res.sqrt.at(j, i) = s;
    }
  return res;
}

}  // namespace panometric
