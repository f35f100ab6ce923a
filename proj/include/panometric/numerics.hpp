// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace panometric {

// Dense row-major double matrix. Sizes here stay small (feature dims <= 64),
// so plain O(n^3) routines are deliberate.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);

// Cyclic Jacobi eigendecomposition of a symmetric matrix: a = V diag(w) V^T.
// Eigenvalues are sorted ascending; columns of `vectors` follow the sort.
struct SymEigenResult {
  std::vector<double> values;
  Matrix vectors;
  int sweeps = 0;          // sweeps actually used
  double off_diagonal = 0; // remaining off-diagonal Frobenius mass
};

SymEigenResult sym_eigen(const Matrix& a, int max_sweeps = 64, double tol = 1e-12);

// Principal square root of a nearly-PSD symmetric matrix via eigen-clamp.
// Eigenvalues below `clamp_eps` count as numerical noise and are zeroed.
struct MatrixSqrtResult {
  Matrix sqrt;
  int clamped = 0;  // eigenvalues clamped to zero
};

MatrixSqrtResult matrix_sqrt_psd(const Matrix& a, double clamp_eps = 1e-8);

}  // namespace panometric
