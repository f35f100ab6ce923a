// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>

#include "panometric/error.hpp"
#include "panometric/numerics.hpp"
#include "panometric/rng.hpp"

using namespace panometric;

namespace {

Matrix random_symmetric(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = rng.normal();
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
  return a;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k)
    worst = std::max(worst, std::fabs(a.data[k] - b.data[k]));
  return worst;
}

Matrix reconstruct(const SymEigenResult& eig) {
  const int n = static_cast<int>(eig.values.size());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) d.at(i, i) = eig.values[i];
  return matmul(matmul(eig.vectors, d), transpose(eig.vectors));
}

}  // namespace

TEST_CASE("sym_eigen of the identity") {
  const SymEigenResult eig = sym_eigen(Matrix::identity(3));
  for (double v : eig.values) REQUIRE(v == 1.0);
}

TEST_CASE("sym_eigen of diag(4, 9) gives ascending axis pairs") {
  Matrix a(2, 2);
  a.at(0, 0) = 4.0;
  a.at(1, 1) = 9.0;
  const SymEigenResult eig = sym_eigen(a);
  CHECK(eig.values[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(eig.values[1] == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(std::fabs(eig.vectors.at(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(eig.vectors.at(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eigen matches the 2x2 closed form") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const Matrix a = random_symmetric(2, seed);
    const SymEigenResult eig = sym_eigen(a);
    const double half_tr = 0.5 * (a.at(0, 0) + a.at(1, 1));
    const double disc =
        std::sqrt(0.25 * (a.at(0, 0) - a.at(1, 1)) * (a.at(0, 0) - a.at(1, 1)) +
                  a.at(0, 1) * a.at(0, 1));
    CHECK(eig.values[0] == doctest::Approx(half_tr - disc).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(half_tr + disc).epsilon(1e-12));
  }
}

TEST_CASE("sym_eigen reconstructs a random symmetric 6x6") {
  const Matrix a = random_symmetric(6, 77);
  const SymEigenResult eig = sym_eigen(a);
  CHECK(max_abs_diff(reconstruct(eig), a) < 1e-8);

  // eigenvalues ascending
  for (std::size_t k = 1; k < eig.values.size(); ++k)
    REQUIRE(eig.values[k] >= eig.values[k - 1]);

  // orthonormal eigenvectors
  const Matrix vtv = matmul(transpose(eig.vectors), eig.vectors);
  CHECK(max_abs_diff(vtv, Matrix::identity(6)) < 1e-8);
}

TEST_CASE("sym_eigen rejects asymmetry and reports non-convergence") {
  Matrix bad(2, 2);
  bad.at(0, 1) = 1.0;
  bad.at(1, 0) = -1.0;
  CHECK_THROWS_AS(sym_eigen(bad), ValidationError);

  const Matrix a = random_symmetric(4, 5);
  try {
    sym_eigen(a, 0);
    FAIL("expected non-convergence");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sweeps") != std::string::npos);
    CHECK(msg.find("off-diagonal") != std::string::npos);
  }
}

TEST_CASE("matrix_sqrt_psd of diag(4, 9) is diag(2, 3)") {
  Matrix a(2, 2);
  a.at(0, 0) = 4.0;
  a.at(1, 1) = 9.0;
  const Matrix r = matrix_sqrt_psd(a).sqrt;
  CHECK(r.at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.at(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("matrix_sqrt_psd of zero is zero") {
  const Matrix r = matrix_sqrt_psd(Matrix(3, 3)).sqrt;
  for (double v : r.data) REQUIRE(v == 0.0);
}

TEST_CASE("matrix_sqrt_psd squares back to random PSD inputs") {
  SplitMix64 rng(123);
  Matrix b(5, 5);
  for (auto& v : b.data) v = rng.normal();
  const Matrix a = matmul(b, transpose(b));
  const Matrix r = matrix_sqrt_psd(a).sqrt;
  CHECK(max_abs_diff(matmul(r, r), a) < 1e-7);
  CHECK(max_abs_diff(r, transpose(r)) == 0.0);
}

TEST_CASE("matrix_sqrt_psd rejects indefinite input beyond tolerance") {
  Matrix a(2, 2);
  a.at(0, 0) = 1.0;
  a.at(1, 1) = -0.5;
  CHECK_THROWS_AS(matrix_sqrt_psd(a), ValidationError);

  // a tiny negative eigenvalue inside the tolerance is clamped, not rejected
  Matrix almost(2, 2);
  almost.at(0, 0) = 1.0;
  almost.at(1, 1) = -5e-9;
  const MatrixSqrtResult res = matrix_sqrt_psd(almost);
  CHECK(res.clamped == 1);
  CHECK(res.sqrt.at(1, 1) == 0.0);
}

TEST_CASE("matmul and trace basics") {
  Matrix a(2, 3);
  for (int i = 0; i < 6; ++i) a.data[i] = i + 1;
  const Matrix ata = matmul(transpose(a), a);
  REQUIRE(ata.rows == 3);
  REQUIRE(ata.cols == 3);
  CHECK(ata.at(0, 0) == doctest::Approx(1 * 1 + 4 * 4));
  CHECK(trace(ata) == doctest::Approx(1 + 16 + 4 + 25 + 9 + 36));
  CHECK_THROWS_AS(matmul(a, a), ValidationError);
}
