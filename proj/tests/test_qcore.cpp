// Copyright 2026 The aapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <random>

#include "aapt/qcore.hpp"
#include "aapt/random_matrix.hpp"

using namespace aapt;
using Catch::Matchers::WithinAbs;

namespace {

ComplexMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  return random_ginibre(r, c, rng);
}

ComplexMatrix random_hermitian(Eigen::Index d, std::mt19937_64& rng) {
  const ComplexMatrix g = random_matrix(d, d, rng);
  return 0.5 * (g + g.adjoint());
}

ComplexMatrix random_psd(Eigen::Index d, std::mt19937_64& rng) {
  const ComplexMatrix g = random_matrix(d, d, rng);
  return g * g.adjoint();
}

}  // namespace

TEST_CASE("kron matches the quadruple-loop definition", "[qcore]") {
  std::mt19937_64 rng(7);
  const ComplexMatrix a = random_matrix(2, 3, rng);
  const ComplexMatrix b = random_matrix(3, 2, rng);
  const ComplexMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 2; ++q) CHECK(std::abs(k(i * 3 + p, j * 2 + q) - a(i, j) * b(p, q)) < 1e-15);

  const ComplexVector u = ComplexVector::Random(2), v = ComplexVector::Random(3);
  const ComplexVector uv = kron(u, v);
  for (int i = 0; i < 2; ++i)
    for (int p = 0; p < 3; ++p) CHECK(std::abs(uv(i * 3 + p) - u(i) * v(p)) < 1e-15);
}

TEST_CASE("partial trace matches the explicit index sum", "[qcore]") {
  std::mt19937_64 rng(11);
  const Eigen::Index da = 2, db = 3;
  const ComplexMatrix m = random_matrix(da * db, da * db, rng);
  const ComplexMatrix keep_a = partial_trace(m, da, db, Keep::A);
  const ComplexMatrix keep_b = partial_trace(m, da, db, Keep::B);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) {
      Complex s = 0.0;
      for (Eigen::Index k = 0; k < db; ++k) s += m(i * db + k, j * db + k);
      CHECK(std::abs(keep_a(i, j) - s) < 1e-14);
    }
  for (Eigen::Index k = 0; k < db; ++k)
    for (Eigen::Index l = 0; l < db; ++l) {
      Complex s = 0.0;
      for (Eigen::Index i = 0; i < da; ++i) s += m(i * db + k, i * db + l);
      CHECK(std::abs(keep_b(k, l) - s) < 1e-14);
    }
}

TEST_CASE("partial trace of a product state returns the factors", "[qcore]") {
  std::mt19937_64 rng(3);
  ComplexMatrix a = random_psd(2, rng), b = random_psd(2, rng);
  a /= a.trace();
  b /= b.trace();
  CHECK(frobenius_distance(partial_trace(kron(a, b), 2, 2, Keep::A), a) < 1e-14);
  CHECK(frobenius_distance(partial_trace(kron(a, b), 2, 2, Keep::B), b) < 1e-14);
}

TEST_CASE("partial trace rejects mismatched dimensions", "[qcore]") {
  CHECK_THROWS_AS(partial_trace(identity(4), 3, 2, Keep::A), ValidationError);
}

TEST_CASE("herm_eig reconstructs a random 16x16 Hermitian matrix", "[qcore]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix h = random_hermitian(16, rng);
    const auto e = herm_eig(h);
    const ComplexMatrix rebuilt = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.adjoint();
    CHECK(frobenius_distance(rebuilt, h) < 1e-12 * std::max(1.0, h.norm()));
    CHECK(frobenius_distance(e.eigenvectors.adjoint() * e.eigenvectors, identity(16)) < 1e-12);
    for (Eigen::Index i = 1; i < 16; ++i) CHECK(e.eigenvalues(i - 1) <= e.eigenvalues(i));
  }
}

TEST_CASE("herm_eig rejects non-Hermitian input", "[qcore]") {
  ComplexMatrix m = identity(2);
  m(0, 1) = 1e-3;
  CHECK_THROWS_AS(herm_eig(m), ValidationError);
}

TEST_CASE("psd_sqrt squares back and has the expected spectrum", "[qcore]") {
  std::mt19937_64 rng(9);
  const ComplexMatrix p = random_psd(4, rng);
  const ComplexMatrix s = psd_sqrt(p);
  CHECK(frobenius_distance(s * s, p) < 1e-12 * p.norm());
  CHECK(hermiticity_defect(s) < 1e-13);

  const ComplexMatrix diag = Eigen::Vector4d(4.0, 9.0, 0.25, 1.0).cast<Complex>().asDiagonal();
  const ComplexMatrix sd = psd_sqrt(diag);
  CHECK_THAT(sd(0, 0).real(), WithinAbs(2.0, 1e-14));
  CHECK_THAT(sd(1, 1).real(), WithinAbs(3.0, 1e-14));
  CHECK_THAT(sd(2, 2).real(), WithinAbs(0.5, 1e-14));

  const ComplexMatrix inv = psd_inv_sqrt(p);
  CHECK(frobenius_distance(inv * p * inv, identity(4)) < 1e-9);
}

TEST_CASE("psd functions clip tiny negatives and reject larger ones", "[qcore]") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1e-12;
  const ComplexMatrix s = psd_sqrt(m);
  CHECK(std::abs(s(1, 1)) == 0.0);
  m(1, 1) = -1e-6;
  CHECK_THROWS_AS(psd_sqrt(m), ValidationError);
}

TEST_CASE("psd_inv_sqrt floors small eigenvalues", "[qcore]") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 4.0;
  m(1, 1) = 1e-20;
  const ComplexMatrix s = psd_inv_sqrt(m, 1e-12);
  CHECK_THAT(s(0, 0).real(), WithinAbs(0.5, 1e-15));
  CHECK(std::abs(s(1, 1)) == 0.0);
}

TEST_CASE("Pauli matrices satisfy the algebra", "[qcore]") {
  for (int i = 0; i < 4; ++i) {
    CHECK(is_unitary(pauli(i)));
    CHECK(hermiticity_defect(pauli(i)) == 0.0);
    for (int j = 0; j < 4; ++j) {
      const Complex ip = (pauli(i).adjoint() * pauli(j)).trace();
      CHECK(std::abs(ip - Complex(i == j ? 2.0 : 0.0)) < 1e-15);
    }
  }
  CHECK(frobenius_distance(pauli(1) * pauli(2), kI * pauli(3)) < 1e-15);
  CHECK_THROWS_AS(pauli(4), ValidationError);
}

TEST_CASE("Haar unitaries from Ginibre are unitary and deterministic", "[qcore]") {
  std::mt19937_64 a(42), b(42);
  const ComplexMatrix u = random_haar_unitary(4, a);
  CHECK(is_unitary(u, 1e-12));
  CHECK(frobenius_distance(u, random_haar_unitary(4, b)) == 0.0);
}

TEST_CASE("Haar unitaries have the uniform mean |U_00|^2", "[qcore][property]") {
  // For Haar measure on U(d), E|U_00|^2 = 1/d and E|U_00|^4 = 2/(d(d+1)).
  std::mt19937_64 rng(2024);
  const int n = 20000;
  double m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = std::norm(random_haar_unitary(2, rng)(0, 0));
    m2 += a;
    m4 += a * a;
  }
  CHECK_THAT(m2 / n, WithinAbs(0.5, 0.01));
  CHECK_THAT(m4 / n, WithinAbs(1.0 / 3.0, 0.01));
}
