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

// Ginibre matrices and Haar unitaries built as deterministic functions of a
// vector of standard-normal coordinates, so that samplers can treat them as
// maps from a Gaussian base measure.

#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "aapt/qcore.hpp"

namespace aapt {

// Real and imaginary parts are consecutive; entries are row-major. Each
// complex entry has unit variance (real/imag parts with variance 1/2).
inline ComplexMatrix ginibre_from_params(std::span<const double> x, Eigen::Index rows,
                                         Eigen::Index cols) {
  if (x.size() != static_cast<std::size_t>(2 * rows * cols))
    throw ValidationError("ginibre_from_params: expected " + std::to_string(2 * rows * cols) +
                          " coordinates, got " + std::to_string(x.size()));
  ComplexMatrix g(rows, cols);
  const double scale = std::sqrt(0.5);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j, k += 2) g(i, j) = scale * Complex(x[k], x[k + 1]);
  return g;
}

// QR with the phases of diag(R) moved into Q; this makes the map
// Ginibre -> U push the Gaussian measure forward to Haar measure.
inline ComplexMatrix haar_from_ginibre(const ComplexMatrix& z) {
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double mag = std::abs(r(j, j));
    const Complex phase = mag > 0.0 ? r(j, j) / mag : Complex(1.0, 0.0);
    q.col(j) *= phase;
  }
  return q;
}

inline std::vector<double> standard_normal_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

inline ComplexMatrix random_ginibre(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const auto x = standard_normal_vector(static_cast<std::size_t>(2 * rows * cols), rng);
  return ginibre_from_params(x, rows, cols);
}

inline ComplexMatrix random_haar_unitary(Eigen::Index d, std::mt19937_64& rng) {
  return haar_from_ginibre(random_ginibre(d, d, rng));
}

}  // namespace aapt
