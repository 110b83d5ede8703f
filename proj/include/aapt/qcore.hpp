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

// Small dense complex linear algebra for the 2-, 4- and 16-dimensional
// Hermitian problems that show up in two-qubit process tomography.
//
// Storage and the Hermitian eigensolver come from Eigen; everything
// tomography-specific (tensor products with the A-slow index order, partial
// traces, PSD functions with clipping rules) lives here.

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "aapt/errors.hpp"

namespace aapt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Eigenvalues ascending; eigenvector k is column k.
struct EigenDecomposition {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;
};

enum class Keep { A, B };

inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).norm();
}

inline bool is_square(const ComplexMatrix& m) { return m.rows() == m.cols(); }

inline double hermiticity_defect(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitize(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline ComplexMatrix identity(Eigen::Index d) { return ComplexMatrix::Identity(d, d); }

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

// entry[(i*b.rows()+k),(j*b.cols()+l)] = a(i,j) * b(k,l)
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Partial trace of an operator on C^dA (x) C^dB; `keep` names the surviving factor.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, Eigen::Index dim_a, Eigen::Index dim_b,
                                   Keep keep) {
  if (!is_square(m) || m.rows() != dim_a * dim_b)
    throw ValidationError("partial_trace: matrix of size " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + " does not match dims (" +
                          std::to_string(dim_a) + "," + std::to_string(dim_b) + ")");
  if (keep == Keep::A) {
    ComplexMatrix out = ComplexMatrix::Zero(dim_a, dim_a);
    for (Eigen::Index i = 0; i < dim_a; ++i)
      for (Eigen::Index j = 0; j < dim_a; ++j)
        out(i, j) = m.block(i * dim_b, j * dim_b, dim_b, dim_b).trace();
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(dim_b, dim_b);
  for (Eigen::Index i = 0; i < dim_a; ++i) out += m.block(i * dim_b, i * dim_b, dim_b, dim_b);
  return out;
}

inline constexpr double kHermitianTolerance = 1e-8;
inline constexpr double kNegativeEigenvalueTolerance = 1e-10;

// Symmetrizes before decomposing; rejects inputs further than 1e-8 from Hermitian.
inline EigenDecomposition herm_eig(const ComplexMatrix& m) {
  if (!is_square(m)) throw ValidationError("herm_eig: matrix is not square");
  if (m.size() > 0 && hermiticity_defect(m) > kHermitianTolerance)
    throw ValidationError("herm_eig: matrix is not Hermitian (defect " +
                          std::to_string(hermiticity_defect(m)) + ")");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitize(m));
  if (solver.info() != Eigen::Success) throw NumericalError("herm_eig: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

inline ComplexMatrix spectral_function(const EigenDecomposition& e, const RealVector& f) {
  return e.eigenvectors * f.cast<Complex>().asDiagonal() * e.eigenvectors.adjoint();
}

inline void check_psd(const EigenDecomposition& e, const char* who) {
  if (e.eigenvalues.size() > 0 && e.eigenvalues(0) < -kNegativeEigenvalueTolerance)
    throw ValidationError(std::string(who) + ": matrix has negative eigenvalue " +
                          std::to_string(e.eigenvalues(0)));
}

}  // namespace detail

// Eigenvalues in [-1e-10, 0) are clipped to zero; anything more negative is an error.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  const auto e = herm_eig(m);
  detail::check_psd(e, "psd_sqrt");
  RealVector f = e.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return detail::spectral_function(e, f);
}

// Pseudo-inverse square root: eigenvalues below `floor` map to zero, so
// result * m * result is the projector onto the retained support.
inline ComplexMatrix psd_inv_sqrt(const ComplexMatrix& m, double floor = 1e-12) {
  const auto e = herm_eig(m);
  detail::check_psd(e, "psd_inv_sqrt");
  RealVector f(e.eigenvalues.size());
  for (Eigen::Index k = 0; k < f.size(); ++k)
    f(k) = e.eigenvalues(k) > floor ? 1.0 / std::sqrt(e.eigenvalues(k)) : 0.0;
  return detail::spectral_function(e, f);
}

// Pauli matrices, index order I, X, Y, Z.
inline ComplexMatrix pauli(int index) {
  ComplexMatrix p(2, 2);
  switch (index) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, -kI, kI, 0; break;
    case 3: p << 1, 0, 0, -1; break;
    default: throw ValidationError("pauli: index must be 0..3");
  }
  return p;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = 1e-8) {
  return is_square(u) && (u.adjoint() * u - identity(u.rows())).norm() <= tol;
}

}  // namespace aapt
