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

// States and single-qudit channels in Kraus, Choi and chi (Pauli-basis) form.
//
// Conventions, shared by every module and recorded in every serialized file:
//  * joint basis |HH>,|HV>,|VH>,|VV>: subsystem A (ancilla) is the slow index;
//  * Choi matrix Phi = (1_A (x) E_B)(|phi+><phi+|), normalized to Tr Phi = 1;
//  * extracted Kraus operators <i|A_k|j> = sqrt(d e_k) <j i|gamma_k>;
//  * chi basis operators satisfy Tr(E_i^dag E_j) = d delta_ij.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "aapt/qcore.hpp"

namespace aapt {

inline Eigen::Index qudit_dim_from_joint(Eigen::Index joint, const char* who) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(joint))));
  if (d * d != joint || d < 1)
    throw ValidationError(std::string(who) + ": dimension " + std::to_string(joint) +
                          " is not a perfect square");
  return d;
}

class DensityMatrix {
public:
  explicit DensityMatrix(ComplexMatrix m, double tol = 1e-10) : mat_(std::move(m)) {
    if (!is_square(mat_) || mat_.rows() == 0)
      throw ValidationError("DensityMatrix: matrix must be square and non-empty");
    if (hermiticity_defect(mat_) > tol)
      throw ValidationError("DensityMatrix: not Hermitian");
    if (std::abs(mat_.trace() - Complex(1.0, 0.0)) > tol)
      throw ValidationError("DensityMatrix: trace " + std::to_string(mat_.trace().real()) +
                            " differs from 1");
    const auto e = herm_eig(mat_);
    if (e.eigenvalues(0) < -tol)
      throw ValidationError("DensityMatrix: negative eigenvalue " +
                            std::to_string(e.eigenvalues(0)));
    mat_ = hermitize(mat_);
  }

  // For matrices produced by maps that are valid by construction.
  static DensityMatrix trusted(ComplexMatrix m) { return DensityMatrix(std::move(m), Trusted{}); }

  static DensityMatrix from_pure(const ComplexVector& psi) {
    return DensityMatrix(projector(psi / psi.norm()));
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(identity(dim) / static_cast<double>(dim));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& mat() const { return mat_; }
  double purity() const { return (mat_ * mat_).trace().real(); }

private:
  struct Trusted {};
  DensityMatrix(ComplexMatrix m, Trusted) : mat_(std::move(m)) {}
  ComplexMatrix mat_;
};

class KrausSet {
public:
  explicit KrausSet(std::vector<ComplexMatrix> ops, double tol = 1e-8) : ops_(std::move(ops)) {
    if (ops_.empty()) throw ValidationError("KrausSet: needs at least one operator");
    d_ = ops_.front().rows();
    if (d_ == 0) throw ValidationError("KrausSet: empty operator");
    if (static_cast<Eigen::Index>(ops_.size()) > d_ * d_)
      throw ValidationError("KrausSet: " + std::to_string(ops_.size()) +
                            " operators exceed the maximal Choi rank " + std::to_string(d_ * d_));
    ComplexMatrix sum = ComplexMatrix::Zero(d_, d_);
    for (const auto& a : ops_) {
      if (a.rows() != d_ || a.cols() != d_)
        throw ValidationError("KrausSet: operators must all be " + std::to_string(d_) + "x" +
                              std::to_string(d_));
      sum += a.adjoint() * a;
    }
    const double defect = (sum - identity(d_)).norm();
    if (defect > tol)
      throw ValidationError("KrausSet: sum A^dag A deviates from identity by " +
                            std::to_string(defect));
  }

  Eigen::Index d() const { return d_; }
  std::size_t rank() const { return ops_.size(); }
  const std::vector<ComplexMatrix>& operators() const { return ops_; }

private:
  std::vector<ComplexMatrix> ops_;
  Eigen::Index d_ = 0;
};

class ChoiMatrix {
public:
  // psd_tol guards positivity and unit trace, tp_tol the partial-trace condition.
  explicit ChoiMatrix(ComplexMatrix m, double psd_tol = 1e-10, double tp_tol = 1e-8)
      : mat_(std::move(m)) {
    if (!is_square(mat_)) throw ValidationError("ChoiMatrix: matrix must be square");
    d_ = qudit_dim_from_joint(mat_.rows(), "ChoiMatrix");
    if (hermiticity_defect(mat_) > psd_tol) throw ValidationError("ChoiMatrix: not Hermitian");
    mat_ = hermitize(mat_);
    if (std::abs(mat_.trace().real() - 1.0) > psd_tol)
      throw ValidationError("ChoiMatrix: trace " + std::to_string(mat_.trace().real()) +
                            " differs from 1");
    const auto e = herm_eig(mat_);
    if (e.eigenvalues(0) < -psd_tol)
      throw ValidationError("ChoiMatrix: not positive semidefinite (min eigenvalue " +
                            std::to_string(e.eigenvalues(0)) + ")");
    const ComplexMatrix reduced = partial_trace(mat_, d_, d_, Keep::A);
    const double tp = (reduced - identity(d_) / static_cast<double>(d_)).norm();
    if (tp > tp_tol)
      throw ValidationError("ChoiMatrix: not trace preserving (Tr_B deviation " +
                            std::to_string(tp) + ")");
  }

  static ChoiMatrix trusted(ComplexMatrix m) { return ChoiMatrix(std::move(m), Trusted{}); }

  Eigen::Index d() const { return d_; }
  const ComplexMatrix& mat() const { return mat_; }
  double purity() const { return (mat_ * mat_).trace().real(); }

private:
  struct Trusted {};
  ChoiMatrix(ComplexMatrix m, Trusted) : mat_(std::move(m)) {
    d_ = qudit_dim_from_joint(mat_.rows(), "ChoiMatrix");
  }
  ComplexMatrix mat_;
  Eigen::Index d_ = 0;
};

// Operator basis with Tr(E_i^dag E_j) = d delta_ij: Paulis I,X,Y,Z for d = 2,
// clock-and-shift operators X^a Z^b otherwise.
inline std::vector<ComplexMatrix> operator_basis(Eigen::Index d) {
  std::vector<ComplexMatrix> basis;
  if (d == 2) {
    for (int i = 0; i < 4; ++i) basis.push_back(pauli(i));
    return basis;
  }
  ComplexMatrix shift = ComplexMatrix::Zero(d, d);
  ComplexMatrix clock = ComplexMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    shift((k + 1) % d, k) = 1.0;
    clock(k, k) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                      static_cast<double>(d));
  }
  ComplexMatrix xa = identity(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    ComplexMatrix zb = identity(d);
    for (Eigen::Index b = 0; b < d; ++b) {
      basis.push_back(xa * zb);
      zb = zb * clock;
    }
    xa = xa * shift;
  }
  return basis;
}

class ProcessMatrixChi {
public:
  explicit ProcessMatrixChi(ComplexMatrix chi, double tol = 1e-8)
      : ProcessMatrixChi(std::move(chi), {}, tol) {}

  ProcessMatrixChi(ComplexMatrix chi, std::vector<ComplexMatrix> basis, double tol = 1e-8)
      : mat_(std::move(chi)), basis_(std::move(basis)) {
    if (!is_square(mat_)) throw ValidationError("ProcessMatrixChi: matrix must be square");
    d_ = qudit_dim_from_joint(mat_.rows(), "ProcessMatrixChi");
    if (basis_.empty()) basis_ = operator_basis(d_);
    if (static_cast<Eigen::Index>(basis_.size()) != d_ * d_)
      throw ValidationError("ProcessMatrixChi: basis needs d^2 operators");
    if (hermiticity_defect(mat_) > tol) throw ValidationError("ProcessMatrixChi: not Hermitian");
    mat_ = hermitize(mat_);
    const auto e = herm_eig(mat_);
    if (e.eigenvalues(0) < -tol)
      throw ValidationError("ProcessMatrixChi: not positive semidefinite");
    ComplexMatrix sum = ComplexMatrix::Zero(d_, d_);
    for (Eigen::Index i = 0; i < d_ * d_; ++i)
      for (Eigen::Index j = 0; j < d_ * d_; ++j)
        sum += mat_(i, j) * basis_[j].adjoint() * basis_[i];
    if ((sum - identity(d_)).norm() > tol)
      throw ValidationError("ProcessMatrixChi: not trace preserving");
  }

  Eigen::Index d() const { return d_; }
  const ComplexMatrix& mat() const { return mat_; }
  const std::vector<ComplexMatrix>& basis() const { return basis_; }

private:
  ComplexMatrix mat_;
  std::vector<ComplexMatrix> basis_;
  Eigen::Index d_ = 0;
};

namespace bell {

// (|HV> + |VH>)/sqrt 2
inline ComplexVector psi_plus() {
  ComplexVector v = ComplexVector::Zero(4);
  v(1) = v(2) = std::numbers::sqrt2 / 2.0;
  return v;
}

// (1/sqrt d) sum_n |n_A n_B>
inline ComplexVector phi_plus(Eigen::Index d = 2) {
  ComplexVector v = ComplexVector::Zero(d * d);
  for (Eigen::Index n = 0; n < d; ++n) v(n * d + n) = 1.0 / std::sqrt(static_cast<double>(d));
  return v;
}

}  // namespace bell

inline DensityMatrix apply_channel(const KrausSet& k, const DensityMatrix& rho) {
  if (k.d() != rho.dim())
    throw ValidationError("apply_channel: channel dimension " + std::to_string(k.d()) +
                          " does not match state dimension " + std::to_string(rho.dim()));
  ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
  for (const auto& a : k.operators()) out += a * rho.mat() * a.adjoint();
  return DensityMatrix::trusted(hermitize(out));
}

// E(X) = d Tr_A[(X^T (x) 1) Phi], valid for any operator X.
inline ComplexMatrix apply_choi(const ChoiMatrix& c, const ComplexMatrix& x) {
  const Eigen::Index d = c.d();
  if (x.rows() != d || x.cols() != d)
    throw ValidationError("apply_choi: operator dimension does not match channel");
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index n = 0; n < d; ++n)
      out += x(m, n) * c.mat().block(m * d, n * d, d, d);
  return static_cast<double>(d) * out;
}

// (1_A (x) E_B)(rho_AB) by Choi contraction:
// out[(i,k),(j,l)] = d sum_{m,n} rho[(i,m),(j,n)] Phi[(m,k),(n,l)].
inline ComplexMatrix apply_on_b(const ChoiMatrix& c, const ComplexMatrix& rho_ab) {
  const Eigen::Index d = c.d();
  if (rho_ab.rows() % d != 0 || !is_square(rho_ab))
    throw ValidationError("apply_on_b: joint state dimension not divisible by channel dimension");
  const Eigen::Index da = rho_ab.rows() / d;
  ComplexMatrix out = ComplexMatrix::Zero(rho_ab.rows(), rho_ab.cols());
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) {
      auto block = out.block(i * d, j * d, d, d);
      for (Eigen::Index m = 0; m < d; ++m)
        for (Eigen::Index n = 0; n < d; ++n)
          block += rho_ab(i * d + m, j * d + n) * c.mat().block(m * d, n * d, d, d);
    }
  return static_cast<double>(d) * out;
}

inline ChoiMatrix choi_from_kraus(const KrausSet& k) {
  const Eigen::Index d = k.d();
  const ComplexVector phi = bell::phi_plus(d);
  ComplexMatrix out = ComplexMatrix::Zero(d * d, d * d);
  for (const auto& a : k.operators()) {
    const ComplexVector v = kron(identity(d), a) * phi;
    out += v * v.adjoint();
  }
  return ChoiMatrix::trusted(hermitize(out));
}

namespace detail {

// Largest-magnitude entry made real positive; the first entry within 1e-12 of
// the maximum wins, scanning row-major.
inline ComplexMatrix fix_global_phase(ComplexMatrix a) {
  const double max_mag = a.cwiseAbs().maxCoeff();
  if (max_mag == 0.0) return a;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (std::abs(a(i, j)) >= max_mag - 1e-12) {
        a *= std::conj(a(i, j)) / std::abs(a(i, j));
        return a;
      }
  return a;
}

}  // namespace detail

// Eigenpairs with e_k > rank_tol become <i|A_k|j> = sqrt(d e_k) <j i|gamma_k>,
// ordered by decreasing e_k.
inline KrausSet kraus_from_choi(const ChoiMatrix& c, double rank_tol = 1e-10) {
  const Eigen::Index d = c.d();
  const auto e = herm_eig(c.mat());
  std::vector<ComplexMatrix> ops;
  for (Eigen::Index k = e.eigenvalues.size() - 1; k >= 0; --k) {
    const double ek = e.eigenvalues(k);
    if (ek <= rank_tol) continue;
    ComplexMatrix a(d, d);
    const double scale = std::sqrt(static_cast<double>(d) * ek);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = scale * e.eigenvectors(j * d + i, k);
    ops.push_back(detail::fix_global_phase(std::move(a)));
  }
  if (ops.empty()) throw NumericalError("kraus_from_choi: no eigenvalue above rank tolerance");
  return KrausSet(std::move(ops), 1e-6);
}

inline ProcessMatrixChi chi_from_kraus(const KrausSet& k) {
  const Eigen::Index d = k.d();
  const auto basis = operator_basis(d);
  const Eigen::Index n = d * d;
  ComplexMatrix chi = ComplexMatrix::Zero(n, n);
  for (const auto& a : k.operators()) {
    ComplexVector coeff(n);
    for (Eigen::Index i = 0; i < n; ++i)
      coeff(i) = (basis[i].adjoint() * a).trace() / static_cast<double>(d);
    chi += coeff * coeff.adjoint();
  }
  return ProcessMatrixChi(hermitize(chi), basis, 1e-6);
}

inline KrausSet kraus_from_chi(const ProcessMatrixChi& x, double rank_tol = 1e-10) {
  const auto e = herm_eig(x.mat());
  std::vector<ComplexMatrix> ops;
  for (Eigen::Index k = e.eigenvalues.size() - 1; k >= 0; --k) {
    const double lk = e.eigenvalues(k);
    if (lk <= rank_tol) continue;
    ComplexMatrix a = ComplexMatrix::Zero(x.d(), x.d());
    for (Eigen::Index i = 0; i < x.mat().rows(); ++i)
      a += std::sqrt(lk) * e.eigenvectors(i, k) * x.basis()[i];
    ops.push_back(detail::fix_global_phase(std::move(a)));
  }
  if (ops.empty()) throw NumericalError("kraus_from_chi: no eigenvalue above rank tolerance");
  return KrausSet(std::move(ops), 1e-6);
}

inline ProcessMatrixChi chi_from_choi(const ChoiMatrix& c) { return chi_from_kraus(kraus_from_choi(c)); }
inline ChoiMatrix choi_from_chi(const ProcessMatrixChi& x) { return choi_from_kraus(kraus_from_chi(x)); }

struct CptpReport {
  double min_eigenvalue = 0.0;
  double tp_deviation = 0.0;      // ||Tr_B Phi - 1/d||_F
  double trace_deviation = 0.0;   // |Tr Phi - 1|
  double hermiticity_defect = 0.0;
  bool passed = false;
};

inline CptpReport validate_cptp(const ComplexMatrix& choi, double tol) {
  CptpReport r;
  if (!is_square(choi)) return r;
  const Eigen::Index d = qudit_dim_from_joint(choi.rows(), "validate_cptp");
  r.hermiticity_defect = hermiticity_defect(choi);
  const ComplexMatrix h = hermitize(choi);
  r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(h, Eigen::EigenvaluesOnly)
                         .eigenvalues()(0);
  r.trace_deviation = std::abs(h.trace().real() - 1.0);
  r.tp_deviation =
      (partial_trace(h, d, d, Keep::A) - identity(d) / static_cast<double>(d)).norm();
  r.passed = r.hermiticity_defect <= tol && r.min_eigenvalue >= -tol &&
             r.trace_deviation <= tol && r.tp_deviation <= tol;
  return r;
}

inline CptpReport validate_cptp(const ChoiMatrix& c, double tol) { return validate_cptp(c.mat(), tol); }

// Channel that applies `first`, then `second`; the Kraus form is re-extracted
// from the Choi matrix so the rank stays minimal.
inline KrausSet compose(const KrausSet& first, const KrausSet& second) {
  if (first.d() != second.d()) throw ValidationError("compose: channel dimensions differ");
  const Eigen::Index d = first.d();
  const ComplexVector phi = bell::phi_plus(d);
  ComplexMatrix choi = ComplexMatrix::Zero(d * d, d * d);
  for (const auto& b : second.operators())
    for (const auto& a : first.operators()) {
      const ComplexVector v = kron(identity(d), ComplexMatrix(b * a)) * phi;
      choi += v * v.adjoint();
    }
  return kraus_from_choi(ChoiMatrix::trusted(hermitize(choi)));
}

// ---------------------------------------------------------------------------
// Ground-truth catalog

inline KrausSet make_identity(Eigen::Index d = 2) { return KrausSet({identity(d)}); }

inline KrausSet make_unitary(const ComplexMatrix& u) {
  if (!is_unitary(u)) throw ValidationError("make_unitary: matrix is not unitary within 1e-8");
  return KrausSet({u});
}

// rho -> (1 - p) rho + p I/2
inline KrausSet make_depolarizing(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("make_depolarizing: p must lie in [0,1]");
  std::vector<ComplexMatrix> ops{std::sqrt(1.0 - 0.75 * p) * pauli(0)};
  if (p > 0.0)
    for (int i = 1; i < 4; ++i) ops.push_back(std::sqrt(p / 4.0) * pauli(i));
  return KrausSet(std::move(ops));
}

enum class SpectralShape { Rectangular, Gaussian };

// Normalized power spectrum around the carrier; frequencies are offsets in Hz.
// For the Gaussian shape `bandwidth` is the FWHM.
struct SpectralWindow {
  SpectralShape shape = SpectralShape::Rectangular;
  double bandwidth = 0.0;

  double density(double nu) const {
    if (shape == SpectralShape::Rectangular)
      return std::abs(nu) <= 0.5 * bandwidth ? 1.0 / bandwidth : 0.0;
    const double sigma = gaussian_sigma();
    return std::exp(-0.5 * nu * nu / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }

  double gaussian_sigma() const { return bandwidth / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }
};

// Integral of S(nu) exp(i 2 pi nu tau) over the window; real for the
// symmetric shapes supported here.
inline double pmd_coherence(double dgd, const SpectralWindow& s) {
  if (dgd < 0.0) throw ValidationError("pmd: differential group delay must be nonnegative");
  if (!(s.bandwidth > 0.0)) throw ValidationError("pmd: spectral bandwidth must be positive");
  if (s.shape == SpectralShape::Rectangular) {
    const double arg = std::numbers::pi * s.bandwidth * dgd;
    return arg == 0.0 ? 1.0 : std::sin(arg) / arg;
  }
  const double sigma = s.gaussian_sigma();
  return std::exp(-2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma * dgd * dgd);
}

// Spectrum-averaged Jones matrix diag(e^{i pi nu tau}, e^{-i pi nu tau}) in the
// principal-state basis (columns of `principal_basis`): coherences between the
// principal states are multiplied by the window's coherence factor c. Written
// as a two-element mixed-unitary Kraus set; a negative c contributes a
// pi retardance on the first operator.
inline KrausSet make_pmd(double dgd, const SpectralWindow& spectrum,
                         const ComplexMatrix& principal_basis = identity(2)) {
  if (!is_unitary(principal_basis) || principal_basis.rows() != 2)
    throw ValidationError("make_pmd: principal basis must be a 2x2 unitary");
  const double c = pmd_coherence(dgd, spectrum);
  const double gamma = std::abs(c);
  const ComplexMatrix& v = principal_basis;
  ComplexMatrix phase = identity(2);
  if (c < 0.0) phase = v * (kI * pauli(3)) * v.adjoint();
  const ComplexMatrix z = v * pauli(3) * v.adjoint();
  std::vector<ComplexMatrix> ops{std::sqrt(0.5 * (1.0 + gamma)) * phase};
  if (gamma < 1.0) ops.push_back(std::sqrt(0.5 * (1.0 - gamma)) * phase * z);
  return KrausSet(std::move(ops));
}

}  // namespace aapt
