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

// Forward model for ancilla-assisted tomography with Pauli-6 polarization
// projections: Born-rule probabilities of the 36 joint settings and a
// Poissonian coincidence-count simulator.

#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "aapt/channel.hpp"

namespace aapt {

enum class Polarization { H, V, D, A, R, L };

inline constexpr std::array<Polarization, 6> kPolarizations{
    Polarization::H, Polarization::V, Polarization::D,
    Polarization::A, Polarization::R, Polarization::L};

inline char polarization_label(Polarization p) { return "HVDARL"[static_cast<int>(p)]; }

inline std::optional<Polarization> polarization_from_label(char c) {
  switch (c) {
    case 'H': return Polarization::H;
    case 'V': return Polarization::V;
    case 'D': return Polarization::D;
    case 'A': return Polarization::A;
    case 'R': return Polarization::R;
    case 'L': return Polarization::L;
    default: return std::nullopt;
  }
}

// Circular states use |R> = (1, i)/sqrt 2, |L> = (1, -i)/sqrt 2.
inline ComplexVector polarization_vector(Polarization p) {
  const double h = std::numbers::sqrt2 / 2.0;
  ComplexVector v(2);
  switch (p) {
    case Polarization::H: v << 1.0, 0.0; break;
    case Polarization::V: v << 0.0, 1.0; break;
    case Polarization::D: v << h, h; break;
    case Polarization::A: v << h, -h; break;
    case Polarization::R: v << h, Complex(0.0, h); break;
    case Polarization::L: v << h, Complex(0.0, -h); break;
  }
  return v;
}

// Index of the basis (0 rectilinear, 1 diagonal, 2 circular).
inline int polarization_basis(Polarization p) { return static_cast<int>(p) / 2; }

struct MeasurementSetting {
  Polarization alice;
  Polarization bob;

  ComplexVector vector() const {
    return kron(polarization_vector(alice), polarization_vector(bob));
  }
  ComplexMatrix projector() const { return aapt::projector(vector()); }
  std::string label() const { return {polarization_label(alice), polarization_label(bob)}; }
  // 0..8, alice-major
  int joint_basis() const { return 3 * polarization_basis(alice) + polarization_basis(bob); }

  friend bool operator==(const MeasurementSetting&, const MeasurementSetting&) = default;
};

inline std::optional<MeasurementSetting> setting_from_label(std::string_view label) {
  if (label.size() != 2) return std::nullopt;
  const auto a = polarization_from_label(label[0]);
  const auto b = polarization_from_label(label[1]);
  if (!a || !b) return std::nullopt;
  return MeasurementSetting{*a, *b};
}

struct MeasurementRecord {
  MeasurementSetting setting;
  double duration = 0.0;  // seconds
  std::int64_t counts = 0;
};

// flux: expected true coincidences per basis per acquisition;
// background: expected accidentals per setting per acquisition.
struct NoiseModel {
  double flux = 0.0;
  double background = 0.0;
  std::uint64_t seed = 0;
  double duration = 30.0;
};

// 36 settings, alice-major in H,V,D,A,R,L order.
inline std::vector<MeasurementSetting> all_settings() {
  std::vector<MeasurementSetting> out;
  out.reserve(36);
  for (auto a : kPolarizations)
    for (auto b : kPolarizations) out.push_back({a, b});
  return out;
}

inline std::vector<double> born_probabilities(const ComplexMatrix& rho_out,
                                              const std::vector<MeasurementSetting>& settings) {
  if (rho_out.rows() != 4 || rho_out.cols() != 4)
    throw ValidationError("born_probabilities: expected a 4x4 two-qubit state");
  std::vector<double> p;
  p.reserve(settings.size());
  for (const auto& s : settings) {
    const ComplexVector v = s.vector();
    p.push_back(std::clamp((v.adjoint() * rho_out * v)(0, 0).real(), 0.0, 1.0));
  }
  return p;
}

inline std::vector<double> born_probabilities(const DensityMatrix& rho_out,
                                              const std::vector<MeasurementSetting>& settings) {
  return born_probabilities(rho_out.mat(), settings);
}

// Lifts each Kraus operator to 1 (x) A_k on the joint space.
inline DensityMatrix apply_on_b(const KrausSet& k, const DensityMatrix& rho_in) {
  if (k.d() != 2 || rho_in.dim() != 4)
    throw ValidationError("apply_on_b: expects a qubit channel and a two-qubit state");
  ComplexMatrix out = ComplexMatrix::Zero(4, 4);
  for (const auto& a : k.operators()) {
    const ComplexMatrix lifted = kron(identity(2), a);
    out += lifted * rho_in.mat() * lifted.adjoint();
  }
  return DensityMatrix::trusted(hermitize(out));
}

inline std::vector<double> forward_probabilities(const DensityMatrix& rho_in, const KrausSet& channel,
                                                 const std::vector<MeasurementSetting>& settings) {
  return born_probabilities(apply_on_b(channel, rho_in), settings);
}

// p_s = <phi_s|rho|phi_s> for a fixed setting list, as one matrix product.
class StateForwardModel {
public:
  explicit StateForwardModel(const std::vector<MeasurementSetting>& settings)
      : rows_(static_cast<Eigen::Index>(settings.size()), 4) {
    for (std::size_t s = 0; s < settings.size(); ++s)
      rows_.row(static_cast<Eigen::Index>(s)) = settings[s].vector().adjoint();
  }

  void probabilities(const ComplexMatrix& rho, std::vector<double>& out) const {
    const ComplexMatrix t = rows_ * rho;
    out.resize(static_cast<std::size_t>(rows_.rows()));
    for (Eigen::Index s = 0; s < rows_.rows(); ++s)
      out[static_cast<std::size_t>(s)] =
          std::clamp((t.row(s) * rows_.row(s).adjoint())(0, 0).real(), 0.0, 1.0);
  }

private:
  ComplexMatrix rows_;
};

// For a fixed input state, p_s is linear in the Choi matrix:
// p_s = Re sum_ab M(s, ab) Phi(a, b). The map is tabulated once by pushing
// the 16 matrix units through the Choi contraction.
class ChannelForwardModel {
public:
  ChannelForwardModel(const DensityMatrix& rho_in, const std::vector<MeasurementSetting>& settings)
      : map_(static_cast<Eigen::Index>(settings.size()), 16) {
    if (rho_in.dim() != 4) throw ValidationError("ChannelForwardModel: input must be two-qubit");
    for (Eigen::Index a = 0; a < 4; ++a)
      for (Eigen::Index b = 0; b < 4; ++b) {
        ComplexMatrix unit = ComplexMatrix::Zero(4, 4);
        unit(a, b) = 1.0;
        const ComplexMatrix out = contract(unit, rho_in.mat());
        for (std::size_t s = 0; s < settings.size(); ++s) {
          const ComplexVector v = settings[s].vector();
          map_(static_cast<Eigen::Index>(s), a * 4 + b) = (v.adjoint() * out * v)(0, 0);
        }
      }
  }

  void probabilities(const ComplexMatrix& choi, std::vector<double>& out) const {
    if (choi.rows() != 4 || choi.cols() != 4)
      throw ValidationError("ChannelForwardModel: expected a 4x4 Choi matrix");
    Eigen::Map<const Eigen::Matrix<Complex, 16, 1>> flat(choi.data());
    // Eigen stores column-major: flat(k) = choi(k % 4, k / 4)
    out.resize(static_cast<std::size_t>(map_.rows()));
    for (Eigen::Index s = 0; s < map_.rows(); ++s) {
      double acc = 0.0;
      for (Eigen::Index a = 0; a < 4; ++a)
        for (Eigen::Index b = 0; b < 4; ++b)
          acc += (map_(s, a * 4 + b) * flat(b * 4 + a)).real();
      out[static_cast<std::size_t>(s)] = std::clamp(acc, 0.0, 1.0);
    }
  }

private:
  static ComplexMatrix contract(const ComplexMatrix& phi, const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(4, 4);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        for (Eigen::Index m = 0; m < 2; ++m)
          for (Eigen::Index n = 0; n < 2; ++n)
            out.block(i * 2, j * 2, 2, 2) += rho(i * 2 + m, j * 2 + n) * phi.block(m * 2, n * 2, 2, 2);
    return 2.0 * out;
  }

  ComplexMatrix map_;
};

// counts_s ~ Poisson(flux p_s + background), one engine seeded per call.
inline std::vector<MeasurementRecord> simulate_counts(const std::vector<double>& probs,
                                                      const std::vector<MeasurementSetting>& settings,
                                                      const NoiseModel& noise) {
  if (probs.size() != settings.size())
    throw ValidationError("simulate_counts: probabilities and settings differ in length");
  if (noise.flux < 0.0 || noise.background < 0.0)
    throw ValidationError("simulate_counts: flux and background must be nonnegative");
  std::mt19937_64 rng(noise.seed);
  std::vector<MeasurementRecord> records;
  records.reserve(settings.size());
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const double mean = noise.flux * probs[s] + noise.background;
    std::int64_t n = 0;
    if (mean > 0.0) n = std::poisson_distribution<std::int64_t>(mean)(rng);
    records.push_back({settings[s], noise.duration, n});
  }
  return records;
}

inline std::vector<MeasurementRecord> simulate_counts(const std::vector<double>& probs,
                                                      const NoiseModel& noise) {
  return simulate_counts(probs, all_settings(), noise);
}

}  // namespace aapt
