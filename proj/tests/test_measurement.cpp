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

#include "aapt/measurement.hpp"
#include "aapt/random_matrix.hpp"

using namespace aapt;
using Catch::Matchers::WithinAbs;

namespace {

const ComplexMatrix& psi_plus_state() {
  static const ComplexMatrix m = projector(bell::psi_plus());
  return m;
}

std::size_t index_of(const std::string& label) {
  const auto s = all_settings();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i].label() == label) return i;
  throw std::runtime_error("no setting " + label);
}

DensityMatrix random_state(std::mt19937_64& rng) {
  const ComplexMatrix g = random_ginibre(4, 4, rng);
  ComplexMatrix r = g * g.adjoint();
  return DensityMatrix(r / r.trace());
}

}  // namespace

TEST_CASE("polarization vectors are unit norm with orthogonal basis pairs", "[measurement]") {
  for (auto p : kPolarizations) CHECK_THAT(polarization_vector(p).norm(), WithinAbs(1.0, 1e-15));
  for (int b = 0; b < 3; ++b) {
    const auto u = polarization_vector(kPolarizations[2 * b]);
    const auto v = polarization_vector(kPolarizations[2 * b + 1]);
    CHECK(std::abs(u.dot(v)) < 1e-15);
  }
  CHECK(std::abs(polarization_vector(Polarization::R)(1) - Complex(0.0, std::sqrt(0.5))) < 1e-15);
}

TEST_CASE("all_settings enumerates 36 alice-major settings", "[measurement]") {
  const auto s = all_settings();
  REQUIRE(s.size() == 36);
  CHECK(s.front().label() == "HH");
  CHECK(s[1].label() == "HV");
  CHECK(s[6].label() == "VH");
  CHECK(s.back().label() == "LL");

  // each of the nine bases resolves the identity
  for (int basis = 0; basis < 9; ++basis) {
    ComplexMatrix sum = ComplexMatrix::Zero(4, 4);
    int members = 0;
    for (const auto& m : s)
      if (m.joint_basis() == basis) {
        sum += m.projector();
        ++members;
      }
    CHECK(members == 4);
    CHECK(frobenius_distance(sum, identity(4)) < 1e-12);
  }

  const ComplexMatrix hv = s[index_of("HV")].projector();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(hv(i, j) - Complex(i == 1 && j == 1 ? 1.0 : 0.0)) < 1e-15);
  for (const auto& m : s) CHECK(frobenius_distance(m.projector() * m.projector(), m.projector()) < 1e-12);
}

TEST_CASE("setting labels round trip", "[measurement]") {
  for (const auto& s : all_settings()) CHECK(setting_from_label(s.label()) == s);
  CHECK_FALSE(setting_from_label("HX"));
  CHECK_FALSE(setting_from_label("H"));
}

TEST_CASE("Born probabilities of psi+ follow Bell correlations", "[measurement]") {
  const auto p = born_probabilities(psi_plus_state(), all_settings());
  CHECK_THAT(p[index_of("HV")], WithinAbs(0.5, 1e-15));
  CHECK_THAT(p[index_of("HH")], WithinAbs(0.0, 1e-15));
  CHECK_THAT(p[index_of("DD")], WithinAbs(0.5, 1e-15));
  CHECK_THAT(p[index_of("DA")], WithinAbs(0.0, 1e-15));
  double total = 0.0;
  for (double v : p) total += v;
  CHECK_THAT(total, WithinAbs(9.0, 1e-9));

  const auto mixed = born_probabilities(DensityMatrix::maximally_mixed(4), all_settings());
  for (double v : mixed) CHECK_THAT(v, WithinAbs(0.25, 1e-15));
  CHECK_THROWS_AS(born_probabilities(identity(2), all_settings()), ValidationError);
}

TEST_CASE("per-basis probabilities sum to one for random states", "[measurement][property]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = born_probabilities(random_state(rng), all_settings());
    std::array<double, 9> sums{};
    const auto s = all_settings();
    for (std::size_t i = 0; i < 36; ++i) sums[static_cast<std::size_t>(s[i].joint_basis())] += p[i];
    for (double v : sums) CHECK_THAT(v, WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("forward probabilities apply the channel to qubit B", "[measurement]") {
  const DensityMatrix psi = DensityMatrix::from_pure(bell::psi_plus());
  const auto id = forward_probabilities(psi, make_identity(), all_settings());
  const auto direct = born_probabilities(psi, all_settings());
  for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs(id[i] - direct[i]) < 1e-12);

  const auto flipped = forward_probabilities(psi, make_unitary(pauli(1)), all_settings());
  CHECK_THAT(flipped[index_of("HH")], WithinAbs(0.5, 1e-14));
  CHECK_THAT(flipped[index_of("HV")], WithinAbs(0.0, 1e-14));
}

TEST_CASE("forward model matches a term-by-term Kraus oracle", "[measurement]") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_state(rng);
    const ComplexMatrix u = random_haar_unitary(2, rng);
    const double p = 0.3;
    const KrausSet k({std::sqrt(1 - p) * u, std::sqrt(p) * pauli(3)});
    const auto fwd = forward_probabilities(rho, k, all_settings());
    const auto s = all_settings();
    for (std::size_t i = 0; i < 36; ++i) {
      double oracle = 0.0;
      for (const auto& a : k.operators()) {
        // <alpha beta| (1 (x) A) rho (1 (x) A)^dag |alpha beta>
        ComplexVector w = ComplexVector::Zero(4);
        const ComplexVector va = polarization_vector(s[i].alice);
        const ComplexVector vb = a.adjoint() * polarization_vector(s[i].bob);
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) w(2 * x + y) = va(x) * vb(y);
        oracle += (w.adjoint() * rho.mat() * w)(0, 0).real();
      }
      CHECK(std::abs(fwd[i] - oracle) < 1e-12);
    }
    // tabulated linear map agrees as well
    ChannelForwardModel model(rho, s);
    std::vector<double> lin;
    model.probabilities(choi_from_kraus(k).mat(), lin);
    for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs(lin[i] - fwd[i]) < 1e-12);
    StateForwardModel sm(s);
    std::vector<double> st;
    sm.probabilities(rho.mat(), st);
    const auto born = born_probabilities(rho, s);
    for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs(st[i] - born[i]) < 1e-12);
  }
}

TEST_CASE("simulate_counts handles the zero-rate cases", "[measurement]") {
  const std::vector<double> p(36, 0.25);
  const auto none = simulate_counts(p, NoiseModel{0.0, 0.0, 1});
  for (const auto& r : none) CHECK(r.counts == 0);
  CHECK(none.front().duration == 30.0);
  CHECK_THROWS_AS(simulate_counts(p, NoiseModel{-1.0, 0.0, 1}), ValidationError);
  CHECK_THROWS_AS(simulate_counts(std::vector<double>(3, 0.1), NoiseModel{1.0, 0.0, 1}), ValidationError);
}

TEST_CASE("simulate_counts means follow flux p + background", "[measurement]") {
  const auto p = born_probabilities(psi_plus_state(), all_settings());
  std::vector<double> sum(36, 0.0), bsum(36, 0.0), bsq(36, 0.0);
  const int draws = 1000;
  for (int d = 0; d < draws; ++d) {
    const auto r = simulate_counts(p, NoiseModel{1e6, 0.0, static_cast<std::uint64_t>(d)});
    const auto b = simulate_counts(p, NoiseModel{0.0, 100.0, static_cast<std::uint64_t>(d + 5000)});
    for (std::size_t i = 0; i < 36; ++i) {
      sum[i] += static_cast<double>(r[i].counts);
      bsum[i] += static_cast<double>(b[i].counts);
    }
  }
  for (std::size_t i = 0; i < 36; ++i) {
    const double expected = 1e6 * p[i];
    if (expected > 0.0)
      CHECK(std::abs(sum[i] / draws - expected) <= 0.005 * expected);
    else
      CHECK(sum[i] == 0.0);
    // sample mean of Poisson(100) over 1000 draws has std sqrt(100/1000);
    // 4.5 sigma keeps the family of 36 cells below a 1e-4 false alarm rate
    CHECK(std::abs(bsum[i] / draws - 100.0) <= 4.5 * std::sqrt(100.0 / draws));
  }
  double pooled = 0.0;
  for (double b : bsum) pooled += b;
  CHECK(std::abs(pooled / (36.0 * draws) - 100.0) <= 3.0 * std::sqrt(100.0 / (36.0 * draws)));
}

TEST_CASE("simulate_counts is reproducible per seed", "[measurement]") {
  const std::vector<double> p(36, 0.25);
  const auto a = simulate_counts(p, NoiseModel{1e4, 3.0, 77});
  const auto b = simulate_counts(p, NoiseModel{1e4, 3.0, 77});
  const auto c = simulate_counts(p, NoiseModel{1e4, 3.0, 78});
  bool differs = false;
  for (std::size_t i = 0; i < 36; ++i) {
    CHECK(a[i].counts == b[i].counts);
    differs = differs || a[i].counts != c[i].counts;
  }
  CHECK(differs);
}
