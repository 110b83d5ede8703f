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

// Acceptance suite. Prints one PASS/FAIL line per criterion followed by the
// measured quantities, and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aapt/analysis.hpp"
#include "aapt/report.hpp"

using namespace aapt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

DensityMatrix random_qubit_state(std::mt19937_64& rng) {
  const ComplexMatrix g = random_ginibre(2, 2, rng);
  ComplexMatrix r = g * g.adjoint();
  return DensityMatrix(r / r.trace());
}

double fidelity_to(const ChoiMatrix& c, const ComplexVector& v) {
  return (v.adjoint() * c.mat() * v)(0, 0).real();
}

ChainConfig paper_chain(std::uint64_t seed) {
  ChainConfig c;  // 2^18 recorded steps, 2^10 kept
  c.seed = seed;
  return c;
}

const DensityMatrix& psi_plus_in() {
  static const DensityMatrix s = DensityMatrix::from_pure(bell::psi_plus());
  return s;
}

// 1. Kraus -> Choi -> Kraus and Kraus -> chi -> Kraus on 100 prior channels.
Outcome criterion_1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const KrausSet k = kraus_from_choi(lebesgue_channel_map(standard_normal_vector(32, rng)));
    const KrausSet via_choi = kraus_from_choi(choi_from_kraus(k));
    const KrausSet via_chi = kraus_from_chi(chi_from_kraus(k));
    for (int s = 0; s < 100; ++s) {
      const auto rho = random_qubit_state(rng);
      const ComplexMatrix ref = apply_channel(k, rho).mat();
      worst = std::max(worst, frobenius_distance(apply_channel(via_choi, rho).mat(), ref));
      worst = std::max(worst, frobenius_distance(apply_channel(via_chi, rho).mat(), ref));
    }
  }
  return {worst <= 1e-8, fmt("max Frobenius error %.3e (tol 1e-8)", worst)};
}

// 2. Identity channel structure.
Outcome criterion_2() {
  const double choi_err = frobenius_distance(choi_from_kraus(make_identity()).mat(), projector(bell::phi_plus()));
  const ComplexMatrix chi = chi_from_kraus(make_identity()).mat();
  double off = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i || j) off = std::max(off, std::abs(chi(i, j)));
  const double ii = std::abs(chi(0, 0) - 1.0);
  const bool pass = choi_err <= 1e-12 && ii <= 1e-12 && off < 1e-12;
  return {pass, fmt("Choi error %.2e", choi_err) + fmt(", |chi_II - 1| %.2e", ii) + fmt(", max off-diagonal %.2e (tol 1e-12)", off)};
}

// 3. End-to-end channel recovery at flux 1e5, zero background.
Outcome criterion_3_case(const std::string& name, const KrausSet& truth, const ComplexMatrix& reference,
                         double target, double tolerance, bool at_least, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto records = simulate_counts(forward_probabilities(psi_plus_in(), truth, all_settings()),
                                       NoiseModel{1e5, 0.0, seed});
  const auto s = run_pcn(ChannelPrior{}, records, paper_chain(seed + 1), psi_plus_in());
  const ComplexVector v = kron(identity(2), reference) * bell::phi_plus();
  const auto f = posterior_summary(s, [&](const ChoiMatrix& c) { return fidelity_to(c, v); });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = (at_least ? f.mean >= target : std::abs(f.mean - target) <= tolerance) && secs < 300.0;
  std::printf("    case %s: fidelity %.5f +/- %.5f, acceptance %.3f, %.1f s\n", name.c_str(), f.mean, f.std,
              s.acceptance_rate, secs);
  return {ok, ""};
}

Outcome criterion_3() {
  std::mt19937_64 rng(303);
  const ComplexMatrix u = random_haar_unitary(2, rng);
  const auto a = criterion_3_case("a identity", make_identity(), identity(2), 0.99, 0.0, true, 310);
  const auto b = criterion_3_case("b random unitary", make_unitary(u), u, 0.99, 0.0, true, 320);
  const auto c = criterion_3_case("c depolarizing 0.1", make_depolarizing(0.1), identity(2), 1.0 - 0.75 * 0.1,
                                  0.01, false, 330);
  return {a.pass && b.pass && c.pass, "(a,b) >= 0.99; (c) within 0.01 of 0.925; < 300 s each"};
}

// 4. Posterior std of the identity-channel process fidelity at flux 1e3 vs 1e5.
// The same ratio for an interior channel (depolarizing 0.1) is printed for
// comparison only; the criterion is judged on the identity case.
double fidelity_std_ratio(const KrausSet& truth, const char* name) {
  double stds[2];
  const double fluxes[2] = {1e3, 1e5};
  for (int i = 0; i < 2; ++i) {
    const auto records = simulate_counts(forward_probabilities(psi_plus_in(), truth, all_settings()),
                                         NoiseModel{fluxes[i], 0.0, 410});
    const auto s = run_pcn(ChannelPrior{}, records, paper_chain(411), psi_plus_in());
    const auto f = posterior_summary(s, [](const ChoiMatrix& c) { return process_fidelity(c); });
    stds[i] = f.std;
    std::printf("    %s, flux %.0e: fidelity %.6f +/- %.3e\n", name, fluxes[i], f.mean, f.std);
  }
  return stds[0] / stds[1];
}

Outcome criterion_4() {
  const double ratio = fidelity_std_ratio(make_identity(), "identity");
  const double interior = fidelity_std_ratio(make_depolarizing(0.1), "depolarizing 0.1 (reference)");
  std::printf("    reference ratio for depolarizing 0.1: %.2f\n", interior);
  return {ratio >= 5.0 && ratio <= 20.0, fmt("identity std ratio %.2f (required [5, 20])", ratio)};
}

// 5. Arithmetic quoted for the deployed link.
Outcome criterion_5() {
  const double loss = channel_loss_db(33854, 20056);
  const std::string a = report::format_percent(0.951, 0.001);
  const std::string b = report::format_percent(0.935, 0.002);
  const bool ok = std::abs(loss - 2.27) <= 0.005 && a == "95.1(1)%" && b == "93.5(2)%";
  return {ok, fmt("loss %.4f dB (2.27 +/- 0.005)", loss) + ", formatted " + a + " and " + b};
}

// The reference input is the known psi+ so that background counts on the link
// are not partly cancelled by the same background in a local estimate.
ExperimentConfig sweep_config(std::uint64_t seed, double top_flux, double background) {
  ExperimentConfig cfg;
  cfg.noise = NoiseModel{top_flux, background, 0, 30.0};
  cfg.input_source = InputStateSource::Truth;
  cfg.chain = paper_chain(0);
  cfg.assumed_background = 0.0;  // raw coincidences, as with measured data
  cfg.infer_output_state = false;
  cfg.seed = seed;
  return cfg;
}

void print_points(const ExperimentResult& r) {
  for (const auto& p : r.points)
    std::printf("      B = %6.3f THz: fidelity %.5f +/- %.5f (truth %.5f)\n", p.label_value * 1e-12,
                p.process.mean, p.process.std, p.ground_truth.at("truth_process_fidelity"));
}

// 6. Bandwidth-sweep trends.
Outcome criterion_6() {
  BandwidthSweepConfig sweep;
  const double lo = 0.025e12, hi = 4.38e12;
  for (int i = 0; i < 8; ++i) sweep.bandwidths.push_back(lo * std::pow(hi / lo, i / 7.0));
  sweep.shape = SpectralShape::Rectangular;

  auto start = std::chrono::steady_clock::now();
  sweep.dgd = 0.0;
  const auto noisy = run_bandwidth_sweep(sweep, sweep_config(601, 1e5, 20.0));
  const double t1 = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool up = monotone_within_error(noisy.points, false);
  std::printf("    dgd = 0, background 20 per setting: nondecreasing %s, %.1f s\n", up ? "yes" : "no", t1);
  print_points(noisy);

  start = std::chrono::steady_clock::now();
  sweep.dgd = 1.0 / hi;  // first coherence zero at the widest passband
  std::mt19937_64 rng(602);
  sweep.principal_basis = random_haar_unitary(2, rng);
  const auto pmd = run_bandwidth_sweep(sweep, sweep_config(603, 1e7, 0.0));
  const double t2 = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool down = monotone_within_error(pmd.points, true) &&
                    pmd.points.back().process.mean < pmd.points.front().process.mean;
  std::printf("    dgd = %.3g s, zero background: decreasing %s, %.1f s\n", sweep.dgd, down ? "yes" : "no", t2);
  print_points(pmd);
  return {up && down && t1 < 1200.0 && t2 < 1200.0, "each step within 1 posterior std; < 1200 s per sweep"};
}

// 7. Constant-truth 24-point stability run.
Outcome criterion_7() {
  std::mt19937_64 rng(701);
  const KrausSet truth = compose(make_depolarizing(4.0 * 0.049 / 3.0), make_unitary(random_haar_unitary(2, rng)));
  ExperimentConfig cfg;
  cfg.noise = NoiseModel{1e5, 0.0, 0, 30.0};
  cfg.chain = paper_chain(0);
  cfg.infer_output_state = false;
  cfg.seed = 702;
  const auto res = run_stability_experiment(std::vector<KrausSet>(24, truth), cfg);
  std::vector<double> means;
  double posterior_std = 0.0;
  for (const auto& p : res.points) {
    means.push_back(p.process.mean);
    posterior_std += p.process.std / 24.0;
  }
  const auto spread = summarize(means);
  const double ratio = spread.std / posterior_std;
  std::printf("    mean fidelity %.4f, sample std of means %.2e, mean posterior std %.2e\n", spread.mean,
              spread.std, posterior_std);
  return {res.points.size() == 24 && ratio < 3.0, fmt("ratio %.2f (required < 3)", ratio)};
}

// 8. Prior correctness.
Outcome criterion_8() {
  std::mt19937_64 rng(801);
  int failures = 0;
  ComplexMatrix mean = ComplexMatrix::Zero(4, 4);
  std::vector<double> purity;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto c = lebesgue_channel_map(standard_normal_vector(32, rng));
    if (!validate_cptp(c, 1e-6).passed) ++failures;
    mean += c.mat() / static_cast<double>(n);
    purity.push_back(c.purity());
  }
  const double mean_err = (mean - identity(4) / 4.0).cwiseAbs().maxCoeff();
  const auto direct = summarize(purity);

  ChainConfig cfg;
  cfg.total_steps = 1 << 16;
  cfg.kept_samples = 1 << 12;
  cfg.adapt_steps = 1 << 10;
  cfg.seed = 802;
  const auto s = run_pcn(ChannelPrior{}, {}, cfg, psi_plus_in());
  const auto chain = posterior_summary(s, [](const ChoiMatrix& c) { return c.purity(); });
  const double mc = std::sqrt(chain.std * chain.std / static_cast<double>(s.objects.size()) +
                              direct.std * direct.std / static_cast<double>(n));
  const double z = std::abs(chain.mean - direct.mean) / mc;
  std::printf("    CPTP failures %d of %d; mean-Choi max deviation %.4f; purity prior %.5f, chain %.5f (z = %.2f)\n",
              failures, n, mean_err, direct.mean, chain.mean, z);
  return {failures == 0 && mean_err <= 0.01 && z <= 2.0,
          "all pass at 1e-6; mean within 0.01 of I/4; purity within 2 MC std"};
}

// 9. Frame alignment recovery and invariance.
Outcome criterion_9() {
  std::mt19937_64 rng(901);
  double worst = 1.0, worst_gap = 0.0;
  for (int t = 0; t < 50; ++t) {
    const ComplexMatrix k = kron(random_haar_unitary(2, rng), random_haar_unitary(2, rng));
    const ComplexMatrix rho = k * projector(bell::psi_plus()) * k.adjoint();
    const auto r = align_frames(rho, bell::psi_plus(), FrameMode::State);
    const ComplexMatrix pre = kron(random_haar_unitary(2, rng), random_haar_unitary(2, rng));
    const auto r2 = align_frames(pre * rho * pre.adjoint(), bell::psi_plus(), FrameMode::State);
    worst = std::min(worst, r.fidelity);
    worst_gap = std::max(worst_gap, std::abs(r.fidelity - r2.fidelity));
  }
  return {worst >= 1.0 - 1e-6 && worst_gap <= 1e-6,
          fmt("min fidelity 1 - %.2e", 1.0 - worst) + fmt(", max invariance gap %.2e (tol 1e-6)", worst_gap)};
}

}  // namespace

// Optional arguments select criteria by number, e.g. `acceptance 3 6`.
int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 representation round trips", criterion_1},
      {"2 identity channel structure", criterion_2},
      {"3 end-to-end channel recovery", criterion_3},
      {"4 error-bar scaling with flux", criterion_4},
      {"5 loss and fidelity formatting", criterion_5},
      {"6 bandwidth sweep trends", criterion_6},
      {"7 constant-truth stability", criterion_7},
      {"8 prior correctness", criterion_8},
      {"9 frame-alignment recovery", criterion_9},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& [name, run] : criteria) {
    const std::string number = name.substr(0, name.find(' '));
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
