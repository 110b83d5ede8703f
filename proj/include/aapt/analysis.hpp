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

// Fidelities, local-frame alignment and the two link experiments (hourly
// stability, bandwidth sweep) run over the synthetic link.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aapt/bayes.hpp"
#include "aapt/channel.hpp"
#include "aapt/measurement.hpp"
#include "aapt/optimize.hpp"

namespace aapt {

enum class FidelityKind { State, Process };

struct FidelityEstimate {
  double mean = 0.0;
  double std = 0.0;
  FidelityKind kind = FidelityKind::Process;
};

inline double state_fidelity(const ComplexMatrix& rho, const ComplexVector& target) {
  if (rho.rows() != target.size() || !is_square(rho))
    throw ValidationError("state_fidelity: dimension mismatch");
  return std::clamp((target.adjoint() * rho * target)(0, 0).real(), 0.0, 1.0);
}

inline double state_fidelity(const DensityMatrix& rho, const ComplexVector& target) {
  return state_fidelity(rho.mat(), target);
}

// <phi+|Phi|phi+>
inline double process_fidelity(const ChoiMatrix& choi) {
  return state_fidelity(choi.mat(), bell::phi_plus(choi.d()));
}

// Overlap with the Choi vector (1 (x) U)|phi+> of a unitary reference.
inline double process_fidelity(const ChoiMatrix& choi, const ComplexMatrix& reference_unitary) {
  const ComplexVector v = kron(identity(choi.d()), reference_unitary) * bell::phi_plus(choi.d());
  return state_fidelity(choi.mat(), v);
}

inline double channel_loss_db(double local_flux, double remote_flux) {
  if (!(local_flux > 0.0) || !(remote_flux > 0.0))
    throw ValidationError("channel_loss_db: fluxes must be positive");
  return 10.0 * std::log10(local_flux / remote_flux);
}

// exp(-i alpha/2 n.sigma) with n = (sin t cos p, sin t sin p, cos t).
inline ComplexMatrix su2_from_angles(double polar, double azimuth, double angle) {
  const double nx = std::sin(polar) * std::cos(azimuth);
  const double ny = std::sin(polar) * std::sin(azimuth);
  const double nz = std::cos(polar);
  const ComplexMatrix gen = nx * pauli(1) + ny * pauli(2) + nz * pauli(3);
  return std::cos(0.5 * angle) * identity(2) - kI * std::sin(0.5 * angle) * gen;
}

struct LocalRotation {
  ComplexMatrix u_a = identity(2);
  ComplexMatrix u_b = identity(2);
  std::array<double, 6> angles{};

  static LocalRotation from_angles(const std::array<double, 6>& a) {
    return {su2_from_angles(a[0], a[1], a[2]), su2_from_angles(a[3], a[4], a[5]), a};
  }
  static LocalRotation identity_rotation() { return {}; }

  LocalRotation inverse() const {
    LocalRotation r;
    r.u_a = u_a.adjoint();
    r.u_b = u_b.adjoint();
    r.angles = {angles[0], angles[1], -angles[2], angles[3], angles[4], -angles[5]};
    return r;
  }
};

enum class FrameMode { State, Choi };

// State mode: rho -> (u_a (x) u_b) rho (u_a (x) u_b)^dag.
// Choi mode relabels the channel as u_b o E o u_a, whose Choi matrix is
// (u_a^T (x) u_b) Phi (u_a^T (x) u_b)^dag.
inline ComplexMatrix apply_fixed_rotation(const ComplexMatrix& obj, const LocalRotation& rot,
                                          FrameMode mode) {
  if (obj.rows() != 4 || obj.cols() != 4)
    throw ValidationError("apply_fixed_rotation: expected a 4x4 object");
  const ComplexMatrix left = mode == FrameMode::State ? rot.u_a : ComplexMatrix(rot.u_a.transpose());
  const ComplexMatrix k = kron(left, rot.u_b);
  return k * obj * k.adjoint();
}

inline DensityMatrix apply_fixed_rotation(const DensityMatrix& rho, const LocalRotation& rot) {
  return DensityMatrix::trusted(hermitize(apply_fixed_rotation(rho.mat(), rot, FrameMode::State)));
}

inline ChoiMatrix apply_fixed_rotation(const ChoiMatrix& choi, const LocalRotation& rot) {
  return ChoiMatrix::trusted(hermitize(apply_fixed_rotation(choi.mat(), rot, FrameMode::Choi)));
}

struct AlignmentOptions {
  int restarts = 20;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
};

struct AlignmentResult {
  LocalRotation rotation;
  ComplexMatrix aligned;
  double fidelity = 0.0;
};

// Maximizes <t|R(obj)|t> over local rotations R. The first start is the
// identity and later starts only replace the incumbent when strictly better,
// so an already-aligned object keeps the identity rotation.
inline AlignmentResult align_frames(const ComplexMatrix& obj, const ComplexVector& target,
                                    FrameMode mode, const AlignmentOptions& opts = {}) {
  if (obj.rows() != 4 || target.size() != 4)
    throw ValidationError("align_frames: expected a 4x4 object and a 4-vector target");
  auto objective = [&](const std::vector<double>& a) {
    const auto rot = LocalRotation::from_angles({a[0], a[1], a[2], a[3], a[4], a[5]});
    return -state_fidelity(apply_fixed_rotation(obj, rot, mode), target);
  };

  std::array<double, 6> best_angles{};
  double best = -objective(std::vector<double>(6, 0.0));
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> polar(0.0, std::numbers::pi),
      full(0.0, 2.0 * std::numbers::pi);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    std::vector<double> x0(6, 0.0);
    if (r > 0)
      for (int k = 0; k < 2; ++k) {
        x0[3 * k] = polar(rng);
        x0[3 * k + 1] = full(rng);
        x0[3 * k + 2] = full(rng);
      }
    auto res = nelder_mead(objective, x0, 0.5, opts.tolerance);
    // one polishing pass from the converged point
    res = nelder_mead(objective, res.x, 0.05, opts.tolerance * 1e-3);
    if (-res.value > best + 1e-12) {
      best = -res.value;
      std::copy(res.x.begin(), res.x.end(), best_angles.begin());
    }
  }
  AlignmentResult out;
  out.rotation = LocalRotation::from_angles(best_angles);
  out.aligned = apply_fixed_rotation(obj, out.rotation, mode);
  out.fidelity = state_fidelity(out.aligned, target);
  return out;
}

template <class Object>
ComplexMatrix posterior_mean(const PosteriorSamples<Object>& samples) {
  if (samples.objects.empty()) throw ValidationError("posterior_mean: no samples");
  ComplexMatrix acc = ComplexMatrix::Zero(samples.objects.front().mat().rows(),
                                          samples.objects.front().mat().cols());
  for (const auto& o : samples.objects) acc += o.mat();
  return hermitize(acc / static_cast<double>(samples.objects.size()));
}

// ---------------------------------------------------------------------------
// Experiment runners

// splitmix64 finalizer, for per-point seeds derived from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class InputStateSource { Truth, Inferred };

struct ExperimentConfig {
  DensityMatrix input_truth = DensityMatrix::from_pure(bell::psi_plus());
  InputStateSource input_source = InputStateSource::Inferred;
  double local_flux = 0.0;  // flux of the local input-state measurement; 0 uses noise.flux
  NoiseModel noise;         // seed is ignored; per-point seeds derive from `seed`
  ChainConfig chain;        // seed is ignored likewise
  double assumed_background = 0.0;  // background the likelihood treats as known
  bool infer_output_state = true;
  AlignmentOptions alignment;
  std::uint64_t seed = 1;
};

struct SweepPoint {
  std::string label;
  double label_value = 0.0;
  std::map<std::string, double> ground_truth;
  std::vector<MeasurementRecord> records;
  FidelityEstimate process;
  std::optional<FidelityEstimate> output_state;
  Summary flux;  // per basis per acquisition
  std::optional<double> loss_db;  // against the local input-state flux, when measured
  double duration = 0.0;
  double acceptance_rate = 0.0;
  double split_rhat = 1.0;
  std::uint64_t noise_seed = 0;
  std::uint64_t chain_seed = 0;
  ComplexMatrix choi_mean;
};

struct InputStateResult {
  ComplexMatrix rho_mean;
  FidelityEstimate fidelity;  // vs psi+, after its own alignment
  Summary flux;
  LocalRotation rotation;
};

struct ExperimentResult {
  std::vector<SweepPoint> points;
  std::optional<InputStateResult> input;
  LocalRotation choi_rotation;
  LocalRotation state_rotation;
};

namespace detail {

inline Summary fidelity_under_rotation(const PosteriorSamples<ChoiMatrix>& s, const LocalRotation& r) {
  return posterior_summary(s, [&](const ChoiMatrix& c) { return process_fidelity(apply_fixed_rotation(c, r)); });
}

inline Summary fidelity_under_rotation(const PosteriorSamples<DensityMatrix>& s,
                                       const LocalRotation& r, const ComplexVector& target) {
  return posterior_summary(s, [&](const DensityMatrix& d) {
    return state_fidelity(apply_fixed_rotation(d, r), target);
  });
}

inline ChainConfig reseeded(ChainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

inline double truth_process_fidelity(const KrausSet& k) { return process_fidelity(choi_from_kraus(k)); }

inline InputStateResult infer_input_state(const ExperimentConfig& cfg, double flux,
                                          std::uint64_t stream) {
  NoiseModel local = cfg.noise;
  local.flux = flux;
  local.seed = derive_seed(cfg.seed, stream);
  const auto records = simulate_counts(born_probabilities(cfg.input_truth, all_settings()), local);
  auto samples = run_pcn(StatePrior{}, records, reseeded(cfg.chain, derive_seed(cfg.seed, stream + 1)),
                         std::nullopt, {cfg.assumed_background, 1.0});
  InputStateResult out;
  out.rho_mean = posterior_mean(samples);
  const auto psi = bell::psi_plus();
  const auto aligned = align_frames(out.rho_mean, psi, FrameMode::State, cfg.alignment);
  out.rotation = aligned.rotation;
  const auto f = fidelity_under_rotation(samples, aligned.rotation, psi);
  out.fidelity = {f.mean, f.std, FidelityKind::State};
  out.flux = summarize(samples.flux);
  return out;
}

// Runs one point; rotations are fitted on this point when not yet fixed.
inline SweepPoint run_point(const ExperimentConfig& cfg, const KrausSet& truth, const DensityMatrix& plug_in,
                            const NoiseModel& noise, std::uint64_t stream,
                            std::optional<LocalRotation>& choi_rot,
                            std::optional<LocalRotation>& state_rot) {
  SweepPoint pt;
  pt.noise_seed = noise.seed;
  pt.chain_seed = derive_seed(cfg.seed, stream + 1);
  pt.duration = noise.duration;
  pt.ground_truth["truth_process_fidelity"] = truth_process_fidelity(truth);
  pt.ground_truth["flux"] = noise.flux;
  pt.ground_truth["background"] = noise.background;
  pt.records = simulate_counts(forward_probabilities(cfg.input_truth, truth, all_settings()), noise);

  const LikelihoodModel lm{cfg.assumed_background, 1.0};
  auto channel = run_pcn(ChannelPrior{}, pt.records, reseeded(cfg.chain, pt.chain_seed), plug_in, lm);
  pt.choi_mean = posterior_mean(channel);
  if (!choi_rot)
    choi_rot = align_frames(pt.choi_mean, bell::phi_plus(), FrameMode::Choi, cfg.alignment).rotation;
  const auto f = fidelity_under_rotation(channel, *choi_rot);
  pt.process = {f.mean, f.std, FidelityKind::Process};
  attach_rhat(channel, [&](const ChoiMatrix& c) { return process_fidelity(apply_fixed_rotation(c, *choi_rot)); });
  pt.split_rhat = channel.diagnostics.split_rhat;
  pt.acceptance_rate = channel.acceptance_rate;
  pt.flux = summarize(channel.flux);

  if (cfg.infer_output_state) {
    auto state = run_pcn(StatePrior{}, pt.records, reseeded(cfg.chain, derive_seed(cfg.seed, stream + 2)),
                         std::nullopt, lm);
    const auto psi = bell::psi_plus();
    if (!state_rot)
      state_rot = align_frames(posterior_mean(state), psi, FrameMode::State, cfg.alignment).rotation;
    const auto s = fidelity_under_rotation(state, *state_rot, psi);
    pt.output_state = FidelityEstimate{s.mean, s.std, FidelityKind::State};
  }
  return pt;
}

inline DensityMatrix plug_in_state(const ExperimentConfig& cfg, std::optional<InputStateResult>& input,
                                   double local_flux, std::uint64_t stream) {
  if (cfg.input_source == InputStateSource::Truth) return cfg.input_truth;
  input = infer_input_state(cfg, local_flux, stream);
  return DensityMatrix(input->rho_mean, 1e-8);
}

}  // namespace detail

// One point per schedule entry. Frames are aligned on the first point only;
// later points reuse those rotations so that drifts stay visible.
inline ExperimentResult run_stability_experiment(const std::vector<KrausSet>& schedule,
                                                 const ExperimentConfig& cfg) {
  ExperimentResult out;
  if (schedule.empty()) return out;
  const double local_flux = cfg.local_flux > 0.0 ? cfg.local_flux : cfg.noise.flux;
  const DensityMatrix plug_in = detail::plug_in_state(cfg, out.input, local_flux, 0);
  std::optional<LocalRotation> choi_rot, state_rot;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::uint64_t stream = 10 * (i + 1);
    NoiseModel noise = cfg.noise;
    noise.seed = derive_seed(cfg.seed, stream);
    auto pt = detail::run_point(cfg, schedule[i], plug_in, noise, stream, choi_rot, state_rot);
    if (out.input) pt.loss_db = channel_loss_db(out.input->flux.mean, pt.flux.mean);
    pt.label = "t" + std::to_string(i);
    pt.label_value = static_cast<double>(i);
    out.points.push_back(std::move(pt));
  }
  out.choi_rotation = choi_rot.value_or(LocalRotation{});
  out.state_rotation = state_rot.value_or(LocalRotation{});
  return out;
}

struct BandwidthSweepConfig {
  std::vector<double> bandwidths;  // Hz, ascending
  double dgd = 0.0;                // s
  SpectralShape shape = SpectralShape::Rectangular;
  ComplexMatrix principal_basis = identity(2);
  double reference_bandwidth = 0.0;  // flux = noise.flux * B / reference_bandwidth; 0 uses max(B)
  bool align_each_point = true;      // false: fit frames on the first point and keep them
};

// Flux grows in proportion to the passband while the background stays fixed.
// The input state is measured locally at each bandwidth when inferred, and
// frames are fitted per point unless align_each_point is off.
inline ExperimentResult run_bandwidth_sweep(const BandwidthSweepConfig& sweep, const ExperimentConfig& cfg) {
  if (sweep.bandwidths.empty()) throw ValidationError("run_bandwidth_sweep: empty bandwidth list");
  for (std::size_t i = 0; i < sweep.bandwidths.size(); ++i) {
    if (!(sweep.bandwidths[i] > 0.0)) throw ValidationError("run_bandwidth_sweep: bandwidths must be positive");
    if (i > 0 && !(sweep.bandwidths[i] > sweep.bandwidths[i - 1]))
      throw ValidationError("run_bandwidth_sweep: bandwidths must be ascending");
  }
  const double ref = sweep.reference_bandwidth > 0.0 ? sweep.reference_bandwidth : sweep.bandwidths.back();
  const double local_ref = cfg.local_flux > 0.0 ? cfg.local_flux : cfg.noise.flux;
  ExperimentResult out;
  std::optional<LocalRotation> choi_rot, state_rot;
  for (std::size_t i = 0; i < sweep.bandwidths.size(); ++i) {
    const double b = sweep.bandwidths[i];
    const std::uint64_t stream = 10 * (i + 1);
    if (sweep.align_each_point) {
      choi_rot.reset();
      state_rot.reset();
    }
    const SpectralWindow window{sweep.shape, b};
    const KrausSet truth = make_pmd(sweep.dgd, window, sweep.principal_basis);
    std::optional<InputStateResult> input;
    const DensityMatrix plug_in = detail::plug_in_state(cfg, input, local_ref * b / ref, 1000 + stream);
    NoiseModel noise = cfg.noise;
    noise.flux = cfg.noise.flux * b / ref;
    noise.seed = derive_seed(cfg.seed, stream);
    auto pt = detail::run_point(cfg, truth, plug_in, noise, stream, choi_rot, state_rot);
    pt.label = "B" + std::to_string(i);
    pt.label_value = b;
    pt.ground_truth["bandwidth"] = b;
    pt.ground_truth["dgd"] = sweep.dgd;
    pt.ground_truth["coherence"] = pmd_coherence(sweep.dgd, window);
    if (input) {
      pt.ground_truth["input_state_fidelity_mean"] = input->fidelity.mean;
      pt.ground_truth["input_state_fidelity_std"] = input->fidelity.std;
      pt.ground_truth["local_flux_mean"] = input->flux.mean;
      pt.loss_db = channel_loss_db(input->flux.mean, pt.flux.mean);
      if (i == 0) out.input = input;
    }
    out.points.push_back(std::move(pt));
  }
  out.choi_rotation = choi_rot.value_or(LocalRotation{});
  out.state_rotation = state_rot.value_or(LocalRotation{});
  return out;
}

// True when every step changes by no less than -tolerance_in_std posterior stds
// (nondecreasing) or, for `decreasing`, by no more than +tolerance_in_std.
inline bool monotone_within_error(const std::vector<SweepPoint>& points, bool decreasing,
                                  double tolerance_in_std = 1.0) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i - 1].process;
    const auto& b = points[i].process;
    const double sigma = std::max(a.std, b.std);
    const double delta = b.mean - a.mean;
    if (!decreasing && delta < -tolerance_in_std * sigma) return false;
    if (decreasing && delta > tolerance_in_std * sigma) return false;
  }
  return true;
}

}  // namespace aapt
