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

// Bayesian inference of two-qubit states and qubit channels.
//
// Priors are written as deterministic maps from a standard-normal parameter
// vector onto the physical set, so the preconditioned Crank-Nicolson proposal
//     x' = sqrt(1 - beta^2) x + beta xi,   xi ~ N(0, I)
// leaves the prior invariant and the Metropolis ratio reduces to the
// likelihood ratio. One trailing coordinate z carries the flux nuisance,
// flux = f0 exp(sigma_f z).

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aapt/channel.hpp"
#include "aapt/measurement.hpp"
#include "aapt/random_matrix.hpp"

namespace aapt {

using ParameterVector = std::vector<double>;

// rho = (1 + U) G G^dag (1 + U^dag) / Tr, with G Ginibre and U Haar, both
// dim x dim. x holds 2 dim^2 coordinates for G followed by 2 dim^2 for U.
inline DensityMatrix bures_state_map(std::span<const double> x, Eigen::Index dim = 4) {
  const auto n = static_cast<std::size_t>(2 * dim * dim);
  if (x.size() != 2 * n)
    throw ValidationError("bures_state_map: expected " + std::to_string(2 * n) +
                          " coordinates, got " + std::to_string(x.size()));
  const ComplexMatrix g = ginibre_from_params(x.first(n), dim, dim);
  const ComplexMatrix u = haar_from_ginibre(ginibre_from_params(x.subspan(n, n), dim, dim));
  const ComplexMatrix a = (identity(dim) + u) * g;
  ComplexMatrix rho = a * a.adjoint();
  const double tr = rho.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr))
    throw NumericalError("bures_state_map: degenerate draw with zero norm");
  return DensityMatrix::trusted(hermitize(rho / tr));
}

inline constexpr double kInvSqrtFloor = 1e-12;

// W = G G^dag for a d^2 x d^2 Ginibre G, Y = Tr_B W, and
// Phi = (Y^{-1/2} (x) 1) W (Y^{-1/2} (x) 1) / d, which satisfies Tr_B Phi = 1/d.
inline ChoiMatrix lebesgue_channel_map(std::span<const double> x, Eigen::Index d = 2) {
  const Eigen::Index n = d * d;
  const ComplexMatrix g = ginibre_from_params(x, n, n);
  const ComplexMatrix w = g * g.adjoint();
  const ComplexMatrix y = partial_trace(w, d, d, Keep::A);
  const auto e = herm_eig(y);
  if (e.eigenvalues(0) <= kInvSqrtFloor)
    throw NumericalError("lebesgue_channel_map: reduced matrix is singular");
  RealVector inv = e.eigenvalues.cwiseSqrt().cwiseInverse();
  const ComplexMatrix y_inv_sqrt = detail::spectral_function(e, inv);
  const ComplexMatrix k = kron(y_inv_sqrt, identity(d));
  ComplexMatrix phi = k * w * k.adjoint() / static_cast<double>(d);
  return ChoiMatrix::trusted(hermitize(phi));
}

template <class P>
concept PriorMap = requires(const P& p, std::span<const double> x) {
  typename P::Object;
  { p.param_count() } -> std::convertible_to<std::size_t>;
  { p.map(x) } -> std::same_as<typename P::Object>;
  { P::kind_name() } -> std::convertible_to<std::string>;
};

struct StatePrior {
  using Object = DensityMatrix;
  Eigen::Index dim = 4;
  std::size_t param_count() const { return static_cast<std::size_t>(4 * dim * dim); }
  DensityMatrix map(std::span<const double> x) const { return bures_state_map(x, dim); }
  static std::string kind_name() { return "state"; }
};

struct ChannelPrior {
  using Object = ChoiMatrix;
  Eigen::Index d = 2;
  std::size_t param_count() const { return static_cast<std::size_t>(2 * d * d * d * d); }
  ChoiMatrix map(std::span<const double> x) const { return lebesgue_channel_map(x, d); }
  static std::string kind_name() { return "channel"; }
};

// sum_s [N_s log lambda_s - lambda_s], lambda_s = flux p_s + background.
// Returns -inf if some lambda_s = 0 while N_s > 0.
inline double log_likelihood(std::span<const MeasurementRecord> records, std::span<const double> probs,
                             double flux, double background) {
  if (records.size() != probs.size())
    throw ValidationError("log_likelihood: " + std::to_string(records.size()) + " records but " +
                          std::to_string(probs.size()) + " probabilities");
  if (flux < 0.0 || background < 0.0)
    throw ValidationError("log_likelihood: flux and background must be nonnegative");
  double ll = 0.0;
  for (std::size_t s = 0; s < records.size(); ++s) {
    const double lambda = flux * probs[s] + background;
    const auto n = records[s].counts;
    if (n > 0) {
      if (lambda <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += static_cast<double>(n) * std::log(lambda);
    }
    ll -= lambda;
  }
  return ll;
}

struct ChainConfig {
  std::uint64_t total_steps = 1ULL << 18;  // post-adaptation steps
  std::uint64_t kept_samples = 1ULL << 10;
  double beta = 0.5;                        // initial step size
  std::uint64_t adapt_steps = 1ULL << 16;   // run before total_steps, never kept
  double target_acceptance = 0.234;
  std::uint64_t seed = 1;

  void validate() const {
    if (kept_samples == 0 || total_steps == 0 || total_steps % kept_samples != 0)
      throw ValidationError("ChainConfig: kept_samples must divide total_steps");
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("ChainConfig: beta must lie in (0,1]");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
      throw ValidationError("ChainConfig: target_acceptance must lie in (0,1)");
  }
};

// Known detector background and the width of the log-flux prior.
struct LikelihoodModel {
  double background = 0.0;
  double flux_log_sigma = 1.0;
};

struct ChainDiagnostics {
  double split_rhat = 1.0;
  bool rhat_warning = false;
  double final_beta = 0.0;
  double adapt_acceptance = 0.0;
  std::uint64_t init_retries = 0;
  std::uint64_t rejected_singular = 0;
};

template <class Object>
struct PosteriorSamples {
  std::vector<Object> objects;
  std::vector<double> flux;
  std::vector<ParameterVector> parameters;
  std::vector<double> log_likelihood;
  double acceptance_rate = 0.0;
  ChainDiagnostics diagnostics;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

inline Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("posterior_summary: no samples");
  // Welford updates: exact for constant traces
  double mean = 0.0, var = 0.0, n = 0.0;
  for (double v : values) {
    n += 1.0;
    const double d = v - mean;
    mean += d / n;
    var += d * (v - mean);
  }
  const double denom = values.size() > 1 ? static_cast<double>(values.size() - 1) : 1.0;
  return {mean, std::sqrt(var / denom)};
}

template <class Object, class F>
  requires std::invocable<F, const Object&>
Summary posterior_summary(const PosteriorSamples<Object>& samples, F&& functional) {
  std::vector<double> values;
  values.reserve(samples.objects.size());
  for (const auto& o : samples.objects) values.push_back(static_cast<double>(functional(o)));
  return summarize(values);
}

// Split-Rhat of a single trace: the two halves are treated as separate chains.
inline double split_rhat(std::span<const double> trace) {
  const std::size_t half = trace.size() / 2;
  if (half < 2) return 1.0;
  const auto a = summarize(trace.first(half));
  const auto b = summarize(trace.subspan(half, half));
  const double w = 0.5 * (a.std * a.std + b.std * b.std);
  if (w <= 0.0) return 1.0;
  const double grand = 0.5 * (a.mean + b.mean);
  const double n = static_cast<double>(half);
  const double between = n * ((a.mean - grand) * (a.mean - grand) + (b.mean - grand) * (b.mean - grand));
  const double var_plus = (n - 1.0) / n * w + between / n;
  return std::sqrt(var_plus / w);
}

inline constexpr double kRhatWarnThreshold = 1.05;

// Complete resumable state of a chain.
struct PcnState {
  std::uint64_t step = 0;  // counts adaptation and sampling steps
  ParameterVector x;
  double log_likelihood = 0.0;
  double beta = 0.0;
  std::uint64_t accepted_adapt = 0;
  std::uint64_t accepted_sample = 0;
  std::uint64_t init_retries = 0;
  std::uint64_t rejected_singular = 0;
  std::string rng_state;
  std::string normal_state;
  std::string uniform_state;
  std::vector<ParameterVector> kept;
};

namespace detail {

inline double mean_flux_per_basis(std::span<const MeasurementRecord> records) {
  double total = 0.0;
  for (const auto& r : records) total += static_cast<double>(r.counts);
  const double bases = static_cast<double>(records.size()) / 4.0;
  const double f0 = bases > 0.0 ? total / bases : 0.0;
  return f0 > 0.0 ? f0 : 1.0;
}

template <class Prior>
struct ForwardModelFor;

template <>
struct ForwardModelFor<StatePrior> {
  StateForwardModel model;
  ForwardModelFor(const std::vector<MeasurementSetting>& s, const std::optional<DensityMatrix>&)
      : model(s) {}
  void operator()(const DensityMatrix& rho, std::vector<double>& p) const {
    model.probabilities(rho.mat(), p);
  }
};

template <>
struct ForwardModelFor<ChannelPrior> {
  ChannelForwardModel model;
  ForwardModelFor(const std::vector<MeasurementSetting>& s, const std::optional<DensityMatrix>& in)
      : model(require(in), s) {}
  void operator()(const ChoiMatrix& c, std::vector<double>& p) const {
    model.probabilities(c.mat(), p);
  }
  static const DensityMatrix& require(const std::optional<DensityMatrix>& in) {
    if (!in) throw ValidationError("run_pcn: channel inference needs a fixed input state");
    return *in;
  }
};

}  // namespace detail

template <PriorMap Prior>
class PcnSampler {
public:
  using Object = typename Prior::Object;

  PcnSampler(Prior prior, std::vector<MeasurementRecord> records, ChainConfig config,
             std::optional<DensityMatrix> fixed_input = std::nullopt, LikelihoodModel model = {})
      : prior_(std::move(prior)),
        records_(std::move(records)),
        config_(config),
        model_(model),
        forward_(settings_of(records_), fixed_input),
        flux0_(detail::mean_flux_per_basis(records_)) {
    config_.validate();
    if (model_.background < 0.0) throw ValidationError("run_pcn: background must be nonnegative");
  }

  // Draws a starting point from the prior, retrying non-finite likelihoods.
  void initialize() {
    state_ = PcnState{};
    rng_.seed(config_.seed);
    normal_.reset();
    uniform_.reset();
    state_.beta = config_.beta;
    const std::size_t n = prior_.param_count() + 1;
    for (int attempt = 0; attempt < 10; ++attempt) {
      state_.x.resize(n);
      for (auto& v : state_.x) v = normal_(rng_);
      state_.log_likelihood = evaluate(state_.x);
      if (std::isfinite(state_.log_likelihood)) {
        initialized_ = true;
        return;
      }
      ++state_.init_retries;
      rng_.seed(config_.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt + 1));
    }
    throw NumericalError("run_pcn: non-finite likelihood at initialization after 10 attempts");
  }

  std::uint64_t total_iterations() const { return config_.adapt_steps + config_.total_steps; }
  bool done() const { return initialized_ && state_.step >= total_iterations(); }

  // Runs at most `max_steps` further iterations.
  void advance(std::uint64_t max_steps = std::numeric_limits<std::uint64_t>::max()) {
    if (!initialized_) initialize();
    const std::size_t n = state_.x.size();
    ParameterVector proposal(n);
    const std::uint64_t thin = config_.total_steps / config_.kept_samples;
    for (std::uint64_t k = 0; k < max_steps && !done(); ++k) {
      const double beta = state_.beta;
      const double shrink = std::sqrt(1.0 - beta * beta);
      for (std::size_t i = 0; i < n; ++i) proposal[i] = shrink * state_.x[i] + beta * normal_(rng_);
      const double ll = evaluate(proposal);
      const double log_u = std::log(uniform_(rng_));
      const bool accept = std::isfinite(ll) && log_u < ll - state_.log_likelihood;
      if (accept) {
        state_.x.swap(proposal);
        state_.log_likelihood = ll;
      }
      const bool adapting = state_.step < config_.adapt_steps;
      if (adapting) {
        if (accept) ++state_.accepted_adapt;
        const double gain = std::pow(1.0 + static_cast<double>(state_.step), -0.6);
        const double acc = accept ? 1.0 : 0.0;
        state_.beta = std::clamp(beta * std::exp(gain * (acc - config_.target_acceptance)), 1e-9, 1.0);
      } else {
        if (accept) ++state_.accepted_sample;
        const std::uint64_t sample_index = state_.step - config_.adapt_steps + 1;
        if (sample_index % thin == 0) state_.kept.push_back(state_.x);
      }
      ++state_.step;
    }
  }

  PcnState state() const {
    PcnState s = state_;
    std::ostringstream r, nrm, uni;
    r << rng_;
    nrm << normal_;
    uni << uniform_;
    s.rng_state = r.str();
    s.normal_state = nrm.str();
    s.uniform_state = uni.str();
    return s;
  }

  void restore(const PcnState& s) {
    state_ = s;
    std::istringstream r(s.rng_state), nrm(s.normal_state), uni(s.uniform_state);
    r >> rng_;
    nrm >> normal_;
    uni >> uniform_;
    if (!r || !nrm || !uni) throw ValidationError("PcnSampler: corrupted random-engine state");
    if (state_.x.size() != prior_.param_count() + 1)
      throw ValidationError("PcnSampler: checkpoint parameter vector has wrong length");
    initialized_ = true;
  }

  PosteriorSamples<Object> result() const {
    if (!done()) throw ValidationError("PcnSampler: chain has not finished");
    PosteriorSamples<Object> out;
    const std::size_t n = prior_.param_count();
    for (const auto& x : state_.kept) {
      std::span<const double> xs(x);
      out.objects.push_back(prior_.map(xs.first(n)));
      out.flux.push_back(flux_of(x.back()));
      out.parameters.push_back(x);
      out.log_likelihood.push_back(evaluate(x));
    }
    out.acceptance_rate = static_cast<double>(state_.accepted_sample) /
                          static_cast<double>(config_.total_steps);
    auto& diag = out.diagnostics;
    diag.final_beta = state_.beta;
    diag.adapt_acceptance = config_.adapt_steps > 0
                                ? static_cast<double>(state_.accepted_adapt) /
                                      static_cast<double>(config_.adapt_steps)
                                : 0.0;
    diag.init_retries = state_.init_retries;
    diag.rejected_singular = state_.rejected_singular;
    return out;
  }

  const ChainConfig& config() const { return config_; }
  const Prior& prior() const { return prior_; }
  double flux_of(double z) const { return flux0_ * std::exp(model_.flux_log_sigma * z); }
  double flux_reference() const { return flux0_; }

private:
  static std::vector<MeasurementSetting> settings_of(const std::vector<MeasurementRecord>& records) {
    std::vector<MeasurementSetting> s;
    s.reserve(records.size());
    for (const auto& r : records) s.push_back(r.setting);
    return s;
  }

  double evaluate(std::span<const double> x) const {
    const std::size_t n = prior_.param_count();
    if (records_.empty()) return 0.0;
    try {
      const Object obj = prior_.map(x.first(n));
      forward_(obj, probs_);
    } catch (const NumericalError&) {
      ++state_.rejected_singular;
      return -std::numeric_limits<double>::infinity();
    }
    return log_likelihood(records_, probs_, flux_of(x[n]), model_.background);
  }

  Prior prior_;
  std::vector<MeasurementRecord> records_;
  ChainConfig config_;
  LikelihoodModel model_;
  detail::ForwardModelFor<Prior> forward_;
  double flux0_;

  mutable std::vector<double> probs_;
  mutable PcnState state_;
  bool initialized_ = false;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Runs a full chain. For channel priors `fixed_input` is the plug-in input
// state rho_AB; it is ignored for state priors.
template <PriorMap Prior>
PosteriorSamples<typename Prior::Object> run_pcn(const Prior& prior,
                                                 const std::vector<MeasurementRecord>& records,
                                                 const ChainConfig& config,
                                                 const std::optional<DensityMatrix>& fixed_input = std::nullopt,
                                                 const LikelihoodModel& model = {}) {
  PcnSampler<Prior> sampler(prior, records, config, fixed_input, model);
  sampler.initialize();
  sampler.advance();
  return sampler.result();
}

// Attaches split-Rhat of a target functional to the diagnostics.
template <class Object, class F>
void attach_rhat(PosteriorSamples<Object>& samples, F&& functional) {
  std::vector<double> trace;
  trace.reserve(samples.objects.size());
  for (const auto& o : samples.objects) trace.push_back(functional(o));
  samples.diagnostics.split_rhat = split_rhat(trace);
  samples.diagnostics.rhat_warning = samples.diagnostics.split_rhat > kRhatWarnThreshold;
}

}  // namespace aapt
