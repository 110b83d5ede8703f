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

// Run configuration: a JSON document with simulation, inference, analysis,
// sweep and output sections. Unknown keys are rejected with their full path;
// resolve() fills every default so the resolved document alone reproduces a
// run.

#pragma once

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "aapt/analysis.hpp"
#include "aapt/bayes.hpp"
#include "aapt/channel.hpp"
#include "aapt/io.hpp"
#include "aapt/random_matrix.hpp"

namespace aapt::config {

using nlohmann::json;

// Reads one JSON object, tracking which keys were consumed.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config: '" + name() + "' must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    if (!j_[key].is_number()) throw type_error(key, "a number");
    return j_[key].get<double>();
  }

  double required_number(const std::string& key) {
    if (!has(key)) throw missing(key);
    return number(key, 0.0);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!take(key)) return fallback;
    const json& v = j_[key];
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw type_error(key, "a nonnegative integer");
    return j_[key].get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    if (!j_[key].is_boolean()) throw type_error(key, "a boolean");
    return j_[key].get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    if (!j_[key].is_string()) throw type_error(key, "a string");
    return j_[key].get<std::string>();
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed) {
    const std::string v = string(key, fallback);
    for (const auto& a : allowed)
      if (v == a) return v;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ValidationError("config: '" + key_path(key) + "' must be one of " + list);
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!take(key)) return fallback;
    const auto& a = j_[key];
    if (!a.is_array()) throw type_error(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& v : a) {
      if (!v.is_number()) throw type_error(key, "an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  // Raw sub-document, or `fallback` when absent.
  json raw(const std::string& key, const json& fallback) {
    if (!take(key)) return fallback;
    return j_[key];
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ValidationError("config: unknown key '" + key_path(key) + "'");
  }

private:
  bool take(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }
  std::string name() const { return path_.empty() ? "<root>" : path_; }
  ValidationError type_error(const std::string& key, const std::string& what) const {
    return ValidationError("config: '" + key_path(key) + "' must be " + what);
  }
  ValidationError missing(const std::string& key) const {
    return ValidationError("config: missing required key '" + key_path(key) + "'");
  }

  json j_;
  std::string path_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Unitaries, channels, states, schedules. Each parser returns the object and
// the normalized spec it was built from.

template <class T>
struct Parsed {
  T value;
  json spec;
};

inline std::array<double, 3> unit_axis(const std::vector<double>& v, const std::string& where) {
  if (v.size() != 3) throw ValidationError("config: '" + where + "' must have three components");
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0)) throw ValidationError("config: '" + where + "' must be nonzero");
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline ComplexMatrix axis_angle_unitary(const std::array<double, 3>& n, double angle) {
  const ComplexMatrix gen = n[0] * pauli(1) + n[1] * pauli(2) + n[2] * pauli(3);
  return std::cos(0.5 * angle) * identity(2) - kI * std::sin(0.5 * angle) * gen;
}

// {"kind": "identity" | "axis_angle" (axis, angle) | "random" (seed) | "matrix" (matrix)}
inline Parsed<ComplexMatrix> parse_unitary(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string kind = s.choice("kind", "identity", {"identity", "axis_angle", "random", "matrix"});
  Parsed<ComplexMatrix> out{identity(2), {{"kind", kind}}};
  if (kind == "axis_angle") {
    const auto axis = s.numbers("axis", {0.0, 0.0, 1.0});
    const double angle = s.required_number("angle");
    out.value = axis_angle_unitary(unit_axis(axis, s.key_path("axis")), angle);
    out.spec["axis"] = axis;
    out.spec["angle"] = angle;
  } else if (kind == "random") {
    const auto seed = s.unsigned_integer("seed", 0);
    std::mt19937_64 rng(seed);
    out.value = random_haar_unitary(2, rng);
    out.spec["seed"] = seed;
  } else if (kind == "matrix") {
    const json m = s.raw("matrix", nullptr);
    if (m.is_null()) throw ValidationError("config: missing required key '" + s.key_path("matrix") + "'");
    out.value = io::matrix_from_json(m);
    if (!is_unitary(out.value) || out.value.rows() != 2)
      throw ValidationError("config: '" + s.key_path("matrix") + "' must be a 2x2 unitary");
    out.spec["matrix"] = m;
  }
  s.finish();
  return out;
}

inline SpectralShape parse_shape(const std::string& s) {
  return s == "gaussian" ? SpectralShape::Gaussian : SpectralShape::Rectangular;
}

// {"kind": "identity" | "unitary" (unitary) | "random_unitary" (seed) |
//  "depolarizing" (p) | "pmd" (dgd, bandwidth, shape, principal_basis) |
//  "compose" (channels, applied in order)}
inline Parsed<KrausSet> parse_channel(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string kind = s.choice(
      "kind", "identity", {"identity", "unitary", "random_unitary", "depolarizing", "pmd", "compose"});
  json spec = {{"kind", kind}};
  auto finish = [&](KrausSet k) {
    s.finish();
    return Parsed<KrausSet>{std::move(k), spec};
  };
  if (kind == "identity") return finish(make_identity());
  if (kind == "unitary") {
    auto u = parse_unitary(s.raw("unitary", json::object()), s.key_path("unitary"));
    spec["unitary"] = u.spec;
    return finish(make_unitary(u.value));
  }
  if (kind == "random_unitary") {
    const auto seed = s.unsigned_integer("seed", 0);
    spec["seed"] = seed;
    std::mt19937_64 rng(seed);
    return finish(make_unitary(random_haar_unitary(2, rng)));
  }
  if (kind == "depolarizing") {
    const double p = s.required_number("p");
    spec["p"] = p;
    return finish(make_depolarizing(p));
  }
  if (kind == "pmd") {
    const double dgd = s.number("dgd", 0.0);
    const double bandwidth = s.required_number("bandwidth");
    const std::string shape = s.choice("shape", "rectangular", {"rectangular", "gaussian"});
    auto basis = parse_unitary(s.raw("principal_basis", json{{"kind", "random"}, {"seed", 0}}),
                               s.key_path("principal_basis"));
    spec["dgd"] = dgd;
    spec["bandwidth"] = bandwidth;
    spec["shape"] = shape;
    spec["principal_basis"] = basis.spec;
    return finish(make_pmd(dgd, SpectralWindow{parse_shape(shape), bandwidth}, basis.value));
  }
  const json list = s.raw("channels", json::array());
  if (!list.is_array() || list.empty())
    throw ValidationError("config: '" + s.key_path("channels") + "' must be a non-empty array");
  std::optional<KrausSet> acc;
  json specs = json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    auto c = parse_channel(list[i], s.key_path("channels") + "[" + std::to_string(i) + "]");
    specs.push_back(c.spec);
    acc = acc ? compose(*acc, c.value) : c.value;
  }
  spec["channels"] = specs;
  return finish(*acc);
}

// {"kind": "psi_plus" | "phi_plus" | "werner" (visibility, target) | "file" (path)}
inline Parsed<DensityMatrix> parse_state(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string kind = s.choice("kind", "psi_plus", {"psi_plus", "phi_plus", "werner", "file"});
  json spec = {{"kind", kind}};
  std::optional<DensityMatrix> rho;
  if (kind == "psi_plus") rho = DensityMatrix::from_pure(bell::psi_plus());
  if (kind == "phi_plus") rho = DensityMatrix::from_pure(bell::phi_plus());
  if (kind == "werner") {
    const double v = s.required_number("visibility");
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("config: '" + s.key_path("visibility") + "' must lie in [0,1]");
    const std::string target = s.choice("target", "psi_plus", {"psi_plus", "phi_plus"});
    const ComplexVector t = target == "psi_plus" ? bell::psi_plus() : bell::phi_plus();
    rho = DensityMatrix(v * projector(t) + (1.0 - v) * identity(4) / 4.0);
    spec["visibility"] = v;
    spec["target"] = target;
  }
  if (kind == "file") {
    const std::string p = s.string("path", "");
    if (p.empty()) throw ValidationError("config: missing required key '" + s.key_path("path") + "'");
    rho = io::load_input_state(p);
    spec["path"] = p;
  }
  s.finish();
  return {*rho, spec};
}

// {"kind": "constant" (channel, points) | "step" (before, after, step_at, points) |
//  "drift" (channel, axis, angle_per_point, points) | "list" (channels)}
inline Parsed<std::vector<KrausSet>> parse_schedule(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string kind = s.choice("kind", "constant", {"constant", "step", "drift", "list"});
  json spec = {{"kind", kind}};
  std::vector<KrausSet> out;
  if (kind == "list") {
    const json list = s.raw("channels", json::array());
    if (!list.is_array()) throw ValidationError("config: '" + s.key_path("channels") + "' must be an array");
    json specs = json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto c = parse_channel(list[i], s.key_path("channels") + "[" + std::to_string(i) + "]");
      specs.push_back(c.spec);
      out.push_back(c.value);
    }
    spec["channels"] = specs;
    s.finish();
    return {out, spec};
  }
  const auto points = s.unsigned_integer("points", 24);
  spec["points"] = points;
  if (kind == "step") {
    auto before = parse_channel(s.raw("before", json::object()), s.key_path("before"));
    auto after = parse_channel(s.raw("after", json::object()), s.key_path("after"));
    const auto step_at = s.unsigned_integer("step_at", points / 2);
    spec["before"] = before.spec;
    spec["after"] = after.spec;
    spec["step_at"] = step_at;
    for (std::uint64_t i = 0; i < points; ++i) out.push_back(i < step_at ? before.value : after.value);
  } else {
    auto base = parse_channel(s.raw("channel", json::object()), s.key_path("channel"));
    spec["channel"] = base.spec;
    if (kind == "constant") {
      out.assign(points, base.value);
    } else {
      const auto axis = s.numbers("axis", {0.0, 0.0, 1.0});
      const double rate = s.required_number("angle_per_point");
      spec["axis"] = axis;
      spec["angle_per_point"] = rate;
      const auto n = unit_axis(axis, s.key_path("axis"));
      for (std::uint64_t i = 0; i < points; ++i)
        out.push_back(compose(base.value, make_unitary(axis_angle_unitary(n, rate * static_cast<double>(i)))));
    }
  }
  s.finish();
  return {out, spec};
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  // simulation
  Parsed<KrausSet> truth{make_identity(), {{"kind", "identity"}}};
  Parsed<DensityMatrix> input_state{DensityMatrix::from_pure(bell::psi_plus()), {{"kind", "psi_plus"}}};
  NoiseModel noise{1e5, 0.0, 1, 30.0};

  // inference
  std::string mode = "channel";
  ChainConfig chain;
  LikelihoodModel likelihood;
  std::string input_state_path;

  // analysis
  bool align = true;
  AlignmentOptions alignment;

  // sweep
  std::string sweep_kind = "stability";
  Parsed<std::vector<KrausSet>> schedule{{}, nullptr};
  std::vector<double> bandwidths;
  double dgd = 0.0;
  std::string shape = "rectangular";
  Parsed<ComplexMatrix> principal_basis{identity(2), {{"kind", "identity"}}};
  double reference_bandwidth = 0.0;
  bool align_each_point = true;
  double local_flux = 0.0;
  std::string input_source = "inferred";
  bool infer_output_state = true;
  std::uint64_t sweep_seed = 1;

  std::string output_dir = "out";

  json resolved;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> chain_steps;
  std::optional<std::string> out;
};

inline RunConfig resolve(const json& doc, const Overrides& over = {}) {
  RunConfig c;
  Section root(doc, "");

  {
    Section s(root.raw("simulation", json::object()), "simulation");
    c.truth = parse_channel(s.raw("truth", json{{"kind", "identity"}}), "simulation.truth");
    c.input_state = parse_state(s.raw("input_state", json{{"kind", "psi_plus"}}), "simulation.input_state");
    Section n(s.raw("noise", json::object()), "simulation.noise");
    c.noise.flux = n.number("flux", 1e5);
    c.noise.background = n.number("background", 0.0);
    c.noise.duration = n.number("duration", 30.0);
    n.finish();
    if (c.noise.flux < 0.0 || c.noise.background < 0.0)
      throw ValidationError("config: 'simulation.noise' rates must be nonnegative");
    if (!(c.noise.duration > 0.0)) throw ValidationError("config: 'simulation.noise.duration' must be positive");
    c.noise.seed = s.unsigned_integer("seed", 1);
    s.finish();
  }
  {
    Section s(root.raw("inference", json::object()), "inference");
    c.mode = s.choice("mode", "channel", {"channel", "state"});
    Section ch(s.raw("chain", json::object()), "inference.chain");
    c.chain.total_steps = ch.unsigned_integer("total_steps", c.chain.total_steps);
    c.chain.kept_samples = ch.unsigned_integer("kept_samples", c.chain.kept_samples);
    c.chain.beta = ch.number("beta", c.chain.beta);
    c.chain.adapt_steps = ch.unsigned_integer("adapt_steps", c.chain.adapt_steps);
    c.chain.target_acceptance = ch.number("target_acceptance", c.chain.target_acceptance);
    ch.finish();
    c.chain.seed = s.unsigned_integer("seed", 1);
    c.likelihood.background = s.number("background", 0.0);
    c.likelihood.flux_log_sigma = s.number("flux_log_sigma", 1.0);
    c.input_state_path = s.string("input_state", "");
    s.finish();
  }
  {
    Section s(root.raw("analysis", json::object()), "analysis");
    c.align = s.boolean("align", true);
    c.alignment.restarts = static_cast<int>(s.unsigned_integer("restarts", 20));
    c.alignment.tolerance = s.number("tolerance", 1e-9);
    c.alignment.seed = s.unsigned_integer("seed", 0);
    s.finish();
  }
  {
    Section s(root.raw("sweep", json::object()), "sweep");
    c.sweep_kind = s.choice("kind", "stability", {"stability", "bandwidth"});
    const json sched = s.raw("schedule", nullptr);
    if (!sched.is_null()) c.schedule = parse_schedule(sched, "sweep.schedule");
    c.bandwidths = s.numbers("bandwidths", {});
    c.dgd = s.number("dgd", 0.0);
    c.shape = s.choice("shape", "rectangular", {"rectangular", "gaussian"});
    c.principal_basis = parse_unitary(s.raw("principal_basis", json{{"kind", "random"}, {"seed", 0}}),
                                      "sweep.principal_basis");
    c.reference_bandwidth = s.number("reference_bandwidth", 0.0);
    c.align_each_point = s.boolean("align_each_point", true);
    c.local_flux = s.number("local_flux", 0.0);
    c.input_source = s.choice("input_source", "inferred", {"inferred", "truth"});
    c.infer_output_state = s.boolean("infer_output_state", true);
    c.sweep_seed = s.unsigned_integer("seed", 1);
    s.finish();
  }
  {
    Section s(root.raw("output", json::object()), "output");
    c.output_dir = s.string("dir", "out");
    s.finish();
  }
  root.finish();

  if (over.seed) c.noise.seed = c.chain.seed = c.sweep_seed = *over.seed;
  if (over.chain_steps) c.chain.total_steps = *over.chain_steps;
  if (over.out) c.output_dir = *over.out;
  c.chain.validate();

  c.resolved = {
      {"simulation",
       {{"truth", c.truth.spec},
        {"input_state", c.input_state.spec},
        {"noise", {{"flux", c.noise.flux}, {"background", c.noise.background}, {"duration", c.noise.duration}}},
        {"seed", c.noise.seed}}},
      {"inference",
       {{"mode", c.mode},
        {"chain",
         {{"total_steps", c.chain.total_steps},
          {"kept_samples", c.chain.kept_samples},
          {"beta", c.chain.beta},
          {"adapt_steps", c.chain.adapt_steps},
          {"target_acceptance", c.chain.target_acceptance}}},
        {"seed", c.chain.seed},
        {"background", c.likelihood.background},
        {"flux_log_sigma", c.likelihood.flux_log_sigma},
        {"input_state", c.input_state_path}}},
      {"analysis",
       {{"align", c.align},
        {"restarts", c.alignment.restarts},
        {"tolerance", c.alignment.tolerance},
        {"seed", c.alignment.seed}}},
      {"sweep",
       {{"kind", c.sweep_kind},
        {"schedule", c.schedule.spec},
        {"bandwidths", c.bandwidths},
        {"dgd", c.dgd},
        {"shape", c.shape},
        {"principal_basis", c.principal_basis.spec},
        {"reference_bandwidth", c.reference_bandwidth},
        {"align_each_point", c.align_each_point},
        {"local_flux", c.local_flux},
        {"input_source", c.input_source},
        {"infer_output_state", c.infer_output_state},
        {"seed", c.sweep_seed}}},
      {"output", {{"dir", c.output_dir}}},
  };
  return c;
}

inline ExperimentConfig experiment_config(const RunConfig& c) {
  ExperimentConfig e;
  e.input_truth = c.input_state.value;
  e.input_source = c.input_source == "truth" ? InputStateSource::Truth : InputStateSource::Inferred;
  e.local_flux = c.local_flux;
  e.noise = c.noise;
  e.chain = c.chain;
  e.assumed_background = c.likelihood.background;
  e.infer_output_state = c.infer_output_state;
  e.alignment = c.alignment;
  e.seed = c.sweep_seed;
  return e;
}

inline BandwidthSweepConfig bandwidth_config(const RunConfig& c) {
  BandwidthSweepConfig b;
  b.bandwidths = c.bandwidths;
  b.dgd = c.dgd;
  b.shape = parse_shape(c.shape);
  b.principal_basis = c.principal_basis.value;
  b.reference_bandwidth = c.reference_bandwidth;
  b.align_each_point = c.align_each_point;
  return b;
}

}  // namespace aapt::config
