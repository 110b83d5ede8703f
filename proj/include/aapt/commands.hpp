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

// Command implementations behind the aapt executable. Every command writes
// its resolved configuration into the output directory.

#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "aapt/analysis.hpp"
#include "aapt/config.hpp"
#include "aapt/io.hpp"
#include "aapt/report.hpp"

namespace aapt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string config_path;
  config::Overrides overrides;
};

// Loads the config file (or an empty document), applies command patches and
// flag overrides, and writes resolved_config.json into the output directory.
inline config::RunConfig prepare(const GlobalOptions& g, const json& patch = json::object()) {
  json doc = g.config_path.empty() ? json::object() : io::read_json(g.config_path);
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  doc.merge_patch(patch);
  config::RunConfig c = config::resolve(doc, g.overrides);
  fs::create_directories(c.output_dir);
  io::write_json(fs::path(c.output_dir) / "resolved_config.json", c.resolved);
  return c;
}

inline std::map<std::string, std::string> run_metadata(const config::RunConfig& c, const std::string& what) {
  return {{"measured", what},
          {"seed", std::to_string(c.noise.seed)},
          {"flux", io::format_double(c.noise.flux)},
          {"background", io::format_double(c.noise.background)},
          {"truth", c.truth.spec.dump()},
          {"input_state", c.input_state.spec.dump()}};
}

// Writes counts.txt (channel output) and input_counts.txt (the input state
// measured locally, for the state inference that feeds channel mode).
inline int cmd_simulate(const GlobalOptions& g) {
  const config::RunConfig c = prepare(g);
  const auto probs = forward_probabilities(c.input_state.value, c.truth.value, all_settings());
  const auto records = simulate_counts(probs, c.noise);
  NoiseModel local = c.noise;
  local.seed = derive_seed(c.noise.seed, 1);
  const auto input_records = simulate_counts(born_probabilities(c.input_state.value, all_settings()), local);
  const fs::path out(c.output_dir);
  io::write_text_atomic(out / "counts.txt", io::write_counts(records, run_metadata(c, "channel_output")));
  io::write_text_atomic(out / "input_counts.txt", io::write_counts(input_records, run_metadata(c, "input_state")));
  io::write_json(out / "truth_choi.json", io::to_document(choi_from_kraus(c.truth.value)));
  std::cout << "wrote " << (out / "counts.txt").string() << " and " << (out / "input_counts.txt").string() << "\n";
  return kExitOk;
}

inline report::Report write_report(const fs::path& out, const json& archive, std::optional<double> local_flux) {
  const auto r = report::make_report(archive, local_flux);
  io::write_json(out / "report.json", r.doc);
  io::write_text_atomic(out / "report.txt", r.text);
  return r;
}

struct InferOptions {
  std::string counts;
  std::string mode;
  std::string input_state;
};

inline int cmd_infer(const GlobalOptions& g, const InferOptions& o) {
  json patch = json::object();
  if (!o.mode.empty()) patch["inference"]["mode"] = o.mode;
  if (!o.input_state.empty()) patch["inference"]["input_state"] = o.input_state;
  const config::RunConfig c = prepare(g, patch);
  const auto counts = io::parse_counts(io::read_text(o.counts));
  const fs::path out(c.output_dir);

  json archive;
  if (c.mode == "state") {
    const auto samples = run_pcn(StatePrior{}, counts.records, c.chain, std::nullopt, c.likelihood);
    archive = io::posterior_archive(samples, "state", c.chain, c.resolved, std::nullopt);
  } else {
    if (c.input_state_path.empty())
      throw ValidationError("infer: channel mode requires an input-state reference (--input-state)");
    const DensityMatrix input = io::load_input_state(c.input_state_path);
    const auto samples = run_pcn(ChannelPrior{}, counts.records, c.chain, input, c.likelihood);
    archive = io::posterior_archive(samples, "channel", c.chain, c.resolved, input);
  }
  // Report from the serialized form so `report` on the archive reproduces it.
  const std::string text = archive.dump(1);
  io::write_text_atomic(out / "posterior.json", text + "\n");
  std::cout << write_report(out, json::parse(text), std::nullopt).text;
  return kExitOk;
}

struct ConvertOptions {
  std::string input;
  std::string target;
  std::string output;
};

inline int cmd_convert(const GlobalOptions& g, const ConvertOptions& o) {
  const config::RunConfig c = prepare(g);
  const json doc = io::read_json(o.input);
  const json converted = io::convert_document(doc, io::representation_from_string(o.target));
  const fs::path dest = o.output.empty()
                            ? fs::path(c.output_dir) / (fs::path(o.input).stem().string() + "." + o.target + ".json")
                            : fs::path(o.output);
  io::write_json(dest, converted);
  std::cout << "wrote " << dest.string() << "\n";
  return kExitOk;
}

struct AlignOptions {
  std::string input;
  std::string target;
};

// Aligns a density or Choi document, or the mean of a posterior archive.
inline int cmd_align(const GlobalOptions& g, const AlignOptions& o) {
  const config::RunConfig c = prepare(g);
  const json doc = io::read_json(o.input);
  ComplexMatrix obj;
  FrameMode mode = FrameMode::State;
  if (doc.value("format", std::string{}) == "aapt-posterior") {
    const auto a = io::load_archive(doc);
    obj = ComplexMatrix::Zero(4, 4);
    for (const auto& m : a.samples) obj += m;
    obj /= static_cast<double>(a.samples.size());
    mode = a.kind == "channel" ? FrameMode::Choi : FrameMode::State;
  } else {
    const auto kind = io::document_kind(doc);
    if (kind == io::RepresentationKind::Density) {
      obj = io::density_from_document(doc).mat();
    } else {
      obj = io::choi_from_document(io::convert_document(doc, io::RepresentationKind::Choi)).mat();
      mode = FrameMode::Choi;
    }
  }
  std::string target = o.target;
  if (target.empty()) target = mode == FrameMode::Choi ? "phi_plus" : "psi_plus";
  ComplexVector t;
  if (target == "psi_plus")
    t = bell::psi_plus();
  else if (target == "phi_plus")
    t = bell::phi_plus();
  else
    throw ValidationError("align: target must be psi_plus or phi_plus");
  const auto r = align_frames(obj, t, mode, c.alignment);
  json res = io::document_header("aapt-alignment");
  res["mode"] = mode == FrameMode::Choi ? "choi" : "state";
  res["target"] = target;
  res["fidelity_before"] = state_fidelity(obj, t);
  res["fidelity_after"] = r.fidelity;
  res["rotation"] = io::rotation_to_json(r.rotation);
  res["aligned"] = io::matrix_to_json(r.aligned);
  io::write_json(fs::path(c.output_dir) / "alignment.json", res);
  std::cout << "fidelity " << io::format_double(state_fidelity(obj, t)) << " -> "
            << io::format_double(r.fidelity) << "\n";
  return kExitOk;
}

inline int cmd_sweep(const GlobalOptions& g, const std::string& kind) {
  json patch = json::object();
  if (!kind.empty()) patch["sweep"]["kind"] = kind;
  const config::RunConfig c = prepare(g, patch);
  const auto e = config::experiment_config(c);
  ExperimentResult result;
  std::optional<bool> trend;
  std::string trend_name;
  json extra = json::object();
  if (c.sweep_kind == "stability") {
    if (c.schedule.value.empty()) throw ValidationError("sweep: schedule is missing or has no points");
    result = run_stability_experiment(c.schedule.value, e);
    std::vector<double> means;
    double posterior_std = 0.0;
    for (const auto& p : result.points) {
      means.push_back(p.process.mean);
      posterior_std += p.process.std / static_cast<double>(result.points.size());
    }
    const Summary spread = summarize(means);
    extra = {{"fidelity_mean", spread.mean},
             {"fidelity_sample_std", spread.std},
             {"mean_posterior_std", posterior_std}};
  } else {
    result = run_bandwidth_sweep(config::bandwidth_config(c), e);
    trend = monotone_within_error(result.points, false);
    trend_name = "trend_nondecreasing";
    extra = {{"trend_decreasing", monotone_within_error(result.points, true)}};
  }
  json doc = io::sweep_json(result, c.sweep_kind, c.resolved, trend, trend_name);
  doc["summary"] = extra;
  const fs::path out(c.output_dir);
  io::write_text_atomic(out / "sweep.csv", io::sweep_csv(result));
  io::write_json(out / "sweep.json", doc);
  std::cout << "wrote " << result.points.size() << " points to " << (out / "sweep.csv").string() << "\n";
  return kExitOk;
}

struct ReportOptions {
  std::string archive;
  std::optional<double> local_flux;
};

inline int cmd_report(const GlobalOptions& g, const ReportOptions& o) {
  const config::RunConfig c = prepare(g);
  std::cout << write_report(c.output_dir, io::read_json(o.archive), o.local_flux).text;
  return kExitOk;
}

// Parses argv and dispatches; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Bayesian ancilla-assisted process tomography"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  std::uint64_t seed = 0, steps = 0;
  std::string out;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "seed for simulation, chains and sweeps");
  auto* steps_opt = app.add_option("--chain-steps", steps, "recorded pCN steps after adaptation");
  auto* out_opt = app.add_option("--out", out, "output directory");

  auto* sim = app.add_subcommand("simulate", "simulate coincidence counts");
  InferOptions io_opts;
  auto* inf = app.add_subcommand("infer", "run Bayesian inference on a counts file");
  inf->add_option("--counts", io_opts.counts, "counts file")->required()->check(CLI::ExistingFile);
  inf->add_option("--mode", io_opts.mode, "state or channel")->check(CLI::IsMember({"state", "channel"}));
  inf->add_option("--input-state", io_opts.input_state, "density document or state archive");
  ConvertOptions conv;
  auto* cv = app.add_subcommand("convert", "convert between channel representations");
  cv->add_option("--in", conv.input, "input document")->required()->check(CLI::ExistingFile);
  cv->add_option("--to", conv.target, "kraus, choi or chi")
      ->required()
      ->check(CLI::IsMember({"kraus", "choi", "chi"}));
  cv->add_option("--output", conv.output, "output file (default: <out>/<stem>.<to>.json)");
  AlignOptions al;
  auto* alc = app.add_subcommand("align", "fit local frame rotations");
  alc->add_option("--in", al.input, "density, channel or archive document")->required()->check(CLI::ExistingFile);
  alc->add_option("--target", al.target, "psi_plus or phi_plus");
  std::string sweep_kind;
  auto* sw = app.add_subcommand("sweep", "run a stability or bandwidth sweep");
  sw->add_option("--kind", sweep_kind, "stability or bandwidth")->check(CLI::IsMember({"stability", "bandwidth"}));
  ReportOptions rep;
  double local_flux = 0.0;
  auto* rp = app.add_subcommand("report", "summarize a posterior archive");
  rp->add_option("--archive", rep.archive, "posterior archive")->required()->check(CLI::ExistingFile);
  auto* lf = rp->add_option("--local-flux", local_flux, "local flux for the loss estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (*seed_opt) g.overrides.seed = seed;
  if (*steps_opt) g.overrides.chain_steps = steps;
  if (*out_opt) g.overrides.out = out;

  try {
    if (*sim) return cmd_simulate(g);
    if (*inf) return cmd_infer(g, io_opts);
    if (*cv) return cmd_convert(g, conv);
    if (*alc) return cmd_align(g, al);
    if (*sw) return cmd_sweep(g, sweep_kind);
    if (*lf) rep.local_flux = local_flux;
    return cmd_report(g, rep);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace aapt::cli
