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

// On-disk formats. Every file carries a format name, a format_version and,
// where matrices are involved, the convention block below; readers reject
// files whose conventions differ from the ones this library computes in.
//
//  * matrix documents (JSON): density | choi | kraus | chi
//  * counts files (text): '#'-prefixed key: value header, then one
//    "<setting> <duration_s> <counts>" row per projection
//  * posterior archives and chain checkpoints (JSON)
//  * sweep results (CSV for plotting, JSON with full provenance)

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aapt/analysis.hpp"
#include "aapt/bayes.hpp"
#include "aapt/channel.hpp"
#include "aapt/measurement.hpp"

namespace aapt::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline const json& convention() {
  static const json c = {
      {"basis_order", "HH,HV,VH,VV"},
      {"subsystem_order", "A(ancilla) slow, B(channel) fast"},
      {"choi_definition", "(1_A x E_B)(|phi+><phi+|)"},
      {"choi_normalization", "trace_one"},
      {"kraus_from_choi", "<i|A_k|j> = sqrt(d e_k) <j i|gamma_k>"},
      {"chi_basis", "pauli I,X,Y,Z; Tr(Ei^dag Ej) = d delta_ij"},
      {"circular_phase", "R=(1,i)/sqrt2, L=(1,-i)/sqrt2"},
      {"choi_rotation", "(u_a^T x u_b) Phi (u_a^T x u_b)^dag"},
  };
  return c;
}

inline void check_convention(const json& doc) {
  if (!doc.contains("convention") || !doc["convention"].is_object())
    throw ValidationError("convention mismatch: header has no convention block");
  const auto& c = doc["convention"];
  for (const auto& [key, value] : convention().items()) {
    if (!c.contains(key))
      throw ValidationError("convention mismatch: missing key '" + key + "'");
    if (c[key] != value)
      throw ValidationError("convention mismatch: '" + key + "' is " + c[key].dump() + ", expected " +
                            value.dump());
  }
  for (const auto& [key, value] : c.items())
    if (!convention().contains(key)) throw ValidationError("convention mismatch: unknown key '" + key + "'");
}

inline void check_format(const json& doc, const std::string& name) {
  if (!doc.is_object() || doc.value("format", std::string{}) != name)
    throw ValidationError("expected a '" + name + "' document");
  if (doc.value("format_version", -1) != kFormatVersion)
    throw ValidationError("unsupported " + name + " format_version");
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("matrix: expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError("matrix: ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& e = row[static_cast<std::size_t>(k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ValidationError("matrix: entries must be [re, im] pairs");
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

inline json document_header(const std::string& format) {
  return {{"format", format}, {"format_version", kFormatVersion}, {"convention", convention()}};
}

// ---------------------------------------------------------------------------
// Matrix documents

enum class RepresentationKind { Density, Choi, Kraus, Chi };

inline std::string to_string(RepresentationKind k) {
  switch (k) {
    case RepresentationKind::Density: return "density";
    case RepresentationKind::Choi: return "choi";
    case RepresentationKind::Kraus: return "kraus";
    case RepresentationKind::Chi: return "chi";
  }
  return "";
}

inline RepresentationKind representation_from_string(const std::string& s) {
  if (s == "density") return RepresentationKind::Density;
  if (s == "choi") return RepresentationKind::Choi;
  if (s == "kraus") return RepresentationKind::Kraus;
  if (s == "chi") return RepresentationKind::Chi;
  throw ValidationError("unknown representation '" + s + "' (expected density, choi, kraus or chi)");
}

inline json to_document(const DensityMatrix& rho) {
  json doc = document_header("aapt-matrix");
  doc["kind"] = "density";
  doc["dim"] = rho.dim();
  doc["matrix"] = matrix_to_json(rho.mat());
  return doc;
}

inline json to_document(const ChoiMatrix& c) {
  json doc = document_header("aapt-matrix");
  doc["kind"] = "choi";
  doc["d"] = c.d();
  doc["matrix"] = matrix_to_json(c.mat());
  return doc;
}

inline json to_document(const KrausSet& k) {
  json doc = document_header("aapt-matrix");
  doc["kind"] = "kraus";
  doc["d"] = k.d();
  json ops = json::array();
  for (const auto& a : k.operators()) ops.push_back(matrix_to_json(a));
  doc["operators"] = std::move(ops);
  return doc;
}

inline json to_document(const ProcessMatrixChi& x) {
  json doc = document_header("aapt-matrix");
  doc["kind"] = "chi";
  doc["d"] = x.d();
  doc["matrix"] = matrix_to_json(x.mat());
  return doc;
}

inline RepresentationKind document_kind(const json& doc) {
  check_format(doc, "aapt-matrix");
  check_convention(doc);
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ValidationError("matrix document has no kind");
  return representation_from_string(doc["kind"].get<std::string>());
}

// Tolerances for reading: stored values pass through decimal text, so
// validation is looser than for in-memory construction.
inline constexpr double kReadTolerance = 1e-8;

inline DensityMatrix density_from_document(const json& doc) {
  if (document_kind(doc) != RepresentationKind::Density)
    throw ValidationError("expected a density-matrix document");
  return DensityMatrix(matrix_from_json(doc.at("matrix")), kReadTolerance);
}

inline ChoiMatrix choi_from_document(const json& doc) {
  if (document_kind(doc) != RepresentationKind::Choi) throw ValidationError("expected a Choi document");
  return ChoiMatrix(matrix_from_json(doc.at("matrix")), kReadTolerance, kReadTolerance);
}

inline KrausSet kraus_from_document(const json& doc) {
  if (document_kind(doc) != RepresentationKind::Kraus) throw ValidationError("expected a Kraus document");
  std::vector<ComplexMatrix> ops;
  for (const auto& op : doc.at("operators")) ops.push_back(matrix_from_json(op));
  return KrausSet(std::move(ops), kReadTolerance);
}

inline ProcessMatrixChi chi_from_document(const json& doc) {
  if (document_kind(doc) != RepresentationKind::Chi) throw ValidationError("expected a chi document");
  return ProcessMatrixChi(matrix_from_json(doc.at("matrix")), kReadTolerance);
}

// Any channel document as a Kraus set.
inline KrausSet channel_from_document(const json& doc) {
  switch (document_kind(doc)) {
    case RepresentationKind::Kraus: return kraus_from_document(doc);
    case RepresentationKind::Choi: return kraus_from_choi(choi_from_document(doc));
    case RepresentationKind::Chi: return kraus_from_chi(chi_from_document(doc));
    case RepresentationKind::Density: break;
  }
  throw ValidationError("document holds a state, not a channel");
}

inline json convert_document(const json& doc, RepresentationKind target) {
  const KrausSet k = channel_from_document(doc);
  switch (target) {
    case RepresentationKind::Kraus: return to_document(k);
    case RepresentationKind::Choi: return to_document(choi_from_kraus(k));
    case RepresentationKind::Chi: return to_document(chi_from_kraus(k));
    case RepresentationKind::Density: break;
  }
  throw ValidationError("cannot convert a channel to a density matrix");
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temporary, then rename over the target.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Counts files

struct CountsFile {
  std::vector<MeasurementRecord> records;  // all_settings() order
  std::map<std::string, std::string> metadata;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string write_counts(const std::vector<MeasurementRecord>& records,
                                const std::map<std::string, std::string>& metadata = {}) {
  std::ostringstream out;
  out << "# aapt-counts\n";
  out << "# format_version: " << kFormatVersion << "\n";
  out << "# basis_order: " << convention()["basis_order"].get<std::string>() << "\n";
  out << "# circular_phase: " << convention()["circular_phase"].get<std::string>() << "\n";
  out << "# setting_order: alice-major, HVDARL\n";
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
  out << "# columns: setting duration_s counts\n";
  for (const auto& r : records)
    out << r.setting.label() << " " << format_double(r.duration) << " " << r.counts << "\n";
  return out.str();
}

inline CountsFile parse_counts(const std::string& text) {
  CountsFile file;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool magic = false;
  std::map<std::string, MeasurementRecord> by_label;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto first = body.find_first_not_of(' ');
      body = first == std::string::npos ? "" : body.substr(first);
      if (line_no == 1 && body == "aapt-counts") {
        magic = true;
        continue;
      }
      const auto colon = body.find(": ");
      if (colon != std::string::npos) file.metadata[body.substr(0, colon)] = body.substr(colon + 2);
      continue;
    }
    if (!magic) throw ValidationError("counts: missing '# aapt-counts' header line");
    std::istringstream row(line);
    std::string label, extra;
    double duration = 0.0;
    long long counts = -1;
    if (!(row >> label >> duration >> counts) || (row >> extra))
      throw ValidationError("counts: line " + std::to_string(line_no) +
                            " must read '<setting> <duration_s> <counts>'");
    const auto setting = setting_from_label(label);
    if (!setting) throw ValidationError("counts: line " + std::to_string(line_no) + ": unknown setting '" + label + "'");
    if (counts < 0) throw ValidationError("counts: line " + std::to_string(line_no) + ": negative counts");
    if (!(duration > 0.0)) throw ValidationError("counts: line " + std::to_string(line_no) + ": duration must be positive");
    if (!by_label.emplace(label, MeasurementRecord{*setting, duration, counts}).second)
      throw ValidationError("counts: duplicate setting '" + label + "'");
  }
  if (!magic) throw ValidationError("counts: missing '# aapt-counts' header line");
  if (file.metadata["format_version"] != std::to_string(kFormatVersion))
    throw ValidationError("counts: unsupported format_version");
  for (const char* key : {"basis_order", "circular_phase"})
    if (file.metadata[key] != convention()[key].get<std::string>())
      throw ValidationError(std::string("counts: convention mismatch in '") + key + "'");
  std::vector<std::string> missing;
  for (const auto& s : all_settings()) {
    const auto it = by_label.find(s.label());
    if (it == by_label.end()) {
      missing.push_back(s.label());
      continue;
    }
    file.records.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("counts: missing projection(s) " + list);
  }
  return file;
}

// ---------------------------------------------------------------------------
// Chain configuration, checkpoints

inline json to_json(const ChainConfig& c) {
  return {{"total_steps", c.total_steps}, {"kept_samples", c.kept_samples}, {"beta", c.beta},
          {"adapt_steps", c.adapt_steps}, {"target_acceptance", c.target_acceptance}, {"seed", c.seed}};
}

inline ChainConfig chain_config_from_json(const json& j) {
  ChainConfig c;
  c.total_steps = j.at("total_steps").get<std::uint64_t>();
  c.kept_samples = j.at("kept_samples").get<std::uint64_t>();
  c.beta = j.at("beta").get<double>();
  c.adapt_steps = j.at("adapt_steps").get<std::uint64_t>();
  c.target_acceptance = j.at("target_acceptance").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

inline json to_json(const PcnState& s) {
  return {{"step", s.step},
          {"x", s.x},
          {"log_likelihood", s.log_likelihood},
          {"beta", s.beta},
          {"accepted_adapt", s.accepted_adapt},
          {"accepted_sample", s.accepted_sample},
          {"init_retries", s.init_retries},
          {"rejected_singular", s.rejected_singular},
          {"rng_state", s.rng_state},
          {"normal_state", s.normal_state},
          {"uniform_state", s.uniform_state},
          {"kept", s.kept}};
}

inline PcnState pcn_state_from_json(const json& j) {
  PcnState s;
  s.step = j.at("step").get<std::uint64_t>();
  s.x = j.at("x").get<ParameterVector>();
  s.log_likelihood = j.at("log_likelihood").get<double>();
  s.beta = j.at("beta").get<double>();
  s.accepted_adapt = j.at("accepted_adapt").get<std::uint64_t>();
  s.accepted_sample = j.at("accepted_sample").get<std::uint64_t>();
  s.init_retries = j.at("init_retries").get<std::uint64_t>();
  s.rejected_singular = j.at("rejected_singular").get<std::uint64_t>();
  s.rng_state = j.at("rng_state").get<std::string>();
  s.normal_state = j.at("normal_state").get<std::string>();
  s.uniform_state = j.at("uniform_state").get<std::string>();
  s.kept = j.at("kept").get<std::vector<ParameterVector>>();
  return s;
}

template <PriorMap Prior>
json checkpoint_document(const PcnSampler<Prior>& sampler) {
  json doc = document_header("aapt-checkpoint");
  doc["prior"] = Prior::kind_name();
  doc["chain"] = to_json(sampler.config());
  doc["state"] = to_json(sampler.state());
  return doc;
}

template <PriorMap Prior>
void restore_checkpoint(PcnSampler<Prior>& sampler, const json& doc) {
  check_format(doc, "aapt-checkpoint");
  if (doc.value("prior", std::string{}) != Prior::kind_name())
    throw ValidationError("checkpoint: prior kind does not match");
  if (doc.at("chain") != to_json(sampler.config()))
    throw ValidationError("checkpoint: chain configuration does not match");
  sampler.restore(pcn_state_from_json(doc.at("state")));
}

// ---------------------------------------------------------------------------
// Posterior archives

template <class Object>
json posterior_archive(const PosteriorSamples<Object>& samples, const std::string& kind,
                       const ChainConfig& chain, const json& resolved_config,
                       const std::optional<DensityMatrix>& fixed_input) {
  json doc = document_header("aapt-posterior");
  doc["kind"] = kind;
  doc["chain"] = to_json(chain);
  doc["config"] = resolved_config;
  doc["acceptance_rate"] = samples.acceptance_rate;
  doc["diagnostics"] = {{"final_beta", samples.diagnostics.final_beta},
                        {"adapt_acceptance", samples.diagnostics.adapt_acceptance},
                        {"init_retries", samples.diagnostics.init_retries},
                        {"rejected_singular", samples.diagnostics.rejected_singular}};
  doc["fixed_input"] = fixed_input ? matrix_to_json(fixed_input->mat()) : json(nullptr);
  doc["flux"] = samples.flux;
  json objs = json::array();
  for (const auto& o : samples.objects) objs.push_back(matrix_to_json(o.mat()));
  doc["samples"] = std::move(objs);
  return doc;
}

struct LoadedArchive {
  std::string kind;
  std::vector<ComplexMatrix> samples;
  std::vector<double> flux;
  json doc;
};

inline LoadedArchive load_archive(const json& doc) {
  check_format(doc, "aapt-posterior");
  check_convention(doc);
  LoadedArchive a;
  a.kind = doc.at("kind").get<std::string>();
  if (a.kind != "state" && a.kind != "channel") throw ValidationError("archive: unknown kind '" + a.kind + "'");
  for (const auto& m : doc.at("samples")) a.samples.push_back(matrix_from_json(m));
  a.flux = doc.at("flux").get<std::vector<double>>();
  if (a.samples.empty() || a.samples.size() != a.flux.size())
    throw ValidationError("archive: sample and flux lists are empty or misaligned");
  a.doc = doc;
  return a;
}

// Posterior mean of a stored sample list, as a validated type.
inline DensityMatrix archive_mean_state(const LoadedArchive& a) {
  if (a.kind != "state") throw ValidationError("archive does not hold a state posterior");
  ComplexMatrix acc = ComplexMatrix::Zero(a.samples.front().rows(), a.samples.front().cols());
  for (const auto& m : a.samples) acc += m;
  return DensityMatrix(hermitize(acc / static_cast<double>(a.samples.size())), kReadTolerance);
}

// A state to plug in as channel input: a density document or a state archive mean.
inline DensityMatrix load_input_state(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const std::string format = doc.value("format", std::string{});
  if (format == "aapt-posterior") return archive_mean_state(load_archive(doc));
  if (format == "aapt-matrix") return density_from_document(doc);
  throw ValidationError("'" + path.string() + "' is neither a density document nor a state archive");
}

// ---------------------------------------------------------------------------
// Sweep results

inline std::string csv_number(double v) { return format_double(v); }

inline std::string sweep_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "label,label_value,process_fidelity_mean,process_fidelity_std,output_state_fidelity_mean,"
         "output_state_fidelity_std,flux_mean,flux_std,flux_rate_mean,loss_db,truth_process_fidelity,"
         "acceptance_rate,split_rhat\n";
  for (const auto& p : r.points) {
    out << p.label << "," << csv_number(p.label_value) << "," << csv_number(p.process.mean) << ","
        << csv_number(p.process.std) << ",";
    if (p.output_state)
      out << csv_number(p.output_state->mean) << "," << csv_number(p.output_state->std);
    else
      out << ",";
    out << "," << csv_number(p.flux.mean) << "," << csv_number(p.flux.std) << ","
        << csv_number(p.duration > 0.0 ? p.flux.mean / p.duration : 0.0) << ",";
    if (p.loss_db) out << csv_number(*p.loss_db);
    out << "," << csv_number(p.ground_truth.at("truth_process_fidelity")) << ","
        << csv_number(p.acceptance_rate) << "," << csv_number(p.split_rhat) << "\n";
  }
  return out.str();
}

inline json rotation_to_json(const LocalRotation& r) {
  return {{"angles", r.angles}, {"u_a", matrix_to_json(r.u_a)}, {"u_b", matrix_to_json(r.u_b)}};
}

inline json sweep_json(const ExperimentResult& r, const std::string& kind, const json& resolved_config,
                       std::optional<bool> trend_flag, const std::string& trend_name) {
  json doc = document_header("aapt-sweep");
  doc["kind"] = kind;
  doc["config"] = resolved_config;
  doc["choi_rotation"] = rotation_to_json(r.choi_rotation);
  doc["state_rotation"] = rotation_to_json(r.state_rotation);
  if (r.input)
    doc["input_state"] = {{"fidelity_mean", r.input->fidelity.mean},
                          {"fidelity_std", r.input->fidelity.std},
                          {"flux_mean", r.input->flux.mean},
                          {"flux_std", r.input->flux.std},
                          {"rho_mean", matrix_to_json(r.input->rho_mean)}};
  json pts = json::array();
  for (const auto& p : r.points) {
    json jp = {{"label", p.label},
               {"label_value", p.label_value},
               {"ground_truth", p.ground_truth},
               {"noise_seed", p.noise_seed},
               {"chain_seed", p.chain_seed},
               {"process_fidelity", {{"mean", p.process.mean}, {"std", p.process.std}}},
               {"flux", {{"mean", p.flux.mean}, {"std", p.flux.std}}},
               {"duration", p.duration},
               {"acceptance_rate", p.acceptance_rate},
               {"split_rhat", p.split_rhat},
               {"choi_mean", matrix_to_json(p.choi_mean)}};
    if (p.output_state) jp["output_state_fidelity"] = {{"mean", p.output_state->mean}, {"std", p.output_state->std}};
    if (p.loss_db) jp["loss_db"] = *p.loss_db;
    pts.push_back(std::move(jp));
  }
  doc["points"] = std::move(pts);
  if (trend_flag) doc[trend_name] = *trend_flag;
  return doc;
}

}  // namespace aapt::io
