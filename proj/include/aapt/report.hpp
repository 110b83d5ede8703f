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

// Human-readable and JSON summaries of a posterior archive. A report depends
// only on the archive document, so it regenerates bit-identically.

#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aapt/analysis.hpp"
#include "aapt/io.hpp"

namespace aapt::report {

using nlohmann::json;

// Percent with the std as one significant digit in the last place:
// (0.951, 0.001) -> "95.1(1)%".
inline std::string format_percent(double mean, double std) {
  if (!std::isfinite(mean) || !std::isfinite(std) || std < 0.0)
    throw ValidationError("format_percent: mean and std must be finite, std nonnegative");
  const double m = 100.0 * mean;
  const double s = 100.0 * std;
  char buf[64];
  if (s == 0.0) {
    std::snprintf(buf, sizeof buf, "%.1f(0)%%", m);
    return buf;
  }
  int e = static_cast<int>(std::floor(std::log10(s)));
  long digit = std::lround(s / std::pow(10.0, e));
  if (digit >= 10) {
    ++e;
    digit = 1;
  } else if (digit == 0) {
    --e;
    digit = std::lround(s / std::pow(10.0, e));
  }
  if (e < 0) {
    std::snprintf(buf, sizeof buf, "%.*f(%ld)%%", -e, m, digit);
  } else {
    const double scale = std::pow(10.0, e);
    std::snprintf(buf, sizeof buf, "%.0f(%.0f)%%", std::round(m / scale) * scale,
                  static_cast<double>(digit) * scale);
  }
  return buf;
}

struct FunctionalSummary {
  Summary summary;
  double split_rhat = 1.0;
};

inline FunctionalSummary summarize_trace(const std::vector<double>& trace) {
  return {summarize(trace), split_rhat(trace)};
}

struct Report {
  json doc;
  std::string text;
};

inline json summary_json(const FunctionalSummary& f) {
  return {{"mean", f.summary.mean},
          {"std", f.summary.std},
          {"formatted", format_percent(f.summary.mean, f.summary.std)},
          {"split_rhat", f.split_rhat}};
}

inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// `local_flux`, when given, adds the channel loss against the posterior flux.
inline Report make_report(const json& archive_doc, std::optional<double> local_flux = std::nullopt) {
  const io::LoadedArchive a = io::load_archive(archive_doc);
  const json& cfg = a.doc.at("config");
  AlignmentOptions opts;
  bool align = true;
  if (cfg.contains("analysis")) {
    const auto& an = cfg.at("analysis");
    align = an.value("align", true);
    opts.restarts = an.value("restarts", opts.restarts);
    opts.tolerance = an.value("tolerance", opts.tolerance);
    opts.seed = an.value("seed", opts.seed);
  }

  ComplexMatrix mean = ComplexMatrix::Zero(4, 4);
  for (const auto& m : a.samples) mean += m;
  mean /= static_cast<double>(a.samples.size());

  const bool channel = a.kind == "channel";
  const FrameMode mode = channel ? FrameMode::Choi : FrameMode::State;
  const ComplexVector target = channel ? bell::phi_plus() : bell::psi_plus();
  LocalRotation rot;
  if (align) rot = align_frames(mean, target, mode, opts).rotation;

  std::vector<double> raw, aligned;
  for (const auto& m : a.samples) {
    raw.push_back(state_fidelity(m, target));
    aligned.push_back(state_fidelity(apply_fixed_rotation(m, rot, mode), target));
  }
  const auto f_raw = summarize_trace(raw);
  const auto f_aligned = summarize_trace(aligned);
  const Summary flux = summarize(a.flux);
  const std::string what = channel ? "process_fidelity" : "state_fidelity";

  Report r;
  r.doc = io::document_header("aapt-report");
  r.doc["kind"] = a.kind;
  r.doc["samples"] = a.samples.size();
  r.doc[what] = {{"aligned", summary_json(f_aligned)}, {"unaligned", summary_json(f_raw)}};
  r.doc["rotation"] = io::rotation_to_json(rot);
  r.doc["flux"] = {{"mean", flux.mean}, {"std", flux.std}};
  r.doc["acceptance_rate"] = a.doc.at("acceptance_rate");
  r.doc["diagnostics"] = a.doc.at("diagnostics");
  r.doc["rhat_warning"] = f_aligned.split_rhat > kRhatWarnThreshold;
  std::optional<double> loss;
  if (local_flux) {
    loss = channel_loss_db(*local_flux, flux.mean);
    r.doc["loss_db"] = *loss;
  }

  std::ostringstream t;
  const std::string label = channel ? "process fidelity" : "state fidelity";
  t << "kind: " << a.kind << " (" << a.samples.size() << " samples)\n";
  t << label << " (aligned):   " << format_percent(f_aligned.summary.mean, f_aligned.summary.std) << "\n";
  t << label << " (unaligned): " << format_percent(f_raw.summary.mean, f_raw.summary.std) << "\n";
  t << "flux per basis: " << fixed(flux.mean, 1) << " +/- " << fixed(flux.std, 1) << "\n";
  if (loss) t << "channel loss: " << fixed(*loss, 3) << " dB\n";
  t << "acceptance rate: " << fixed(a.doc.at("acceptance_rate").get<double>(), 3) << "\n";
  t << "split R-hat: " << fixed(f_aligned.split_rhat, 4)
    << (f_aligned.split_rhat > kRhatWarnThreshold ? " (WARNING: above 1.05)" : "") << "\n";
  const json& conv = io::convention();
  t << "convention: basis " << conv.at("basis_order").get<std::string>() << ", Choi "
    << conv.at("choi_normalization").get<std::string>() << ", " << conv.at("circular_phase").get<std::string>()
    << "\n";
  r.text = t.str();
  return r;
}

}  // namespace aapt::report
