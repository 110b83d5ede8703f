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

#include "aapt/config.hpp"

using namespace aapt;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("empty config resolves to documented defaults", "[config]") {
  const auto c = config::resolve(json::object());
  CHECK(c.noise.flux == 1e5);
  CHECK(c.noise.background == 0.0);
  CHECK(c.noise.duration == 30.0);
  CHECK(c.chain.total_steps == (1u << 18));
  CHECK(c.chain.kept_samples == (1u << 10));
  CHECK(c.mode == "channel");
  CHECK(c.alignment.restarts == 20);
  CHECK(c.truth.value.rank() == 1);
  CHECK(c.resolved.at("simulation").at("truth").at("kind") == "identity");
}

TEST_CASE("a resolved config resolves to itself", "[config]") {
  const json doc = json::parse(R"({
    "simulation": {"truth": {"kind": "compose", "channels": [
        {"kind": "unitary", "unitary": {"kind": "axis_angle", "axis": [1, 0, 0], "angle": 0.4}},
        {"kind": "depolarizing", "p": 0.05}]},
      "noise": {"flux": 2e4, "background": 3}, "seed": 9},
    "inference": {"chain": {"total_steps": 4096, "kept_samples": 256}},
    "sweep": {"kind": "stability", "schedule": {"kind": "drift", "points": 5,
      "channel": {"kind": "identity"}, "axis": [0, 0, 1], "angle_per_point": 0.01}}
  })");
  const auto c = config::resolve(doc);
  const auto again = config::resolve(c.resolved);
  CHECK(again.resolved == c.resolved);
  CHECK(again.schedule.value.size() == 5);
  CHECK(frobenius_distance(choi_from_kraus(again.truth.value).mat(), choi_from_kraus(c.truth.value).mat()) == 0.0);
}

TEST_CASE("unknown keys are rejected with their path", "[config]") {
  CHECK_THROWS_WITH(config::resolve(json::parse(R"({"simulation": {"noise": {"flux": 1, "flx": 2}}})")),
                    ContainsSubstring("unknown key 'simulation.noise.flx'"));
  CHECK_THROWS_WITH(config::resolve(json::parse(R"({"inferense": {}})")), ContainsSubstring("'inferense'"));
  CHECK_THROWS_WITH(
      config::resolve(json::parse(R"({"simulation": {"truth": {"kind": "depolarizing", "p": 0.1, "q": 1}}})")),
      ContainsSubstring("simulation.truth.q"));
}

TEST_CASE("type and range errors name the key", "[config]") {
  CHECK_THROWS_WITH(config::resolve(json::parse(R"({"simulation": {"noise": {"flux": "high"}}})")),
                    ContainsSubstring("simulation.noise.flux"));
  CHECK_THROWS_WITH(config::resolve(json::parse(R"({"inference": {"mode": "joint"}})")),
                    ContainsSubstring("inference.mode"));
  CHECK_THROWS_WITH(config::resolve(json::parse(R"({"simulation": {"truth": {"kind": "depolarizing"}}})")),
                    ContainsSubstring("missing required key 'simulation.truth.p'"));
  CHECK_THROWS_AS(config::resolve(json::parse(R"({"inference": {"chain": {"kept_samples": 3}}})")),
                  ValidationError);
  CHECK_THROWS_AS(config::resolve(json::parse(R"({"simulation": []})")), ValidationError);
}

TEST_CASE("command-line overrides win over the file", "[config]") {
  config::Overrides o;
  o.seed = 77;
  o.chain_steps = 2048;
  o.out = "elsewhere";
  const auto c = config::resolve(json::parse(R"({"simulation": {"seed": 1}, "inference": {"seed": 2}})"), o);
  CHECK(c.noise.seed == 77);
  CHECK(c.chain.seed == 77);
  CHECK(c.sweep_seed == 77);
  CHECK(c.chain.total_steps == 2048);
  CHECK(c.output_dir == "elsewhere");
  CHECK(c.resolved.at("inference").at("chain").at("total_steps") == 2048);
}

TEST_CASE("channel specs build the catalog channels", "[config]") {
  const auto pmd = config::parse_channel(
      json::parse(R"({"kind": "pmd", "dgd": 1e-12, "bandwidth": 5e11, "principal_basis": {"kind": "identity"}})"), "t");
  const double c = pmd_coherence(1e-12, SpectralWindow{SpectralShape::Rectangular, 5e11});
  CHECK_THAT(process_fidelity(choi_from_kraus(pmd.value)), WithinAbs(0.5 * (1 + std::abs(c)), 1e-12));

  const auto dep = config::parse_channel(json::parse(R"({"kind": "depolarizing", "p": 0.2})"), "t");
  CHECK_THAT(process_fidelity(choi_from_kraus(dep.value)), WithinAbs(0.85, 1e-12));

  const auto a = config::parse_channel(json::parse(R"({"kind": "random_unitary", "seed": 4})"), "t");
  const auto b = config::parse_channel(json::parse(R"({"kind": "random_unitary", "seed": 4})"), "t");
  CHECK(a.value.operators()[0] == b.value.operators()[0]);

  CHECK_THROWS_AS(config::parse_channel(json::parse(R"({"kind": "unitary", "unitary": {"kind": "matrix",
      "matrix": [[[2,0],[0,0]],[[0,0],[1,0]]]}})"), "t"),
                  ValidationError);
}

TEST_CASE("state specs", "[config]") {
  const auto w = config::parse_state(json::parse(R"({"kind": "werner", "visibility": 0.9})"), "s");
  CHECK_THAT(state_fidelity(w.value, bell::psi_plus()), WithinAbs(0.9 + 0.1 / 4, 1e-12));
  CHECK_THROWS_AS(config::parse_state(json::parse(R"({"kind": "werner", "visibility": 1.5})"), "s"),
                  ValidationError);
  CHECK_THROWS_AS(config::parse_state(json::parse(R"({"kind": "file"})"), "s"), ValidationError);
}

TEST_CASE("schedules", "[config]") {
  const auto step = config::parse_schedule(json::parse(R"({"kind": "step", "points": 6, "step_at": 2,
      "before": {"kind": "identity"}, "after": {"kind": "unitary", "unitary": {"kind": "axis_angle",
      "axis": [1, 0, 0], "angle": 3.141592653589793}}})"), "s");
  REQUIRE(step.value.size() == 6);
  CHECK(process_fidelity(choi_from_kraus(step.value[1])) > 0.999);
  CHECK(process_fidelity(choi_from_kraus(step.value[2])) < 1e-12);

  const auto constant = config::parse_schedule(json::parse(R"({"kind": "constant"})"), "s");
  CHECK(constant.value.size() == 24);
  const auto list = config::parse_schedule(json::parse(R"({"kind": "list", "channels": []})"), "s");
  CHECK(list.value.empty());
}
