// SPDX-License-Identifier: Apache-2.0
//
// isacfj - secure multicarrier ISAC simulation with sensing-guided friendly jamming
// Copyright (C) 2026 The isacfj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISACFJ_CONFIG_HPP
#define ISACFJ_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "isacfj/eval.hpp"
#include "isacfj/training.hpp"

namespace isacfj {

struct RunConfig {
    ScenarioConfig scenario;
    TrainConfig training;
    SweepSpec sweep;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    // Kept in the units of the file so snapshots reproduce bit-for-bit;
    // apply_units() derives the linear and radian fields from them.
    double crlb0_theta_db = -30.0;
    double crlb0_phi_db = -30.0;
    double dtheta_iq_deg = 0.0;

    void apply_units();
    void validate() const;
};

/// Defaults of the reference simulation setup: N_t = 16, N_r = 4, N_e = 2,
/// K = 2, N = 64 with the first half communication-only, P_max = 30 dB,
/// unit noise, CRLB thresholds -30 dB, angles (10, 15) degrees.
RunConfig default_run_config();

/// Strict INI parse. `[section]` headers scope the keys that follow;
/// dotted keys (`geometry.n_tx = 8`) name their section explicitly and may
/// appear anywhere. `#` and `;` start comments. Unknown sections or keys,
/// malformed values and repeated keys are errors naming the line.
RunConfig parse_config_string(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::string& path);

/// Every key with its effective value, in a form parse_config reads back
/// to an identical configuration.
std::string resolved_config(const RunConfig& cfg);

/// All accepted keys as "section.key".
std::vector<std::string> config_keys();

} // namespace isacfj

#endif
