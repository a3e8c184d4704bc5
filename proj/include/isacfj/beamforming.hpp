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

#ifndef ISACFJ_BEAMFORMING_HPP
#define ISACFJ_BEAMFORMING_HPP

#include <vector>

#include "isacfj/numerics.hpp"

namespace isacfj {

enum class PowerMode {
    average,        ///< (1/N) sum_n P_n <= P_max
    per_subcarrier, ///< P_n <= P_max / N for every n
};

/// Power coefficients: comm_power(k, n) scales user k's beam on
/// subcarrier n, jam_power(n) scales the jamming beam.
struct PowerAllocation {
    RMat comm_power;
    RVec jam_power;
    double p_max = 1000.0;

    int users() const { return static_cast<int>(comm_power.rows()); }
    int n_sub() const { return static_cast<int>(comm_power.cols()); }

    /// Budget available to subcarrier n under the selected mode.
    static double subcarrier_budget(double p_max, int n_sub, PowerMode mode)
    {
        return mode == PowerMode::average ? p_max : p_max / n_sub;
    }

    /// Splits each subcarrier's budget: a fraction `jam_fraction` to
    /// jamming and the rest equally across users.
    static PowerAllocation uniform(int users, int n_sub, double p_max, double jam_fraction, PowerMode mode);

    void validate() const;
};

/// Unit-norm user beams (columns of an N_t x K matrix per subcarrier) and
/// one jamming beam per subcarrier, together with their powers.
struct BeamformingSolution {
    std::vector<CMat> user_beams;
    std::vector<CVec> fj_beams;
    PowerAllocation pa;

    int n_sub() const { return static_cast<int>(user_beams.size()); }
    int users() const { return user_beams.empty() ? 0 : static_cast<int>(user_beams.front().cols()); }
    int n_tx() const { return user_beams.empty() ? 0 : static_cast<int>(user_beams.front().rows()); }
};

} // namespace isacfj

#endif
