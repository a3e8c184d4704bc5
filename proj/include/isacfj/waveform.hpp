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

#ifndef ISACFJ_WAVEFORM_HPP
#define ISACFJ_WAVEFORM_HPP

#include "isacfj/beamforming.hpp"
#include "isacfj/channel.hpp"

namespace isacfj {

struct TransmitFrame {
    CMat x;                     ///< N_t x N, column n is x^(n)
    Eigen::MatrixXi messages;   ///< K x N message indices in {0..3}
    CMat symbols;               ///< K x N unit-energy QPSK symbols
    CVec jam;                   ///< N jamming samples, CN(0,1)
    int time_slots = 16;
};

/// Random messages and jamming samples; `x` is left empty until assemble_tx.
TransmitFrame draw_frame(int users, int n_sub, int time_slots, Stream& rng);

/// x^(n) = sum_k sqrt(gamma_k^(n)) f_k^(n) s_k^(n) + sqrt(zeta^(n)) v^(n) eta^(n).
TransmitFrame assemble_tx(const BeamformingSolution& beams, const PowerAllocation& pa, TransmitFrame frame);

/// Expected transmit power on subcarrier n.
double subcarrier_power(const BeamformingSolution& beams, const PowerAllocation& pa, int n);

bool power_feasible(const BeamformingSolution& beams, const PowerAllocation& pa, PowerMode mode,
                    double rel_tol = 1e-12);

/// Uniformly scales down the allocation (globally for the average mode,
/// per violating subcarrier otherwise) until the budget holds.
PowerAllocation enforce_power(const PowerAllocation& pa, const BeamformingSolution& beams, PowerMode mode);

/// Gray-coded unit-energy QPSK: bit 0 selects the sign of I, bit 1 of Q.
cplx qpsk_map(int msg);
int qpsk_demap(cplx y);

double q_function(double x);

/// Symbol error probability of QPSK over AWGN at the given linear Es/N0.
double qpsk_ser(double es_n0);

/// Y_s = alpha G X + N_s with N_s entries CN(0, sigma_s2).
CMat radar_echo(const ChannelRealization& ch, const CMat& g, const TransmitFrame& frame, Stream& rng);

struct ImpairmentParams {
    double sigma_pn2 = 0.0; ///< Wiener phase increment variance (rad^2)
    double eps_iq = 0.0;    ///< amplitude mismatch
    double dtheta_iq = 0.0; ///< phase mismatch (rad)
    cplx mu{1.0, 0.0};
    cplx nu{0.0, 0.0};

    static ImpairmentParams make(double sigma_pn2, double eps_iq, double dtheta_iq);
    bool ideal() const { return sigma_pn2 == 0.0 && eps_iq == 0.0 && dtheta_iq == 0.0; }
};

/// Discrete Wiener phase: phase[i] is the sum of i + 1 N(0, var) increments.
RVec wiener_phase(int len, double var, Stream& rng);

/// output[n] = exp(j phi[n]) input[n] with a single Wiener phase walk.
CVec apply_phase_noise(const CVec& signal, const ImpairmentParams& imp, Stream& rng);

/// Independent Wiener walk per row (one oscillator per antenna) along the columns.
CMat apply_phase_noise_rows(const CMat& signal, const ImpairmentParams& imp, Stream& rng);

/// x~ = mu x + nu conj(x), elementwise.
CVec apply_iq_imbalance(const CVec& x, const ImpairmentParams& imp);
CMat apply_iq_imbalance(const CMat& x, const ImpairmentParams& imp);

} // namespace isacfj

#endif
