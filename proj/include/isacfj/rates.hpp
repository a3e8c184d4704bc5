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

#ifndef ISACFJ_RATES_HPP
#define ISACFJ_RATES_HPP

#include <span>
#include <vector>

#include "isacfj/beamforming.hpp"
#include "isacfj/channel.hpp"
#include "isacfj/waveform.hpp"

namespace isacfj {

enum class LogBase { two, e };

struct RateOptions {
    double tau_bar = 1.0;
    LogBase log_base = LogBase::e;
};

/// Transmit vectors seen on one subcarrier, already scaled by the square
/// root of their power. `desired.col(k)` carries user k's symbol; `extra`
/// holds further data-bearing streams (e.g. I/Q images) that interfere
/// with every user; `jam` holds the jamming streams.
struct LinkVectors {
    CMat desired;
    CMat extra;
    CMat jam;
};

/// Ideal-hardware link vectors of subcarrier n.
LinkVectors link_vectors(const BeamformingSolution& beams, int n);

/// Link vectors under transmit I/Q imbalance followed by per-antenna phase
/// rotations `antenna_phase` (radians, length N_t).
LinkVectors impaired_link_vectors(const BeamformingSolution& beams, int n, const ImpairmentParams& imp,
                                  const RVec& antenna_phase);

/// tau_bar * log(1 + SINR_k) on the given K x N_t channel (rows h_k^H).
double user_rate(const CMat& h_users, const LinkVectors& link, int k, double sigma_c2, const RateOptions& opt = {});

/// tau_bar * log det(I + Q^-1 H_E^H a_k a_k^H H_E), Q the jamming-plus-noise covariance at Eve.
double eve_leakage(const CMat& h_eve, const LinkVectors& link, int k, double sigma_e2, const RateOptions& opt = {});

double user_rate(const ChannelRealization& ch, const BeamformingSolution& beams, int k, int n,
                 const RateOptions& opt = {});
double eve_leakage(const ChannelRealization& ch, const BeamformingSolution& beams, int k, int n,
                   const RateOptions& opt = {});

struct RateReport {
    RMat user_rates;  ///< K x N
    RMat eve_rates;   ///< K x N
    RMat secrecy;     ///< K x N, max(user - eve, 0)
    double sum_secrecy = 0.0;
    double tau_bar = 1.0;
    LogBase log_base = LogBase::e;

    /// Smallest per-user secrecy summed over subcarriers.
    double worst_user_secrecy() const;
    double sum_user_rate() const { return user_rates.sum(); }
};

/// Elementwise positive-part difference and its total.
RateReport secrecy_rate(const RMat& user_rates, const RMat& eve_rates, const RateOptions& opt = {});

struct EvalOptions {
    RateOptions rates;
    /// Subcarriers that carry data; others contribute zero rate. Empty = all.
    std::vector<bool> data_carriers;
    ImpairmentParams impairments;
    /// Per-antenna phase per subcarrier (N_t x N); empty = no phase noise.
    RMat antenna_phase;
};

/// Rates on the true user channels against the worst of several
/// eavesdropper channel sets (leakage maximized per user and subcarrier).
RateReport evaluate_rates(const ChannelRealization& ch, std::span<const std::vector<CMat>> eve_sets,
                          const BeamformingSolution& beams, const EvalOptions& opt = {});

/// Gradient of sum_k w_k R_k on one subcarrier with respect to the
/// unit-norm user beams and jamming beam (as d/dRe + j d/dIm), with the
/// powers held fixed. Rates in nats, scaled by tau_bar.
struct RateGradient {
    CMat d_user; ///< N_t x K
    CVec d_jam;  ///< N_t
};
RateGradient sum_rate_gradient(const CMat& h_users, const CMat& user_beams, const CVec& fj_beam,
                               const RVec& comm_power, double jam_power, double sigma_c2, const RVec& weights,
                               double tau_bar = 1.0);

} // namespace isacfj

#endif
