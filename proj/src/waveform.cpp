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

#include "isacfj/waveform.hpp"

#include <cmath>

namespace isacfj {

PowerAllocation PowerAllocation::uniform(int users, int n_sub, double p_max, double jam_fraction, PowerMode mode)
{
    if (users < 1 || n_sub < 1)
        throw Error("power allocation: user and subcarrier counts must be at least 1");
    if (!(p_max > 0.0))
        throw Error("power allocation: budget must be positive");
    if (!(jam_fraction >= 0.0 && jam_fraction <= 1.0))
        throw Error("power allocation: jamming fraction must lie in [0, 1]");
    const double budget = subcarrier_budget(p_max, n_sub, mode);
    PowerAllocation pa;
    pa.p_max = p_max;
    pa.comm_power = RMat::Constant(users, n_sub, (1.0 - jam_fraction) * budget / users);
    pa.jam_power = RVec::Constant(n_sub, jam_fraction * budget);
    return pa;
}

void PowerAllocation::validate() const
{
    if (!(p_max > 0.0))
        throw Error("power allocation: budget must be positive");
    if (jam_power.size() != comm_power.cols())
        throw Error("power allocation: jamming vector length differs from subcarrier count");
    if ((comm_power.array() < 0.0).any() || (jam_power.array() < 0.0).any() || !comm_power.allFinite() ||
        !jam_power.allFinite())
        throw Error("power allocation: entries must be finite and non-negative");
}

TransmitFrame draw_frame(int users, int n_sub, int time_slots, Stream& rng)
{
    TransmitFrame f;
    f.time_slots = time_slots;
    f.messages.resize(users, n_sub);
    f.symbols.resize(users, n_sub);
    for (int n = 0; n < n_sub; ++n)
        for (int k = 0; k < users; ++k) {
            f.messages(k, n) = static_cast<int>(rng.below(4));
            f.symbols(k, n) = qpsk_map(f.messages(k, n));
        }
    f.jam.resize(n_sub);
    for (int n = 0; n < n_sub; ++n)
        f.jam(n) = rng.cnormal();
    return f;
}

namespace {

void check_dims(const BeamformingSolution& beams, const PowerAllocation& pa)
{
    const int n_sub = beams.n_sub();
    if (n_sub == 0 || static_cast<int>(beams.fj_beams.size()) != n_sub)
        throw Error("beamforming: user and jamming beam lists differ in length");
    if (pa.n_sub() != n_sub || pa.users() != beams.users())
        throw Error("beamforming: power allocation shape does not match beams");
    for (int n = 0; n < n_sub; ++n)
        if (beams.user_beams[n].rows() != beams.n_tx() || beams.user_beams[n].cols() != beams.users() ||
            beams.fj_beams[n].size() != beams.n_tx())
            throw Error("beamforming: per-subcarrier beam shapes differ");
}

} // namespace

TransmitFrame assemble_tx(const BeamformingSolution& beams, const PowerAllocation& pa, TransmitFrame frame)
{
    check_dims(beams, pa);
    const int n_sub = beams.n_sub();
    const int users = beams.users();
    if (frame.symbols.rows() != users || frame.symbols.cols() != n_sub || frame.jam.size() != n_sub)
        throw Error("assemble_tx: frame shape does not match beams");
    frame.x = CMat::Zero(beams.n_tx(), n_sub);
    for (int n = 0; n < n_sub; ++n) {
        for (int k = 0; k < users; ++k)
            frame.x.col(n) += std::sqrt(pa.comm_power(k, n)) * frame.symbols(k, n) * beams.user_beams[n].col(k);
        frame.x.col(n) += std::sqrt(pa.jam_power(n)) * frame.jam(n) * beams.fj_beams[n];
    }
    return frame;
}

double subcarrier_power(const BeamformingSolution& beams, const PowerAllocation& pa, int n)
{
    double p = pa.jam_power(n) * beams.fj_beams[n].squaredNorm();
    for (int k = 0; k < pa.users(); ++k)
        p += pa.comm_power(k, n) * beams.user_beams[n].col(k).squaredNorm();
    return p;
}

bool power_feasible(const BeamformingSolution& beams, const PowerAllocation& pa, PowerMode mode, double rel_tol)
{
    check_dims(beams, pa);
    const int n_sub = pa.n_sub();
    if (mode == PowerMode::average) {
        double total = 0.0;
        for (int n = 0; n < n_sub; ++n)
            total += subcarrier_power(beams, pa, n);
        return total / n_sub <= pa.p_max * (1.0 + rel_tol);
    }
    const double budget = pa.p_max / n_sub;
    for (int n = 0; n < n_sub; ++n)
        if (subcarrier_power(beams, pa, n) > budget * (1.0 + rel_tol))
            return false;
    return true;
}

PowerAllocation enforce_power(const PowerAllocation& pa, const BeamformingSolution& beams, PowerMode mode)
{
    pa.validate();
    check_dims(beams, pa);
    PowerAllocation out = pa;
    const int n_sub = pa.n_sub();
    if (mode == PowerMode::average) {
        double total = 0.0;
        for (int n = 0; n < n_sub; ++n)
            total += subcarrier_power(beams, pa, n);
        const double avg = total / n_sub;
        if (avg > pa.p_max) {
            const double s = pa.p_max / avg;
            out.comm_power *= s;
            out.jam_power *= s;
        }
        return out;
    }
    const double budget = pa.p_max / n_sub;
    for (int n = 0; n < n_sub; ++n) {
        const double p = subcarrier_power(beams, pa, n);
        if (p > budget) {
            const double s = budget / p;
            out.comm_power.col(n) *= s;
            out.jam_power(n) *= s;
        }
    }
    return out;
}

cplx qpsk_map(int msg)
{
    if (msg < 0 || msg > 3)
        throw Error("qpsk_map: message index must lie in {0..3}");
    const double a = 1.0 / std::sqrt(2.0);
    return {(msg & 1) ? -a : a, (msg & 2) ? -a : a};
}

int qpsk_demap(cplx y)
{
    return (y.real() < 0.0 ? 1 : 0) | (y.imag() < 0.0 ? 2 : 0);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qpsk_ser(double es_n0)
{
    const double q = q_function(std::sqrt(es_n0));
    return 2.0 * q - q * q;
}

CMat radar_echo(const ChannelRealization& ch, const CMat& g, const TransmitFrame& frame, Stream& rng)
{
    if (g.cols() != frame.x.rows())
        throw Error("radar_echo: steering matrix does not match transmit dimension");
    return ch.alpha * g * frame.x + random_cn(static_cast<int>(g.rows()), static_cast<int>(frame.x.cols()), rng,
                                              ch.sigma_s2);
}

ImpairmentParams ImpairmentParams::make(double sigma_pn2, double eps_iq, double dtheta_iq)
{
    if (!(sigma_pn2 >= 0.0))
        throw Error("impairments: phase-noise variance must be non-negative");
    ImpairmentParams p;
    p.sigma_pn2 = sigma_pn2;
    p.eps_iq = eps_iq;
    p.dtheta_iq = dtheta_iq;
    const double c = std::cos(dtheta_iq / 2.0);
    const double s = std::sin(dtheta_iq / 2.0);
    p.mu = {c, eps_iq * s};
    p.nu = {eps_iq * c, -s};
    return p;
}

RVec wiener_phase(int len, double var, Stream& rng)
{
    RVec phase(len);
    double acc = 0.0;
    const double sd = std::sqrt(var);
    for (int i = 0; i < len; ++i) {
        acc += sd * rng.normal();
        phase(i) = acc;
    }
    return phase;
}

CVec apply_phase_noise(const CVec& signal, const ImpairmentParams& imp, Stream& rng)
{
    if (imp.sigma_pn2 == 0.0)
        return signal;
    const RVec phase = wiener_phase(static_cast<int>(signal.size()), imp.sigma_pn2, rng);
    CVec out(signal.size());
    for (Eigen::Index i = 0; i < signal.size(); ++i)
        out(i) = std::polar(1.0, phase(i)) * signal(i);
    return out;
}

CMat apply_phase_noise_rows(const CMat& signal, const ImpairmentParams& imp, Stream& rng)
{
    if (imp.sigma_pn2 == 0.0)
        return signal;
    CMat out(signal.rows(), signal.cols());
    for (Eigen::Index r = 0; r < signal.rows(); ++r) {
        const RVec phase = wiener_phase(static_cast<int>(signal.cols()), imp.sigma_pn2, rng);
        for (Eigen::Index c = 0; c < signal.cols(); ++c)
            out(r, c) = std::polar(1.0, phase(c)) * signal(r, c);
    }
    return out;
}

CVec apply_iq_imbalance(const CVec& x, const ImpairmentParams& imp)
{
    return imp.mu * x + imp.nu * x.conjugate();
}

CMat apply_iq_imbalance(const CMat& x, const ImpairmentParams& imp)
{
    return imp.mu * x + imp.nu * x.conjugate();
}

} // namespace isacfj
