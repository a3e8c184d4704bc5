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

#include "isacfj/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace isacfj {

namespace {

double to_base(double nats, const RateOptions& opt)
{
    const double r = opt.log_base == LogBase::two ? nats / std::numbers::ln2 : nats;
    return opt.tau_bar * r;
}

} // namespace

LinkVectors link_vectors(const BeamformingSolution& beams, int n)
{
    const auto& pa = beams.pa;
    LinkVectors lv;
    lv.desired = beams.user_beams[n];
    for (int k = 0; k < beams.users(); ++k)
        lv.desired.col(k) *= std::sqrt(pa.comm_power(k, n));
    lv.extra.resize(beams.n_tx(), 0);
    lv.jam = std::sqrt(pa.jam_power(n)) * beams.fj_beams[n];
    return lv;
}

LinkVectors impaired_link_vectors(const BeamformingSolution& beams, int n, const ImpairmentParams& imp,
                                  const RVec& antenna_phase)
{
    const LinkVectors ideal = link_vectors(beams, n);
    const int nt = beams.n_tx();
    CVec rot = CVec::Ones(nt);
    if (antenna_phase.size() == nt)
        for (int i = 0; i < nt; ++i)
            rot(i) = std::polar(1.0, antenna_phase(i));
    const auto d = rot.asDiagonal();

    LinkVectors lv;
    lv.desired = d * (imp.mu * ideal.desired);
    if (imp.nu != cplx(0.0, 0.0)) {
        lv.extra = d * (imp.nu * ideal.desired.conjugate());
        lv.jam.resize(nt, 2);
        lv.jam.col(0) = d * (imp.mu * ideal.jam.col(0));
        lv.jam.col(1) = d * (imp.nu * ideal.jam.col(0).conjugate());
    } else {
        lv.extra.resize(nt, 0);
        lv.jam = d * (imp.mu * ideal.jam);
    }
    return lv;
}

double user_rate(const CMat& h_users, const LinkVectors& link, int k, double sigma_c2, const RateOptions& opt)
{
    if (k < 0 || k >= h_users.rows() || k >= link.desired.cols())
        throw Error("user_rate: user index out of range");
    if (!(sigma_c2 > 0.0))
        throw Error("user_rate: noise power must be positive");
    const auto h = h_users.row(k);
    const double signal = std::norm((h * link.desired.col(k))(0));
    double interference = sigma_c2;
    for (Eigen::Index j = 0; j < link.desired.cols(); ++j)
        if (j != k)
            interference += std::norm((h * link.desired.col(j))(0));
    for (Eigen::Index j = 0; j < link.extra.cols(); ++j)
        interference += std::norm((h * link.extra.col(j))(0));
    for (Eigen::Index j = 0; j < link.jam.cols(); ++j)
        interference += std::norm((h * link.jam.col(j))(0));
    return to_base(std::log1p(signal / interference), opt);
}

double eve_leakage(const CMat& h_eve, const LinkVectors& link, int k, double sigma_e2, const RateOptions& opt)
{
    if (!(sigma_e2 > 0.0))
        throw Error("eve_leakage: noise power must be positive");
    const Eigen::Index ne = h_eve.cols();
    const CMat hj = h_eve.adjoint() * link.jam;
    const CMat q = hj * hj.adjoint() + sigma_e2 * CMat::Identity(ne, ne);
    const CVec g = h_eve.adjoint() * link.desired.col(k);
    const double nats = logdet_hermitian(q + g * g.adjoint()) - logdet_hermitian(q);
    return to_base(std::max(nats, 0.0), opt);
}

double user_rate(const ChannelRealization& ch, const BeamformingSolution& beams, int k, int n, const RateOptions& opt)
{
    return user_rate(ch.h_users.at(n), link_vectors(beams, n), k, ch.sigma_c2, opt);
}

double eve_leakage(const ChannelRealization& ch, const BeamformingSolution& beams, int k, int n,
                   const RateOptions& opt)
{
    return eve_leakage(ch.h_eve.at(n), link_vectors(beams, n), k, ch.sigma_e2, opt);
}

double RateReport::worst_user_secrecy() const
{
    if (secrecy.rows() == 0)
        return 0.0;
    return secrecy.rowwise().sum().minCoeff();
}

RateReport secrecy_rate(const RMat& user_rates, const RMat& eve_rates, const RateOptions& opt)
{
    if (user_rates.rows() != eve_rates.rows() || user_rates.cols() != eve_rates.cols())
        throw Error("secrecy_rate: user and eavesdropper rate shapes differ");
    RateReport r;
    r.user_rates = user_rates;
    r.eve_rates = eve_rates;
    r.secrecy = (user_rates - eve_rates).cwiseMax(0.0);
    // Fixed summation order keeps the total reproducible.
    double total = 0.0;
    for (Eigen::Index n = 0; n < r.secrecy.cols(); ++n)
        for (Eigen::Index k = 0; k < r.secrecy.rows(); ++k)
            total += r.secrecy(k, n);
    r.sum_secrecy = total;
    r.tau_bar = opt.tau_bar;
    r.log_base = opt.log_base;
    return r;
}

RateReport evaluate_rates(const ChannelRealization& ch, std::span<const std::vector<CMat>> eve_sets,
                          const BeamformingSolution& beams, const EvalOptions& opt)
{
    const int n_sub = beams.n_sub();
    const int users = beams.users();
    if (ch.n_sub() != n_sub)
        throw Error("evaluate_rates: channel and beams differ in subcarrier count");
    if (!opt.data_carriers.empty() && static_cast<int>(opt.data_carriers.size()) != n_sub)
        throw Error("evaluate_rates: data-carrier mask has the wrong length");

    RMat ur = RMat::Zero(users, n_sub);
    RMat er = RMat::Zero(users, n_sub);
    const bool impaired = !opt.impairments.ideal() || opt.antenna_phase.size() > 0;
    for (int n = 0; n < n_sub; ++n) {
        if (!opt.data_carriers.empty() && !opt.data_carriers[n])
            continue;
        LinkVectors lv;
        if (impaired) {
            const RVec ph = opt.antenna_phase.size() > 0 ? RVec(opt.antenna_phase.col(n)) : RVec();
            lv = impaired_link_vectors(beams, n, opt.impairments, ph);
        } else {
            lv = link_vectors(beams, n);
        }
        for (int k = 0; k < users; ++k) {
            ur(k, n) = user_rate(ch.h_users[n], lv, k, ch.sigma_c2, opt.rates);
            double worst = 0.0;
            if (eve_sets.empty())
                worst = eve_leakage(ch.h_eve[n], lv, k, ch.sigma_e2, opt.rates);
            for (const auto& set : eve_sets)
                worst = std::max(worst, eve_leakage(set.at(n), lv, k, ch.sigma_e2, opt.rates));
            er(k, n) = worst;
        }
    }
    return secrecy_rate(ur, er, opt.rates);
}

RateGradient sum_rate_gradient(const CMat& h_users, const CMat& user_beams, const CVec& fj_beam,
                               const RVec& comm_power, double jam_power, double sigma_c2, const RVec& weights,
                               double tau_bar)
{
    const Eigen::Index users = user_beams.cols();
    RateGradient g;
    g.d_user = CMat::Zero(user_beams.rows(), users);
    g.d_jam = CVec::Zero(fj_beam.size());
    for (Eigen::Index k = 0; k < users; ++k) {
        const CVec h = h_users.row(k).adjoint();
        const CVec proj_f = h_users.row(k) * user_beams; // h_k^H f_j for all j
        const cplx proj_v = (h_users.row(k) * fj_beam)(0);
        double total = sigma_c2 + jam_power * std::norm(proj_v);
        for (Eigen::Index j = 0; j < users; ++j)
            total += comm_power(j) * std::norm(proj_f(j));
        const double interf = total - comm_power(k) * std::norm(proj_f(k));
        const double w = tau_bar * weights(k);
        for (Eigen::Index j = 0; j < users; ++j) {
            const double coef = 1.0 / total - (j == k ? 0.0 : 1.0 / interf);
            g.d_user.col(j) += w * 2.0 * comm_power(j) * coef * proj_f(j) * h;
        }
        g.d_jam += w * 2.0 * jam_power * (1.0 / total - 1.0 / interf) * proj_v * h;
    }
    return g;
}

} // namespace isacfj
