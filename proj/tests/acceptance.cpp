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

// Acceptance gates. Usage: acceptance --criterion <id> | --all
// Prints one "criterion <id>: PASS|FAIL ..." line per gate.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "isacfj/eval.hpp"
#include "isacfj/waveform.hpp"
#include "support.hpp"

using namespace isacfj;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

SensingModel bistatic_4x4()
{
    return SensingModel::make(ArrayGeometry::make(4, 4, 2), SteeringMode::bistatic, deg_to_rad(10.0),
                              deg_to_rad(15.0), 1.0);
}

SensingModel planar_8()
{
    return SensingModel::make(ArrayGeometry::make(8, 4, 2), SteeringMode::planar_kronecker, deg_to_rad(10.0),
                              deg_to_rad(15.0), 1.0);
}

ScenarioConfig desk_scenario(int n_sub, double p_max_db)
{
    ScenarioConfig sc;
    sc.geom = ArrayGeometry::make(8, 4, 2);
    sc.n_sub = n_sub;
    sc.p_max_db = p_max_db;
    sc.bler_blocks = 0;
    return sc;
}

TrainConfig sweep_training()
{
    TrainConfig cfg;
    cfg.epochs_stage1 = 30;
    return cfg;
}

// ------------------------------------------------------------------------

Outcome nonparametric_fim()
{
    const SensingModel sm = bistatic_4x4();
    const CVec v = balanced_probe_beam(sm);
    const double zeta = 160.0 / fim_closed_form(sm, v, 1.0, Angle::theta);
    const PerturbationSet ps = PerturbationSet::structured(0.05, 4);
    DiscriminatorConfig dc;
    dc.samples = 5000;
    const FimValidationReport rep = fim_validate(sm, v, zeta, ps, dc, 5, 1, 0.15);
    const bool ok = rep.rel_err_theta <= 0.15 && rep.rel_err_phi <= 0.15;
    return {ok, fmt("mean relative error theta %.4f phi %.4f over 5 seeds (limit 0.15); closed form J %.1f %.1f",
                    rep.rel_err_theta, rep.rel_err_phi, rep.closed_form(0, 0), rep.closed_form(1, 1))};
}

Outcome unitary_invariance()
{
    const SensingModel sm = bistatic_4x4();
    Stream rng(derive_seed(2, 0));
    double worst_inv = 0.0, worst_form = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int t = 4 + static_cast<int>(rng.below(13));
        const CMat s = random_cn(4, t, rng);
        const CMat u = random_unitary(t, rng);
        const CMat su = s * u;
        for (Angle w : {Angle::theta, Angle::phi}) {
            const double j = fim_covariance_form(sm, std::span(&s, 1), w);
            const double ju = fim_covariance_form(sm, std::span(&su, 1), w);
            const double jf = fim_frobenius_form(sm, std::span(&s, 1), w);
            worst_inv = std::max(worst_inv, std::abs(ju - j) / j);
            worst_form = std::max(worst_form, std::abs(jf - j) / j);
        }
    }
    const bool ok = worst_inv <= 1e-9 && worst_form <= 1e-10;
    return {ok, fmt("max |J(SU)-J(S)|/J(S) %.2e (limit 1e-9), trace vs Frobenius %.2e (limit 1e-10)", worst_inv,
                    worst_form)};
}

Outcome crlb_linearity()
{
    const SensingModel sm = planar_8();
    Stream rng(derive_seed(3, 0));
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const CVec v = random_cn(8, 1, rng).col(0).normalized();
        const double zeta = 0.1 + 100.0 * rng.uniform();
        for (CrlbConvention conv : {CrlbConvention::scalar, CrlbConvention::matrix}) {
            const FimEstimate a = fim_estimate_closed_form(sm, v, zeta, conv);
            const FimEstimate b = fim_estimate_closed_form(sm, v, 2.0 * zeta, conv);
            worst = std::max(worst, std::abs(b.crlb_theta - a.crlb_theta / 2) / (a.crlb_theta / 2));
            worst = std::max(worst, std::abs(b.crlb_phi - a.crlb_phi / 2) / (a.crlb_phi / 2));
        }
    }

    // Candidates just above and below the -30 dB threshold.
    const double c0 = from_db(-30.0);
    TrainConfig cfg;
    cfg.crlb0_theta = cfg.crlb0_phi = c0;
    const FimFunction fim = make_fim_function(cfg, sm);
    int gate_errors = 0, cases = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const CVec v = random_cn(8, 1, rng).col(0).normalized();
        const double z = min_jam_power(sm, v, c0, c0);
        const FjCandidate pass = evaluate_candidate(v, 1.01 * z, fim, c0, c0, rng);
        const FjCandidate fail = evaluate_candidate(v, 0.99 * z, fim, c0, c0, rng);
        gate_errors += !pass.feasible + fail.feasible;
        gate_errors += !(to_db(std::max(pass.fim.crlb_theta, pass.fim.crlb_phi)) < -30.0);
        gate_errors += !(to_db(std::max(fail.fim.crlb_theta, fail.fim.crlb_phi)) > -30.0);
        cases += 2;
    }

    // Stage 2 with only violating candidates accepts nothing.
    Stream ch_rng(derive_seed(3, 1));
    const CMat h = random_cn(2, 8, ch_rng);
    const CVec v0 = random_cn(8, 1, ch_rng).col(0);
    const double z_low = 0.5 * min_jam_power(sm, null_space(h).col(0), c0, c0);
    FimFunction always_fail = [&](const CVec& v, double zeta, Stream& r) {
        FimEstimate e = fim(v, zeta, r);
        e.crlb_theta = std::max(e.crlb_theta, 2.0 * c0);
        return e;
    };
    const Stage2Result s2 = stage2_fj_optimization(cfg, h, v0, z_low, sm, always_fail, ch_rng);
    const bool stage2_ok = s2.accepted == 0 && !s2.feasible;

    const bool ok = worst <= 1e-12 && gate_errors == 0 && stage2_ok;
    return {ok, fmt("max relative deviation of CRLB(2 zeta) from CRLB(zeta)/2 %.2e (limit 1e-12); gate errors "
                    "%d of %d candidates; all-violating stage 2 accepted %d",
                    worst, gate_errors, cases, s2.accepted)};
}

Outcome null_space_integrity()
{
    const SensingModel sm = planar_8();
    TrainConfig cfg;
    cfg.iters_stage2 = 5;
    cfg.candidate_count = 4;
    const FimFunction fim = make_fim_function(cfg, sm);
    double worst_leak = 0.0, worst_rate = 0.0;
    long long audited = 0;
    for (int t = 0; t < 1000; ++t) {
        Stream rng(derive_seed(4, static_cast<std::uint64_t>(t)));
        ChannelRealization ch = gen_rayleigh(ArrayGeometry::make(8, 4, 2), 2, 1, NoiseSpec{}, rng);
        const CsiEstimate csi = apply_csi_error(ch, 0.1 * (t % 3), rng);
        const CMat& hh = csi.h_hat[0];
        const double hn = hh.norm();

        std::vector<CVec> accepted;
        FimFunction spy = [&](const CVec& v, double zeta, Stream& r) {
            FimEstimate e = fim(v, zeta, r);
            if (crlb_accept(e.crlb_theta, e.crlb_phi, cfg.crlb0_theta, cfg.crlb0_phi))
                accepted.push_back(v);
            return e;
        };
        const CVec v0 = random_cn(8, 1, rng).col(0);
        const double zeta = (0.5 + rng.uniform()) * min_jam_power(sm, null_space(hh).col(0), cfg.crlb0_theta,
                                                                  cfg.crlb0_phi);
        const Stage2Result s2 = stage2_fj_optimization(cfg, hh, v0, zeta, sm, spy, rng);
        accepted.push_back(s2.v);
        RVec out(3 * 16);
        for (int i = 0; i < out.size(); ++i)
            out(i) = rng.normal();
        accepted.push_back(decode_beams(out, null_space(hh), 2, 8).fj_beam);
        for (const auto& v : accepted)
            worst_leak = std::max(worst_leak, (hh * v).norm() / hn);
        audited += static_cast<long long>(accepted.size());

        // Jamming in the true null space leaves the user rates untouched.
        BeamformingSolution on;
        CMat w = ch.h_users[0].adjoint();
        w.colwise().normalize();
        const CMat ns = null_space(ch.h_users[0]);
        on.user_beams = {w};
        on.fj_beams = {(ns * random_cn(static_cast<int>(ns.cols()), 1, rng)).col(0).normalized()};
        on.pa = PowerAllocation::uniform(2, 1, 1000.0, 0.3, PowerMode::average);
        BeamformingSolution off = on;
        off.pa.jam_power.setZero();
        for (int k = 0; k < 2; ++k)
            worst_rate = std::max(worst_rate, std::abs(user_rate(ch, on, k, 0) - user_rate(ch, off, k, 0)));
    }
    const bool ok = worst_leak <= 1e-8 && worst_rate <= 1e-10;
    return {ok, fmt("%lld audited beams over 1000 trials, max ||H v||/||H||_F %.2e (limit 1e-8); max user-rate "
                    "change with jamming on/off %.2e (limit 1e-10)",
                    audited, worst_leak, worst_rate)};
}

Outcome bler()
{
    std::string detail;
    bool ok = true;
    // Single user, matched beam: per-symbol Es/N0 = |h|^2 p / sigma2.
    Stream rng(derive_seed(5, 0));
    ChannelRealization ch = gen_rayleigh(ArrayGeometry::make(4, 4, 2), 1, 1, NoiseSpec{}, rng);
    BeamformingSolution b;
    b.user_beams = {ch.h_users[0].adjoint() / ch.h_users[0].norm()};
    b.fj_beams = {CVec::Zero(4)};
    b.pa.comm_power = RMat::Constant(1, 1, 1.0);
    b.pa.jam_power = RVec::Zero(1);
    b.pa.p_max = 1.0;
    const double gain = ch.h_users[0].squaredNorm();
    const int len = 10, blocks = 100000; // 10^6 symbols per point
    for (double es_db : {0.0, 5.0, 10.0}) {
        const double esn0 = from_db(es_db);
        const double p = 1.0 - std::pow(1.0 - qpsk_ser(esn0), len);
        Stream r = rng.substream(static_cast<std::uint64_t>(es_db * 10));
        const BlerResult res = bler_montecarlo(ch, b, b.pa, to_db(esn0 / gain), len, blocks, r);
        const double sigma = std::sqrt(p * (1 - p) / blocks);
        const bool pt = std::abs(res.user(0) - p) <= 3 * sigma;
        ok = ok && pt;
        detail += fmt("Es/N0 %g dB: %.5f vs %.5f (3 sigma %.5f); ", es_db, res.user(0), p, 3 * sigma);
    }

    // Two users, ZF beams, half the power on a true-null-space jamming beam.
    Stream r2(derive_seed(5, 1));
    const int n_sub = 4;
    ChannelRealization c2 = gen_rayleigh(ArrayGeometry::make(8, 4, 2), 2, n_sub, NoiseSpec{}, r2);
    BeamformingSolution on;
    for (int n = 0; n < n_sub; ++n) {
        const CMat& h = c2.h_users[static_cast<std::size_t>(n)];
        CMat w = h.adjoint() * (h * h.adjoint()).inverse();
        w.colwise().normalize();
        on.user_beams.push_back(w);
        const CMat ns = null_space(h);
        on.fj_beams.push_back((ns * random_cn(static_cast<int>(ns.cols()), 1, r2)).col(0).normalized());
    }
    on.pa = PowerAllocation::uniform(2, n_sub, 1.0, 0.5, PowerMode::average);
    BeamformingSolution off = on;
    off.pa.jam_power.setZero();
    const int trials = 5000;
    Stream ra = r2.substream(1), rb = r2.substream(2);
    const BlerResult bon = bler_montecarlo(c2, on, on.pa, 8.0, 64, trials, ra);
    const BlerResult boff = bler_montecarlo(c2, off, off.pa, 8.0, 64, trials, rb);
    const double n = static_cast<double>(bon.blocks);
    bool users_ok = true;
    for (int k = 0; k < 2; ++k) {
        const double p1 = bon.user(k), p0 = boff.user(k);
        const double se = std::sqrt(p1 * (1 - p1) / n + p0 * (1 - p0) / n);
        users_ok = users_ok && std::abs(p1 - p0) < 2 * se;
        detail += fmt("user %d BLER on %.4f off %.4f (2 SE %.4f); ", k, p1, p0, 2 * se);
    }
    const bool eve_ok = bon.eve >= 0.95;
    detail += fmt("Eve LMMSE BLER on %.4f off %.4f (limit 0.95)", bon.eve, boff.eve);
    ok = ok && users_ok && eve_ok;
    return {ok, detail};
}

Outcome fj_beats_no_fj()
{
    const ScenarioConfig sc = desk_scenario(4, 20.0);
    const TrainConfig cfg = sweep_training();
    int wins = 0;
    const int draws = 50;
    for (int t = 0; t < draws; ++t) {
        Stream rng(derive_seed(61, static_cast<std::uint64_t>(t)));
        Stream a = rng.substream(1);
        const Scenario s = build_scenario(sc, a);
        Stream b = rng.substream(2);
        const Stage1Result s1 = stage1_comm_training(cfg, s.inst, b);
        Stream c = rng.substream(3);
        const TrainResult tr = finish_training(cfg, s.inst, s1, c);
        const double on = median(secrecy_per_eve_set(s, tr.beams));
        const double off = median(secrecy_per_eve_set(s, jamming_off(tr.beams, sc.power_mode)));
        wins += on > off;
    }
    const double frac = static_cast<double>(wins) / draws;
    return {frac >= 0.9, fmt("jamming on wins %d of %d paired draws (%.0f%%, limit 90%%)", wins, draws, 100 * frac)};
}

std::string means(const ExperimentResult& r, bool worst_user)
{
    std::string s;
    for (const auto& p : r.points) {
        const MetricSummary& m = worst_user ? p.worst_user_secrecy : p.sum_secrecy;
        s += fmt("%g: %.4f +- %.4f; ", p.axis_value, m.mean, m.std_error);
    }
    return s;
}

bool non_increasing(const ExperimentResult& r, bool worst_user)
{
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        const auto& a = worst_user ? r.points[i - 1].worst_user_secrecy : r.points[i - 1].sum_secrecy;
        const auto& b = worst_user ? r.points[i].worst_user_secrecy : r.points[i].sum_secrecy;
        if (b.mean > a.mean)
            return false;
    }
    return true;
}

Outcome secrecy_vs_csi_error()
{
    SweepSpec spec;
    spec.axis = SweepAxis::rho_csi;
    spec.points = {0.0, 0.05, 0.1, 0.2};
    spec.trials = 200;
    spec.seed = 62;
    const ExperimentResult r = run_sweep(spec, desk_scenario(4, 20.0), sweep_training());
    return {non_increasing(r, false), "mean sum secrecy by rho: " + means(r, false)};
}

Outcome secrecy_vs_crlb_budget()
{
    SweepSpec spec;
    spec.axis = SweepAxis::crlb_budget_db;
    spec.points = {-20.0, -25.0, -30.0, -35.0};
    spec.trials = 100;
    spec.seed = 63;
    const ExperimentResult r = crlb_secrecy_tradeoff(spec, desk_scenario(4, 20.0), sweep_training());
    // A tighter budget may not beat a looser one by more than two standard
    // errors of the paired per-trial difference.
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.points.size(); ++i)
        for (std::size_t j = i + 1; j < r.points.size(); ++j) {
            std::vector<double> d;
            for (std::size_t t = 0; t < r.points[i].trials.size(); ++t)
                d.push_back(r.points[j].trials[t].sum_secrecy - r.points[i].trials[t].sum_secrecy);
            const MetricSummary m = MetricSummary::from(d);
            worst = std::max(worst, m.mean / std::max(m.std_error, 1e-300));
            ok = ok && m.mean <= 2.0 * m.std_error;
        }
    return {ok, "mean sum secrecy by CRLB budget (dB): " + means(r, false) +
                    fmt("largest tighter-minus-looser gain %.2f paired SE (limit 2)", worst)};
}

Outcome secrecy_vs_subcarriers()
{
    SweepSpec spec;
    spec.axis = SweepAxis::n_subcarriers;
    spec.points = {1.0, 16.0, 32.0, 64.0};
    spec.trials = 10;
    spec.seed = 64;
    ScenarioConfig sc = desk_scenario(1, 30.0);
    sc.power_mode = PowerMode::per_subcarrier;
    const ExperimentResult r = run_sweep(spec, sc, sweep_training());
    bool ok = true;
    for (std::size_t i = 1; i < r.points.size(); ++i)
        ok = ok && r.points[i].worst_user_secrecy.mean >= r.points[i - 1].worst_user_secrecy.mean;
    return {ok, "mean worst-user secrecy by N at fixed total power: " + means(r, true)};
}

Outcome convergence()
{
    const auto t0 = std::chrono::steady_clock::now();
    Stream rng(derive_seed(7, 0));
    ProblemInstance inst;
    inst.geom = ArrayGeometry::make(8, 4, 2);
    inst.ch = gen_rayleigh(inst.geom, 2, 16, NoiseSpec{}, rng);
    inst.csi = apply_csi_error(inst.ch, 0.0, rng);
    inst.angles = AngleState::exact(deg_to_rad(10.0), deg_to_rad(15.0));
    inst.pa = PowerAllocation::uniform(2, 16, from_db(30.0), 0.2, PowerMode::average);
    TrainConfig cfg;
    cfg.epochs_stage1 = 200;
    Stream train = rng.substream(1);
    const Stage1Result s1 = stage1_comm_training(cfg, inst, train);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const int window = 10;
    int increases = 0;
    double prev = std::numeric_limits<double>::infinity(), max_inc = 0.0;
    for (std::size_t t = window - 1; t < s1.log.size(); ++t) {
        double s = 0.0;
        for (int i = 0; i < window; ++i)
            s += s1.log[t - i].loss;
        s /= window;
        if (s > prev) {
            ++increases;
            max_inc = std::max(max_inc, s - prev);
        }
        prev = s;
    }
    const double s_end = s1.log.back().sum_secrecy;
    const double s_50 = s1.log[s1.log.size() - 51].sum_secrecy;
    const double change = std::abs(s_end - s_50) / std::abs(s_end);
    const bool ok = increases == 0 && change < 0.01 && secs <= 600.0;
    return {ok, fmt("smoothed loss increases %d (largest %.2e), secrecy change over final 50 epochs %.3f%% (limit "
                    "1%%), %zu epochs in %.1f s (limit 600 s)",
                    increases, max_inc, 100 * change, s1.log.size(), secs)};
}

Outcome tensor_train()
{
    Stream rng(derive_seed(8, 0));
    const RMat w = testing::random_matrix(256, 256, rng);
    const auto full = nn::tt_from_dense(w, {16, 16}, {16, 16});
    const double err = (nn::tt_materialize(full) - w).norm() / w.norm();
    const auto r8 = nn::tt_from_dense(w, {16, 16}, {16, 16}, {8});
    std::size_t formula = 0;
    for (std::size_t k = 0; k < r8.out_modes.size(); ++k)
        formula += static_cast<std::size_t>(r8.ranks[k] * r8.out_modes[k] * r8.in_modes[k] * r8.ranks[k + 1]);
    const std::size_t count8 = nn::tt_param_count(r8);

    Stream erng(derive_seed(8, 1));
    auto enc = BeamEncoder::make(EncoderKind::dtte, 16, 2, from_db(30.0), erng, 8);
    const std::size_t enc_count = enc.param_count();

    int quant_bad = 0;
    for (int i = 0; i < 100000; ++i) {
        const double delta = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
        const double g = 10.0 * rng.normal();
        const double q = nn::quantize_value(g, delta);
        quant_bad += !(std::abs(q - g) <= delta / 2 * (1 + 1e-12)) || q != delta * std::round(g / delta);
    }
    const bool ok = err <= 1e-10 && count8 == 4096 && formula == 4096 && enc_count == 28371 && quant_bad == 0;
    return {ok, fmt("full-rank relative error %.2e (limit 1e-10); rank-8 parameters %zu (formula %zu, expected "
                    "4096); DTTE encoder parameters %zu (expected 28371); quantization violations %d of 100000",
                    err, count8, formula, enc_count, quant_bad)};
}

Outcome gradients()
{
    Stream rng(derive_seed(9, 0));
    auto suite = testing::gradient_suite(rng);
    bool ok = true;
    std::string detail;
    for (auto& e : suite) {
        const auto r = testing::check_entry(e, rng, 64);
        const bool pass = r.max_rel_err <= 1e-4 && r.probes >= 64;
        ok = ok && pass;
        detail += fmt("%s %.1e/%d; ", e.name.c_str(), r.max_rel_err, r.probes);
    }
    return {ok, "max relative error / probes per layer (limit 1e-4, 64): " + detail};
}

Outcome impairments()
{
    // Ideal parameters are exact identities.
    Stream rng(derive_seed(10, 0));
    const ImpairmentParams ideal = ImpairmentParams::make(0.0, 0.0, 0.0);
    const CMat x = random_cn(8, 32, rng);
    Stream pn = rng.substream(1);
    bool identity = ideal.mu == cplx(1.0, 0.0) && ideal.nu == cplx(0.0, 0.0) && apply_iq_imbalance(x, ideal) == x &&
                    apply_phase_noise_rows(x, ideal, pn) == x &&
                    apply_phase_noise(CVec(x.col(0)), ideal, pn) == CVec(x.col(0));
    {
        ChannelRealization ch = gen_rayleigh(ArrayGeometry::make(8, 4, 2), 2, 1, NoiseSpec{}, rng);
        BeamformingSolution b;
        b.user_beams = {random_cn(8, 2, rng).colwise().normalized()};
        b.fj_beams = {random_cn(8, 1, rng).col(0).normalized()};
        b.pa = PowerAllocation::uniform(2, 1, 100.0, 0.2, PowerMode::average);
        const LinkVectors a = link_vectors(b, 0);
        const LinkVectors c = impaired_link_vectors(b, 0, ideal, RVec::Zero(8));
        identity = identity && a.desired == c.desired && a.jam == c.jam;
        for (int k = 0; k < 2; ++k)
            identity = identity && user_rate(ch.h_users[0], a, k, 1.0) == user_rate(ch.h_users[0], c, k, 1.0);
    }

    // Robust against non-robust training on paired draws.
    const ScenarioConfig sc = desk_scenario(4, 30.0);
    ScenarioConfig noisy = sc;
    noisy.impairments.sigma_pn2 = 0.2;
    const TrainConfig plain = sweep_training();
    TrainConfig robust = plain;
    robust.robust_pn_variance = 0.2;
    double deg_plain = 0.0, deg_robust = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Stream r(derive_seed(11, 1, static_cast<std::uint64_t>(t)));
        Stream a = r.substream(1);
        const Scenario s = build_scenario(sc, a);
        auto degradation = [&](const TrainConfig& cfg) {
            Stream b = r.substream(2);
            const Stage1Result s1 = stage1_comm_training(cfg, s.inst, b);
            Stream c = r.substream(3);
            const TrainResult tr = finish_training(cfg, s.inst, s1, c);
            Stream e1 = r.substream(4), e2 = r.substream(4);
            return evaluate_solution(sc, s, tr, e1).sum_secrecy - evaluate_solution(noisy, s, tr, e2).sum_secrecy;
        };
        deg_plain += degradation(plain) / trials;
        deg_robust += degradation(robust) / trials;
    }
    const bool ok = identity && deg_robust < deg_plain;
    return {ok, fmt("ideal impairments exact identities: %s; mean secrecy degradation at phase-noise variance 0.2 "
                    "over %d paired trials: robust %.4f, non-robust %.4f",
                    identity ? "yes" : "no", trials, deg_robust, deg_plain)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria()
{
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
        {"1", nonparametric_fim},        {"2", unitary_invariance},     {"3", crlb_linearity},
        {"4", null_space_integrity},     {"5", bler},                   {"6a", fj_beats_no_fj},
        {"6b", secrecy_vs_csi_error},    {"6c", secrecy_vs_crlb_budget}, {"6d", secrecy_vs_subcarriers},
        {"7", convergence},              {"8", tensor_train},           {"9", gradients},
        {"10", impairments},
    };
    return list;
}

bool run(const std::string& id, const std::function<Outcome()>& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %s: %s %s [%.1f s]\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    return o.pass;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> wanted;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--all") == 0) {
            for (const auto& c : criteria())
                wanted.push_back(c.first);
        } else if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            wanted.emplace_back(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance --criterion <id> | --all\n");
            return 2;
        }
    }
    if (wanted.empty()) {
        std::fprintf(stderr, "usage: acceptance --criterion <id> | --all\n");
        return 2;
    }
    bool all = true;
    for (const auto& id : wanted) {
        bool found = false;
        for (const auto& [name, fn] : criteria())
            if (name == id) {
                found = true;
                all = run(id, fn) && all;
            }
        if (!found) {
            std::fprintf(stderr, "unknown criterion '%s'\n", id.c_str());
            return 2;
        }
    }
    return all ? 0 : 1;
}
