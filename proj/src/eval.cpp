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

#include "isacfj/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "isacfj/waveform.hpp"

namespace isacfj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

} // namespace

// ------------------------------------------------------------------------
// BLER
// ------------------------------------------------------------------------

BlerResult bler_montecarlo(const ChannelRealization& ch, const BeamformingSolution& beams, const PowerAllocation& pa,
                           double snr_db, int block_len, int trials, Stream& rng)
{
    if (block_len < 1)
        throw Error("bler: block length must be at least 1");
    if (trials < 0)
        throw Error("bler: trial count must be non-negative");
    if (ch.n_sub() != beams.n_sub())
        throw Error("bler: channel and beams differ in subcarrier count");
    const double sigma2 = pa.p_max / from_db(snr_db);
    const double sd = std::sqrt(sigma2);
    const int users = beams.users();
    const int n_sub = beams.n_sub();

    BeamformingSolution b = beams;
    b.pa = pa;

    BlerResult res;
    res.user = RVec::Zero(users);
    res.blocks = static_cast<long long>(trials) * n_sub;
    if (res.blocks == 0)
        return res;

    long long eve_err = 0;
    std::vector<long long> user_err(idx(users), 0);
    for (int n = 0; n < n_sub; ++n) {
        Stream cr = rng.substream(static_cast<std::uint64_t>(n));
        const LinkVectors lv = link_vectors(b, n);
        const CMat& hu = ch.h_users[idx(n)];
        const CMat he = ch.h_eve[idx(n)].adjoint(); // N_e x N_t
        const int ne = static_cast<int>(he.rows());

        const CMat user_gain = hu * lv.desired; // (k, j): h_k^H a_j
        const CMat user_jam = hu * lv.jam;
        const CMat eve_sig = he * lv.desired;   // N_e x K
        const CMat eve_jam = he * lv.jam;

        // Eve's LMMSE combiners w_k = R^-1 a_k, normalized to unit gain.
        CMat r = eve_sig * eve_sig.adjoint() + eve_jam * eve_jam.adjoint();
        r += sigma2 * CMat::Identity(ne, ne);
        const CMat w_raw = r.ldlt().solve(eve_sig);
        CMat w(ne, users);
        for (int k = 0; k < users; ++k) {
            const cplx g = w_raw.col(k).dot(eve_sig.col(k));
            w.col(k) = std::abs(g) > 0.0 ? CVec(w_raw.col(k) / std::conj(g)) : CVec(CVec::Zero(ne));
        }

        std::vector<int> msg(idx(users));
        CVec s(users), eta(lv.jam.cols());
        for (int t = 0; t < trials; ++t) {
            std::vector<bool> u_bad(idx(users), false), e_bad(idx(users), false);
            for (int i = 0; i < block_len; ++i) {
                for (int k = 0; k < users; ++k) {
                    msg[idx(k)] = static_cast<int>(cr.below(4));
                    s(k) = qpsk_map(msg[idx(k)]);
                }
                for (Eigen::Index j = 0; j < eta.size(); ++j)
                    eta(j) = cr.cnormal();
                const CVec yu = user_gain * s + user_jam * eta;
                CVec ye = eve_sig * s + eve_jam * eta;
                for (int m = 0; m < ne; ++m)
                    ye(m) += sd * cr.cnormal();
                for (int k = 0; k < users; ++k) {
                    const cplx y = yu(k) + sd * cr.cnormal();
                    const cplx g = user_gain(k, k);
                    if (g == cplx(0.0, 0.0) || qpsk_demap(y / g) != msg[idx(k)])
                        u_bad[idx(k)] = true;
                    const cplx z = w.col(k).dot(ye);
                    if (w.col(k).squaredNorm() == 0.0 || qpsk_demap(z) != msg[idx(k)])
                        e_bad[idx(k)] = true;
                }
            }
            for (int k = 0; k < users; ++k) {
                user_err[idx(k)] += u_bad[idx(k)] ? 1 : 0;
                eve_err += e_bad[idx(k)] ? 1 : 0;
            }
        }
    }
    for (int k = 0; k < users; ++k)
        res.user(k) = static_cast<double>(user_err[idx(k)]) / static_cast<double>(res.blocks);
    res.eve = static_cast<double>(eve_err) / static_cast<double>(res.blocks * users);
    return res;
}

// ------------------------------------------------------------------------
// Scenarios
// ------------------------------------------------------------------------

void ScenarioConfig::validate() const
{
    geom.validate();
    if (users < 1 || n_sub < 1)
        throw Error("scenario: users and subcarriers must be at least 1");
    if (users >= geom.n_tx)
        throw Error("scenario: need more transmit antennas than users to leave a jamming subspace");
    if (!(noise.sigma_c2 > 0.0 && noise.sigma_e2 > 0.0 && noise.sigma_s2 > 0.0))
        throw Error("scenario: noise powers must be positive");
    if (!(rho_csi >= 0.0))
        throw Error("scenario: CSI error variance must be non-negative");
    if (!(frac_comm_only >= 0.0 && frac_comm_only <= 1.0))
        throw Error("scenario: communication-only fraction must lie in [0, 1]");
    if (!(jam_fraction_init > 0.0 && jam_fraction_init < 1.0))
        throw Error("scenario: initial jamming fraction must lie in (0, 1)");
    if (eve_draws < 1 || pn_draws < 1 || block_len < 1 || bler_blocks < 0)
        throw Error("scenario: invalid draw or block counts");
    if (!(impairments.sigma_pn2 >= 0.0))
        throw Error("scenario: phase-noise variance must be non-negative");
}

Scenario build_scenario(const ScenarioConfig& sc, Stream& rng)
{
    sc.validate();
    Scenario s;
    ProblemInstance& inst = s.inst;
    inst.geom = sc.geom;
    inst.mode = sc.mode;
    inst.power_mode = sc.power_mode;

    inst.ch.sigma_c2 = sc.noise.sigma_c2;
    inst.ch.sigma_e2 = sc.noise.sigma_e2;
    inst.ch.sigma_s2 = sc.noise.sigma_s2;
    inst.ch.alpha = sc.noise.alpha;
    const Stream chan = rng.substream(1);
    const Stream csi = rng.substream(2);
    for (int n = 0; n < sc.n_sub; ++n) {
        Stream cs = chan.substream(static_cast<std::uint64_t>(n));
        ChannelRealization one = gen_rayleigh(sc.geom, sc.users, 1, sc.noise, cs);
        inst.ch.h_users.push_back(std::move(one.h_users.front()));
        inst.ch.h_eve.push_back(std::move(one.h_eve.front()));
    }
    inst.ch.validate();

    inst.csi.rho_csi = sc.rho_csi;
    for (int n = 0; n < sc.n_sub; ++n) {
        ChannelRealization one;
        one.h_users = {inst.ch.h_users[idx(n)]};
        Stream es = csi.substream(static_cast<std::uint64_t>(n));
        CsiEstimate e = apply_csi_error(one, sc.rho_csi, es);
        inst.csi.h_hat.push_back(std::move(e.h_hat.front()));
        inst.csi.delta_h.push_back(std::move(e.delta_h.front()));
    }

    Stream ang = rng.substream(3);
    inst.angles = perturb_angles(AngleState{deg_to_rad(sc.theta_deg), deg_to_rad(sc.phi_deg), 0.0, 0.0,
                                            sc.sigma_theta2, sc.sigma_phi2},
                                 ang);

    if (sc.frac_comm_only > 0.0)
        inst.sense_carriers = nonoverlap_allocate(sc.n_sub, sc.frac_comm_only).sense_mask(sc.n_sub);
    inst.pa = PowerAllocation::uniform(sc.users, sc.n_sub, from_db(sc.p_max_db), sc.jam_fraction_init,
                                       sc.power_mode);
    for (int n = 0; n < sc.n_sub; ++n)
        if (!inst.senses(n)) {
            const double budget = PowerAllocation::subcarrier_budget(inst.pa.p_max, sc.n_sub, sc.power_mode);
            inst.pa.comm_power.col(n).setConstant(budget / sc.users);
            inst.pa.jam_power(n) = 0.0;
        }

    const Stream eve = rng.substream(4);
    for (int d = 0; d < sc.eve_draws; ++d) {
        std::vector<CMat> set;
        for (int n = 0; n < sc.n_sub; ++n) {
            Stream es = eve.substream(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(n));
            set.push_back(gen_eve_channels(sc.geom, 1, es).front());
        }
        s.eve_sets.push_back(std::move(set));
    }
    inst.eve_candidates = s.eve_sets;
    return s;
}

std::vector<double> secrecy_per_eve_set(const Scenario& s, const BeamformingSolution& beams, const RateOptions& opt)
{
    std::vector<double> out;
    EvalOptions eo;
    eo.rates = opt;
    for (const auto& set : s.eve_sets)
        out.push_back(evaluate_rates(s.inst.ch, std::span(&set, 1), beams, eo).sum_secrecy);
    return out;
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw Error("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

TrialRecord evaluate_solution(const ScenarioConfig& sc, const Scenario& s, const TrainResult& tr, Stream& rng)
{
    const ProblemInstance& inst = s.inst;
    const BeamformingSolution beams = sc.fj_enabled ? tr.beams : jamming_off(tr.beams, sc.power_mode);

    EvalOptions eo;
    eo.rates = sc.rates;
    eo.impairments = ImpairmentParams::make(0.0, sc.impairments.eps_iq, sc.impairments.dtheta_iq);
    TrialRecord rec;
    if (sc.impairments.sigma_pn2 > 0.0) {
        Stream pn = rng.substream(1);
        for (int d = 0; d < sc.pn_draws; ++d) {
            Stream ps = pn.substream(static_cast<std::uint64_t>(d));
            eo.antenna_phase = antenna_phase_draw(beams.n_tx(), beams.n_sub(), sc.impairments.sigma_pn2, ps);
            const RateReport rep = evaluate_rates(inst.ch, s.eve_sets, beams, eo);
            rec.sum_secrecy += rep.sum_secrecy / sc.pn_draws;
            rec.worst_user_secrecy += rep.worst_user_secrecy() / sc.pn_draws;
        }
    } else {
        const RateReport rep = evaluate_rates(inst.ch, s.eve_sets, beams, eo);
        rec.sum_secrecy = rep.sum_secrecy;
        rec.worst_user_secrecy = rep.worst_user_secrecy();
    }

    if (sc.bler_blocks > 0) {
        Stream bs = rng.substream(2);
        const double snr_db = to_db(beams.pa.p_max / inst.ch.sigma_c2);
        const BlerResult b = bler_montecarlo(inst.ch, beams, beams.pa, snr_db, sc.block_len, sc.bler_blocks, bs);
        rec.bler_user_mean = b.user.mean();
        rec.bler_eve = b.eve;
    } else {
        rec.bler_user_mean = kNaN;
        rec.bler_eve = kNaN;
    }

    double ct = -std::numeric_limits<double>::infinity(), cp = ct;
    bool any = false;
    for (int n = 0; n < inst.n_sub(); ++n) {
        if (!inst.senses(n) || idx(n) >= tr.fims.size())
            continue;
        any = true;
        ct = std::max(ct, tr.fims[idx(n)].crlb_theta);
        cp = std::max(cp, tr.fims[idx(n)].crlb_phi);
    }
    rec.crlb_theta_db = any ? to_db(ct) : kNaN;
    rec.crlb_phi_db = any ? to_db(cp) : kNaN;
    rec.feasible = tr.feasible;
    return rec;
}

TrialOutcome simulate_trial(const ScenarioConfig& sc, const TrainConfig& cfg, std::uint64_t seed)
{
    Stream rng(seed);
    TrialOutcome out;
    Stream scen = rng.substream(1);
    out.scenario = build_scenario(sc, scen);
    const Stream train = rng.substream(2);
    Stream s1 = train.substream(1);
    out.stage1 = stage1_comm_training(cfg, out.scenario.inst, s1);
    Stream s2 = train.substream(2);
    out.train = finish_training(cfg, out.scenario.inst, out.stage1, s2);
    Stream ev = rng.substream(3);
    out.record = evaluate_solution(sc, out.scenario, out.train, ev);
    return out;
}

// ------------------------------------------------------------------------
// Sweeps
// ------------------------------------------------------------------------

std::string to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::snr_db: return "snr_db";
    case SweepAxis::rho_csi: return "rho_csi";
    case SweepAxis::crlb_budget_db: return "crlb_budget_db";
    case SweepAxis::pn_variance: return "pn_variance";
    case SweepAxis::frac_comm_only: return "frac_comm_only";
    case SweepAxis::n_subcarriers: return "n_subcarriers";
    }
    return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name)
{
    for (SweepAxis a : {SweepAxis::snr_db, SweepAxis::rho_csi, SweepAxis::crlb_budget_db, SweepAxis::pn_variance,
                        SweepAxis::frac_comm_only, SweepAxis::n_subcarriers})
        if (to_string(a) == name)
            return a;
    throw Error("unknown sweep axis '" + name + "'");
}

void SweepSpec::validate() const
{
    if (points.empty())
        throw Error("sweep: no axis points");
    if (trials < 1)
        throw Error("sweep: trials must be at least 1");
    for (double p : points) {
        if (std::isnan(p))
            throw Error("sweep: axis point is NaN");
        if (axis == SweepAxis::n_subcarriers && (p < 1.0 || p != std::floor(p)))
            throw Error("sweep: subcarrier counts must be positive integers");
        if ((axis == SweepAxis::rho_csi || axis == SweepAxis::pn_variance) && p < 0.0)
            throw Error("sweep: variance axis points must be non-negative");
        if (axis == SweepAxis::frac_comm_only && !(p >= 0.0 && p <= 1.0))
            throw Error("sweep: communication-only fractions must lie in [0, 1]");
    }
}

MetricSummary MetricSummary::from(std::vector<double> values)
{
    MetricSummary m;
    m.count = static_cast<int>(values.size());
    m.values = std::move(values);
    if (m.count == 0) {
        m.mean = kNaN;
        return m;
    }
    double sum = 0.0;
    for (double v : m.values)
        sum += v;
    m.mean = sum / m.count;
    if (m.count > 1) {
        double ss = 0.0;
        for (double v : m.values)
            ss += (v - m.mean) * (v - m.mean);
        m.std_error = std::sqrt(ss / (m.count - 1)) / std::sqrt(static_cast<double>(m.count));
    }
    return m;
}

std::uint64_t trial_seed(std::uint64_t master, SweepAxis axis, int trial)
{
    return derive_seed(master, static_cast<std::uint64_t>(axis), static_cast<std::uint64_t>(trial));
}

namespace {

void apply_point(SweepAxis axis, double value, ScenarioConfig& sc, TrainConfig& cfg)
{
    switch (axis) {
    case SweepAxis::snr_db: sc.p_max_db = value; break;
    case SweepAxis::rho_csi: sc.rho_csi = value; break;
    case SweepAxis::crlb_budget_db:
        cfg.crlb0_theta = cfg.crlb0_phi = std::isinf(value) && value > 0 ? value : from_db(value);
        break;
    case SweepAxis::pn_variance: sc.impairments.sigma_pn2 = value; break;
    case SweepAxis::frac_comm_only: sc.frac_comm_only = value; break;
    case SweepAxis::n_subcarriers: sc.n_sub = static_cast<int>(value); break;
    }
}

// Points along these axes share the stage-1 networks of their trial.
bool stage1_shared(SweepAxis axis) { return axis == SweepAxis::crlb_budget_db || axis == SweepAxis::pn_variance; }

std::vector<TrialRecord> run_trial(const SweepSpec& spec, const ScenarioConfig& base_sc, const TrainConfig& base_cfg,
                                   std::uint64_t seed)
{
    std::vector<TrialRecord> out;
    Stream rng(seed);
    std::optional<Stage1Result> shared_s1;
    std::optional<TrainResult> shared_tr;
    for (double value : spec.points) {
        ScenarioConfig sc = base_sc;
        TrainConfig cfg = base_cfg;
        apply_point(spec.axis, value, sc, cfg);
        Stream scen_rng = rng.substream(1);
        const Scenario s = build_scenario(sc, scen_rng);
        const Stream train = rng.substream(2);
        TrainResult tr;
        if (spec.axis == SweepAxis::pn_variance && shared_tr) {
            tr = *shared_tr;
        } else {
            Stream s1rng = train.substream(1);
            if (!stage1_shared(spec.axis) || !shared_s1)
                shared_s1 = stage1_comm_training(cfg, s.inst, s1rng);
            Stream s2rng = train.substream(2);
            tr = finish_training(cfg, s.inst, *shared_s1, s2rng);
            if (spec.axis == SweepAxis::pn_variance)
                shared_tr = tr;
        }
        Stream ev = rng.substream(3);
        out.push_back(evaluate_solution(sc, s, tr, ev));
    }
    return out;
}

} // namespace

ExperimentResult run_sweep(const SweepSpec& spec, const ScenarioConfig& sc, const TrainConfig& cfg, int threads)
{
    spec.validate();
    sc.validate();
    cfg.validate();
    const int trials = spec.trials;
    std::vector<std::vector<TrialRecord>> records(idx(trials));
    std::vector<std::uint64_t> seeds(idx(trials));
    for (int t = 0; t < trials; ++t)
        seeds[idx(t)] = trial_seed(spec.seed, spec.axis, t);

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (int t = next++; t < trials; t = next++) {
            try {
                records[idx(t)] = run_trial(spec, sc, cfg, seeds[idx(t)]);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure)
                    failure = std::current_exception();
                next = trials;
            }
        }
    };
    const int workers = std::clamp(threads, 1, trials);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    ExperimentResult res;
    res.experiment_id = spec.experiment_id;
    res.axis = spec.axis;
    for (std::size_t p = 0; p < spec.points.size(); ++p) {
        PointResult pr;
        pr.axis_value = spec.points[p];
        pr.seeds = seeds;
        std::vector<double> ss, wu, bu, be, ct, cp;
        for (int t = 0; t < trials; ++t) {
            const TrialRecord& r = records[idx(t)][p];
            pr.trials.push_back(r);
            ss.push_back(r.sum_secrecy);
            wu.push_back(r.worst_user_secrecy);
            bu.push_back(r.bler_user_mean);
            be.push_back(r.bler_eve);
            ct.push_back(r.crlb_theta_db);
            cp.push_back(r.crlb_phi_db);
            pr.feasible = pr.feasible || r.feasible;
        }
        pr.sum_secrecy = MetricSummary::from(std::move(ss));
        pr.worst_user_secrecy = MetricSummary::from(std::move(wu));
        pr.bler_user = MetricSummary::from(std::move(bu));
        pr.bler_eve = MetricSummary::from(std::move(be));
        pr.crlb_theta_db = MetricSummary::from(std::move(ct));
        pr.crlb_phi_db = MetricSummary::from(std::move(cp));
        res.points.push_back(std::move(pr));
    }
    return res;
}

ExperimentResult crlb_secrecy_tradeoff(const SweepSpec& spec, const ScenarioConfig& sc, const TrainConfig& cfg,
                                       int threads)
{
    if (spec.axis != SweepAxis::crlb_budget_db)
        throw Error("CRLB trade-off needs the crlb_budget_db axis");
    return run_sweep(spec, sc, cfg, threads);
}

// ------------------------------------------------------------------------
// CSV
// ------------------------------------------------------------------------

void write_results_csv(std::ostream& out, const ExperimentResult& res, bool header)
{
    if (header)
        out << kResultsHeader << '\n';
    const std::string axis = to_string(res.axis);
    for (const auto& p : res.points)
        for (std::size_t t = 0; t < p.trials.size(); ++t) {
            const TrialRecord& r = p.trials[t];
            out << res.experiment_id << ',' << axis << ',' << fmt(p.axis_value) << ',' << t << ',' << p.seeds[t]
                << ',' << fmt(r.sum_secrecy) << ',' << fmt(r.worst_user_secrecy) << ',' << fmt(r.bler_user_mean)
                << ',' << fmt(r.bler_eve) << ',' << fmt(r.crlb_theta_db) << ',' << fmt(r.crlb_phi_db) << ','
                << (r.feasible ? 1 : 0) << '\n';
        }
}

void write_results_csv(const std::string& path, const ExperimentResult& res)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("results: cannot open '" + path + "'");
    write_results_csv(out, res);
    if (!out)
        throw Error("results: write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

double parse_double(const std::string& s, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw Error("");
        return v;
    } catch (...) {
        throw Error(where + ": not a number: '" + s + "'");
    }
}

} // namespace

std::vector<ResultRow> read_results_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("results: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw Error(path + ":1: unexpected header");
    std::vector<ResultRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto c = split_csv(line);
        if (c.size() != 12)
            throw Error(where + ": expected 12 columns, found " + std::to_string(c.size()));
        ResultRow r;
        r.experiment_id = c[0];
        r.axis_name = c[1];
        r.axis_value = parse_double(c[2], where);
        r.trial = static_cast<int>(parse_double(c[3], where));
        try {
            r.seed = std::stoull(c[4]);
        } catch (...) {
            throw Error(where + ": bad seed '" + c[4] + "'");
        }
        r.record.sum_secrecy = parse_double(c[5], where);
        r.record.worst_user_secrecy = parse_double(c[6], where);
        r.record.bler_user_mean = parse_double(c[7], where);
        r.record.bler_eve = parse_double(c[8], where);
        r.record.crlb_theta_db = parse_double(c[9], where);
        r.record.crlb_phi_db = parse_double(c[10], where);
        if (c[11] != "0" && c[11] != "1")
            throw Error(where + ": feasible must be 0 or 1");
        r.record.feasible = c[11] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_summary(std::ostream& out, const std::vector<ResultRow>& rows)
{
    using Key = std::tuple<std::string, std::string, double>;
    std::vector<Key> order;
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        Key k{r.experiment_id, r.axis_name, r.axis_value};
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh)
            order.push_back(k);
        it->second.push_back(&r);
    }
    out << "experiment_id,axis_name,axis_value,trials,sum_secrecy_mean,sum_secrecy_se,worst_user_secrecy_mean,"
           "worst_user_secrecy_se,bler_user_mean,bler_eve_mean,crlb_theta_db_mean,crlb_phi_db_mean,"
           "feasible_fraction\n";
    for (const auto& k : order) {
        const auto& g = groups[k];
        auto collect = [&](auto field) {
            std::vector<double> v;
            for (const ResultRow* r : g)
                v.push_back(field(r->record));
            return MetricSummary::from(std::move(v));
        };
        const auto ss = collect([](const TrialRecord& r) { return r.sum_secrecy; });
        const auto wu = collect([](const TrialRecord& r) { return r.worst_user_secrecy; });
        const auto bu = collect([](const TrialRecord& r) { return r.bler_user_mean; });
        const auto be = collect([](const TrialRecord& r) { return r.bler_eve; });
        const auto ct = collect([](const TrialRecord& r) { return r.crlb_theta_db; });
        const auto cp = collect([](const TrialRecord& r) { return r.crlb_phi_db; });
        const auto fe = collect([](const TrialRecord& r) { return r.feasible ? 1.0 : 0.0; });
        out << std::get<0>(k) << ',' << std::get<1>(k) << ',' << fmt(std::get<2>(k)) << ',' << g.size() << ','
            << fmt(ss.mean) << ',' << fmt(ss.std_error) << ',' << fmt(wu.mean) << ',' << fmt(wu.std_error) << ','
            << fmt(bu.mean) << ',' << fmt(be.mean) << ',' << fmt(ct.mean) << ',' << fmt(cp.mean) << ','
            << fmt(fe.mean) << '\n';
    }
}

} // namespace isacfj
